"""Ensemble diagnostics: moment curves, power-law fits, PDFs, KS distances, scale estimates."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

from .dynamics import TrajectoryEnsemble
from .errors import FitError
from .noise import NoiseKind, fractional_abs_moment

N_BOOTSTRAP = 200


class HCase(str, enum.Enum):
    STABLE = "stable"
    GAUSSIAN = "gaussian"


@dataclass
class MomentCurve:
    times: np.ndarray
    values: np.ndarray
    beta: float
    stderr: np.ndarray
    unstable: bool = False


@dataclass
class SlopeFit:
    exponent: float
    log_intercept: float
    window: tuple[float, float]
    r_squared: float


@dataclass
class PdfEstimate:
    bin_edges: np.ndarray
    densities: np.ndarray
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


@dataclass
class ScalingSweep:
    etas: np.ndarray
    sigma_bars: np.ndarray
    fitted_lambda: float
    fitted_eta_exponent: float
    H: float
    lambdas: np.ndarray = field(default_factory=lambda: np.empty(0))
    predicted_eta_exponent: float = float("nan")


def bootstrap_stderr(samples: np.ndarray, seed: int, n_boot: int = N_BOOTSTRAP) -> np.ndarray:
    """Bootstrap standard error of the mean over the last axis."""
    samples = np.atleast_2d(samples)
    n = samples.shape[-1]
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0xB007])
    means = np.empty((n_boot, samples.shape[0]))
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        means[b] = samples[:, idx].mean(axis=1)
    return means.std(axis=0, ddof=1)


def moment_curve_from_samples(times, samples: np.ndarray, beta: float, seed: int = 0, unstable: bool = False) -> MomentCurve:
    """``samples[i]`` are the magnitudes ``|X|`` at ``times[i]``."""
    powered = np.abs(samples) ** beta
    return MomentCurve(
        np.asarray(times, dtype=float),
        powered.mean(axis=1),
        beta,
        bootstrap_stderr(powered, seed),
        unstable,
    )


def abs_moment_curve(ensemble: TrajectoryEnsemble, beta: float = 1.0) -> MomentCurve:
    """``E|X_t|^beta`` at every recorded time with bootstrap error bars."""
    if not beta > 0:
        raise FitError("beta must be > 0")
    noise = ensemble.config.noise
    unstable = noise.kind is NoiseKind.STABLE and noise.alpha < 2.0 and beta >= noise.alpha
    radii = np.hypot(ensemble.positions[..., 0], ensemble.positions[..., 1])
    return moment_curve_from_samples(ensemble.times, radii, beta, ensemble.config.seed, unstable)


def fit_loglog_slope(curve: MomentCurve, window: tuple[float, float]) -> SlopeFit:
    """Least squares of ``log value`` on ``log t`` for ``t`` inside ``window``."""
    t_min, t_max = window
    if not t_min < t_max:
        raise FitError("window must satisfy t_min < t_max")
    t = np.asarray(curve.times)
    sel = (t >= t_min * (1 - 1e-12)) & (t <= t_max * (1 + 1e-12))
    if sel.sum() < 5:
        raise FitError(f"need at least 5 points in window {window}, found {int(sel.sum())}")
    v = np.asarray(curve.values)[sel]
    if np.any(~(v > 0)) or np.any(~(t[sel] > 0)):
        raise FitError("log-log fit needs positive times and values")
    lx, ly = np.log(t[sel]), np.log(v)
    xm, ym = lx.mean(), ly.mean()
    sxx = np.sum((lx - xm) ** 2)
    slope = np.sum((lx - xm) * (ly - ym)) / sxx
    intercept = ym - slope * xm
    resid = ly - (intercept + slope * lx)
    sst = np.sum((ly - ym) ** 2)
    r2 = 1.0 if sst == 0 else 1.0 - np.sum(resid**2) / sst
    return SlopeFit(float(slope), float(intercept), (float(t_min), float(t_max)), float(min(1.0, max(0.0, r2))))


def default_windows(times: Sequence[float]) -> dict[str, tuple[float, float]]:
    """Fit windows: first half-decade (transient) and last decade (asymptotic)."""
    t = np.asarray(times, dtype=float)
    t = t[t > 0]
    lo, hi = float(t[0]), float(t[-1])
    return {"early": (lo, lo * 10**0.5), "late": (hi / 10.0, hi), "full": (lo, hi)}


def estimate_pdf(samples, n_bins: int = 60) -> PdfEstimate:
    """Histogram on the 0.1%-99.9% quantile range, normalised to unit integral."""
    x = np.asarray(samples, dtype=float).ravel()
    if n_bins < 10:
        raise FitError("n_bins must be >= 10")
    if x.size < 100:
        raise FitError("need at least 100 samples")
    lo, hi = np.quantile(x, [0.001, 0.999])
    if not hi > lo:
        raise FitError("samples have zero spread")
    edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    dens = counts / (counts.sum() * np.diff(edges))
    return PdfEstimate(edges, dens, int(x.size))


def project_samples(ensemble: TrajectoryEnsemble, theta: float, t: float) -> np.ndarray:
    """``X_t . (cos theta, sin theta)`` for every particle."""
    pos = ensemble.at(t)
    return pos[:, 0] * math.cos(theta) + pos[:, 1] * math.sin(theta)


def ks_distance(samples, cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance against ``cdf``.

    ``cdf`` is tried on the whole sorted array first, then element-wise.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 1:
        raise FitError("need at least one sample")
    try:
        f = np.asarray(cdf(x), dtype=float)
        if f.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        f = np.array([float(cdf(v)) for v in x])
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    return float(max(d_plus, d_minus))


def ks_two_sample(a, b) -> float:
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def sigma_bar_from_mean_abs(mean_abs: float, h_case: HCase, t: float, alpha: float, beta: float = 1.0) -> float:
    """Invert the absolute moment of order ``beta`` of a 1-D projection.

    STABLE: the scale parameter of the projected law (the multiplier of a
    standard process is its ``1/alpha`` power). GAUSSIAN: the standard
    deviation multiplier of a standard Brownian motion. ``mean_abs`` is
    the sample mean of ``|X_t . e|^beta``.
    """
    if not (mean_abs > 0 and t > 0):
        raise FitError("mean |X|^beta and t must be positive")
    if HCase(h_case) is HCase.STABLE:
        if beta == 1.0:
            return float((mean_abs * math.pi / (2.0 * special.gamma(1.0 - 1.0 / alpha))) ** alpha / t)
        coeff = fractional_abs_moment(alpha, 1.0, beta, 1.0, 1)
        return float((mean_abs / coeff) ** (alpha / beta) / t)
    if beta == 1.0:
        return float(mean_abs * math.sqrt(math.pi / 2.0) / math.sqrt(t))
    coeff = 2.0 ** (beta / 2.0) * special.gamma((beta + 1.0) / 2.0) / math.sqrt(math.pi)
    return float((mean_abs / coeff) ** (1.0 / beta) / math.sqrt(t))


def estimate_sigma_bar(ensemble: TrajectoryEnsemble, h_case: HCase, t: float, beta: float = 1.0) -> float:
    """Scale of the limiting law from the mean ``|X_t . e1|^beta`` (default: first moment).

    For STABLE drivers ``beta < alpha`` is required; ``beta < alpha/2`` gives
    a sample moment with finite variance.
    """
    alpha = ensemble.config.noise.alpha
    if HCase(h_case) is HCase.STABLE and not 0 < beta < alpha:
        raise FitError(f"beta={beta} needs 0 < beta < alpha for a stable limit")
    proj = project_samples(ensemble, 0.0, t)
    return sigma_bar_from_mean_abs(float(np.mean(np.abs(proj) ** beta)), h_case, t, alpha, beta)


def scaling_prefactor(eta, u: float, tau: float, alpha: float, H: float):
    """``u^(alpha/H) eta^(1-alpha/H) tau^((alpha-1)/H)``."""
    return u ** (alpha / H) * np.asarray(eta, dtype=float) ** (1.0 - alpha / H) * tau ** ((alpha - 1.0) / H)


def fit_lambda(sweep_data: Sequence[tuple[float, float]], u: float, tau: float, alpha: float, H: float) -> ScalingSweep:
    """Fit the eta-exponent of ``sigma_bar(eta)`` and the prefactor ``lambda``."""
    pts = sorted(((float(e), float(s)) for e, s in sweep_data), reverse=True)
    etas = np.array([p[0] for p in pts])
    sig = np.array([p[1] for p in pts])
    if np.unique(etas).size < 3:
        raise FitError("need at least 3 distinct eta values")
    if np.any(~(sig > 0)) or np.any(~(etas > 0)):
        raise FitError("eta and sigma_bar must be positive")
    if np.any(np.diff(etas) >= 0):
        raise FitError("eta values must be distinct")
    slope = np.polyfit(np.log(etas), np.log(sig), 1)[0]
    lambdas = sig / scaling_prefactor(etas, u, tau, alpha, H)
    lam = float(np.exp(np.mean(np.log(lambdas))))
    return ScalingSweep(etas, sig, lam, float(slope), float(H), lambdas, 1.0 - alpha / H)


def balanced_velocity(eta: float, tau: float, alpha: float, H: float) -> float:
    """Mean velocity making ``u^(alpha/H) eta^(1-alpha/H) tau^((alpha-1)/H)`` equal to 1."""
    return float((eta ** (-(1.0 - alpha / H)) * tau ** (-(alpha - 1.0) / H)) ** (H / alpha))
