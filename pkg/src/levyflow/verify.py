"""Self-contained oracle suite behind the ``verify`` experiment."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special
from scipy import stats as sps

from .dynamics import ModeOrder, SimConfig, mode_flow_oracle, mode_jump_map, run_ensemble
from .field import ModeSet, WaveMode, build_mode_set, normalization_constant, spatial_average, spatial_average_closed_form
from .noise import (
    NoiseSpec,
    fractional_abs_moment,
    increments,
    levy_constant,
    max_tempered_step,
    stable_cdf,
    stable_cdf_fast,
    stable_density,
    tempered_variance_rate,
    truncated_variance_rate,
)
from .rng import DrawSite, philox4x32, stream_id
from .stats import (
    HCase,
    MomentCurve,
    estimate_pdf,
    fit_lambda,
    fit_loglog_slope,
    ks_distance,
    scaling_prefactor,
    sigma_bar_from_mean_abs,
)

ALPHA = 1.5
VERIFY_TAG = 7

# Random123 known-answer vectors for Philox4x32-10: (counter, key, expected)
PHILOX_KAT = (
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF, 0xFFFFFFFF), (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
)


@dataclass
class CheckResult:
    name: str
    value: float
    target: float
    tolerance: float
    passed: bool
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{mark}] {self.name}: value={self.value:.6g} target={self.target:.6g} tol={self.tolerance:.3g}{extra}"


def _within(value, target, tol) -> bool:
    return bool(np.isfinite(value) and abs(value - target) <= tol)


def _draws(spec: NoiseSpec, dt: float, n: int, seed: int, slot: int) -> np.ndarray:
    site = DrawSite.build(seed, stream_id(np.arange(n), slot, tag=VERIFY_TAG), 0)
    return increments(spec, dt, site)


def check_levy_constant(seed):
    closed = 1.0 / (2.0 * (-special.gamma(-ALPHA) * math.cos(math.pi * ALPHA / 2.0)))
    v = levy_constant(ALPHA)
    return v, closed, 1e-9, _within(v, closed, 1e-9), ""


def check_fractional_moment(seed):
    v = fractional_abs_moment(ALPHA, 1.0, 1.0, 1.0, 1)
    return v, 1.70548, 1e-4, _within(v, 1.70548, 1e-4), "2 Gamma(1/3)/pi"


def check_spatial_average_two(seed):
    v = spatial_average(2.0)
    return v, 0.5, 1e-12, _within(v, 0.5, 1e-12), ""


def check_spatial_average(seed):
    v = spatial_average(ALPHA)
    closed = spatial_average_closed_form(ALPHA)
    ok = _within(v, 0.5564, 1e-4) and abs(v - closed) < 1e-10
    return v, 0.5564, 1e-4, ok, f"closed form {closed:.10f}"


def check_card(seed):
    v = len(build_mode_set(2.0 * math.pi / 20.0))
    return float(v), 28.0, 0.0, v == 28, "Card K_eta at eta=2pi/20"


def check_philox(seed):
    bad = 0
    for ctr, key, want in PHILOX_KAT:
        got = tuple(int(w) for w in philox4x32(*ctr, *key))
        bad += got != want
    return float(bad), 0.0, 0.0, bad == 0, "known-answer vectors mismatching"


def check_density_anchor(seed):
    v = stable_density(ALPHA, 1.0, 0.0)
    target = special.gamma(1.0 + 1.0 / ALPHA) / math.pi
    return v, target, 1e-8, _within(v, target, 1e-8), "f(0) = Gamma(1+1/alpha)/pi"


def check_gaussian_limit(seed):
    x = np.array([-3.0, -1.0, 0.0, 0.5, 2.0])
    err = float(np.max(np.abs(stable_cdf(2.0, 1.0, x) - sps.norm.cdf(x, scale=math.sqrt(2.0)))))
    return err, 0.0, 1e-8, err <= 1e-8, "alpha=2 cdf vs N(0, 2)"


def check_cms_moment(seed):
    z = _draws(NoiseSpec(kind="stable", alpha=ALPHA), 1.0, 100_000, seed, 1)
    v = float(np.mean(np.abs(z) ** 0.5))
    target = fractional_abs_moment(ALPHA, 1.0, 0.5, 1.0, 1)
    return v, target, 0.02 * target, _within(v, target, 0.02 * target), "E|Z_1|^0.5, N=1e5"


def check_cms_ks(seed):
    z = _draws(NoiseSpec(kind="stable", alpha=ALPHA), 1.0, 100_000, seed, 2)
    v = ks_distance(z, lambda x: stable_cdf_fast(ALPHA, 1.0, x))
    return v, 0.0, 0.02, v < 0.02, "KS vs stable cdf, N=1e5"


def check_tempered_variance(seed):
    spec = NoiseSpec(kind="tempered", alpha=ALPHA)
    dt = max_tempered_step(spec)
    z = _draws(spec, dt, 100_000, seed, 3)
    v = float(np.var(z) / dt)
    target = tempered_variance_rate(spec)
    return v, target, 0.05 * target, _within(v, target, 0.05 * target), f"dt={dt:.3g}"


def check_truncated_variance(seed):
    spec = NoiseSpec(kind="truncated", alpha=ALPHA)
    dt = 1e-5
    z = _draws(spec, dt, 100_000, seed, 4)
    v = float(np.var(z) / dt)
    target = truncated_variance_rate(spec)
    return v, target, 0.05 * target, _within(v, target, 0.05 * target), f"dt={dt:.3g}"


def _random_triples(seed, n):
    """Modes from the sweep shells, ``x`` in a period cell, ``|amplitude| <= 1``."""
    rng = np.random.default_rng([seed, 11])
    pool = [m for d in (10, 14, 20, 28, 40) for m in build_mode_set(2.0 * math.pi / d).modes]
    modes = [pool[i] for i in rng.integers(0, len(pool), size=n)]
    xs = rng.uniform(-math.pi, math.pi, size=(n, 2))
    amps = rng.uniform(-1.0, 1.0, size=n)
    return modes, xs, amps


def check_jump_map_oracle(seed):
    modes, xs, amps = _random_triples(seed, 1000)
    err = max(
        float(np.max(np.abs(mode_jump_map(m, x, a) - mode_flow_oracle(m, x, a, 8))))
        for m, x, a in zip(modes, xs, amps)
    )
    return err, 0.0, 1e-10, err <= 1e-10, "1000 random (mode, x, amplitude)"


def check_inverse_composition(seed):
    modes, xs, amps = _random_triples(seed + 1, 1000)
    err = max(
        float(np.max(np.abs(mode_jump_map(m, mode_jump_map(m, x, a), -a) - x)))
        for m, x, a in zip(modes, xs, amps)
    )
    return err, 0.0, 1e-14, err <= 1e-14, "a then -a"


def check_jacobian(seed):
    modes, xs, amps = _random_triples(seed + 2, 1000)
    h = 1e-6
    worst = 0.0
    for m, x, a in zip(modes, xs, amps):
        cols = [
            (mode_jump_map(m, x + h * e, a) - mode_jump_map(m, x - h * e, a)) / (2 * h)
            for e in np.eye(2)
        ]
        worst = max(worst, abs(np.linalg.det(np.column_stack(cols)) - 1.0))
    return worst, 0.0, 1e-6, worst <= 1e-6, "central differences"


def check_ks_separation(seed):
    x = np.random.default_rng([seed, 12]).standard_normal(10_000)
    own = ks_distance(x, sps.norm.cdf)
    wide = ks_distance(x, lambda v: sps.norm.cdf(v, scale=2.0))
    ok = own < 1.63 / math.sqrt(x.size) and wide > 0.15
    return wide, 0.1585, 0.03, ok, f"self-distance {own:.4f}"


def check_slope_fit(seed):
    t = np.geomspace(1e-3, 1.0, 20)
    fit = fit_loglog_slope(MomentCurve(t, 3.0 * t ** (2.0 / 3.0), 1.0, np.zeros_like(t)), (1e-3, 1.0))
    err = max(abs(fit.exponent - 2.0 / 3.0), abs(fit.log_intercept - math.log(3.0)))
    return err, 0.0, 1e-12, err <= 1e-12 and fit.r_squared > 1 - 1e-12, "3 t^(2/3)"


def check_sigma_bar(seed):
    g = sigma_bar_from_mean_abs(math.sqrt(2.0 / math.pi), HCase.GAUSSIAN, 1.0, ALPHA)
    s = sigma_bar_from_mean_abs(fractional_abs_moment(ALPHA, 1.0, 1.0, 1.0), HCase.STABLE, 1.0, ALPHA)
    err = max(abs(g - 1.0), abs(s - 1.0))
    return err, 0.0, 1e-12, err <= 1e-12, "Gaussian and stable inversions"


def check_fit_lambda(seed):
    etas = 2.0 * math.pi / np.array([10.0, 14.0, 20.0, 28.0, 40.0])
    sig = 2.0 * scaling_prefactor(etas, 1.0, 1.0, ALPHA, 2.0)
    sw = fit_lambda(list(zip(etas, sig)), 1.0, 1.0, ALPHA, 2.0)
    err = max(abs(sw.fitted_lambda - 2.0), abs(sw.fitted_eta_exponent - 0.25))
    return err, 0.0, 1e-10, err <= 1e-10, "synthetic sweep"


def check_pdf_gaussian(seed):
    x = np.random.default_rng([seed, 13]).standard_normal(100_000)
    est = estimate_pdf(x, 60)
    dev = float(np.max(np.abs(est.densities - sps.norm.pdf(est.centers))))
    area = float(np.sum(est.densities * est.widths))
    return dev, 0.0, 0.02, dev < 0.02 and abs(area - 1.0) < 1e-12, f"area {area:.15f}"


def check_single_mode_transport(seed):
    eta = 0.5
    cfg = SimConfig.model_validate({
        "field": {"eta": eta},
        "noise": {"kind": "stable", "alpha": ALPHA},
        "horizon": 1.0,
        "dt": 1e-2,
        "n_particles": 10_000,
        "seed": seed,
        "mode_order": ModeOrder.FIXED_LEX,
        "record_times": [0.0, 1.0],
    })
    modes = ModeSet(eta, (WaveMode.of(2, 0),))
    ens = run_ensemble(cfg, workers=1, modes=modes)
    c = normalization_constant(eta, 1.0, ALPHA, card=1)
    scale = (c * math.sqrt(2.0)) ** ALPHA
    v = ks_distance(ens.positions[-1, :, 1], lambda x: stable_cdf_fast(ALPHA, scale, x))
    return v, 0.0, 0.02, v < 0.02, "k=(2,0) mode, X_1 . e2 vs stable law"


def check_worker_invariance(seed):
    cfg = SimConfig.model_validate({
        "field": {"eta": 2.0 * math.pi / 10.0},
        "noise": {"kind": "truncated", "alpha": ALPHA},
        "horizon": 0.1,
        "dt": 1e-2,
        "n_particles": 37,
        "seed": seed,
    })
    a = run_ensemble(cfg, workers=1).positions
    b = run_ensemble(cfg, workers=3).positions
    diff = float(np.max(np.abs(a - b)))
    return diff, 0.0, 0.0, bool(np.array_equal(a, b)), "1 vs 3 workers"


CHECKS: list[tuple[str, Callable]] = [
    ("levy_constant_closed_form", check_levy_constant),
    ("fractional_abs_moment_anchor", check_fractional_moment),
    ("spatial_average_alpha2", check_spatial_average_two),
    ("spatial_average_alpha1.5", check_spatial_average),
    ("mode_shell_cardinality", check_card),
    ("philox_known_answers", check_philox),
    ("stable_density_at_zero", check_density_anchor),
    ("stable_cdf_gaussian_limit", check_gaussian_limit),
    ("cms_fractional_moment", check_cms_moment),
    ("cms_ks_distance", check_cms_ks),
    ("tempered_variance", check_tempered_variance),
    ("truncated_variance", check_truncated_variance),
    ("jump_map_vs_rk4_oracle", check_jump_map_oracle),
    ("jump_map_inverse", check_inverse_composition),
    ("jump_map_jacobian", check_jacobian),
    ("ks_distance_separation", check_ks_separation),
    ("loglog_fit_exact", check_slope_fit),
    ("sigma_bar_inversion", check_sigma_bar),
    ("fit_lambda_exact", check_fit_lambda),
    ("pdf_gaussian_histogram", check_pdf_gaussian),
    ("single_mode_transport_law", check_single_mode_transport),
    ("worker_count_invariance", check_worker_invariance),
]


def run_checks(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            value, target, tol, ok, detail = fn(seed)
        except Exception as exc:  # a crashing check is a failed check
            value, target, tol, ok, detail = math.nan, math.nan, math.nan, False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, float(value), float(target), float(tol), bool(ok), time.perf_counter() - t0, detail))
    return out
