"""Experiment suites: simulate, reduce, and write tables, figures and a manifest."""
from __future__ import annotations

import hashlib
import json
import logging
import math
import platform
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pydantic
import scipy
import yaml
from scipy import stats as sps

from . import __version__
from .config import Experiment, RunConfig, config_to_dict
from .dynamics import SimConfig, TrajectoryEnsemble, run_ensemble, save_ensemble, write_csv
from .errors import ConfigError, FitError
from .field import build_mode_set
from .noise import (
    NoiseKind,
    NoiseSpec,
    crossover_time,
    sample_at_times,
    simulate_noise_path,
    stable_cdf_fast,
    stable_density,
)
from .rng import RngStream, stream_id
from .stats import (
    HCase,
    MomentCurve,
    SlopeFit,
    abs_moment_curve,
    balanced_velocity,
    default_windows,
    estimate_pdf,
    estimate_sigma_bar,
    fit_lambda,
    fit_loglog_slope,
    ks_distance,
    ks_two_sample,
    moment_curve_from_samples,
    project_samples,
)
from .svg import Axes, Panel, Series, emit_svg, emit_svg_panels
from .verify import run_checks

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
NOISE_TAG = 1
PATH_TAG = 2
EARLY_PER_DECADE = 128
LATE_PER_DECADE = 8
STABLE_PER_DECADE = 64


@dataclass
class ExperimentResult:
    status: int
    output_dir: Path
    files: list[str] = field(default_factory=list)
    report: list[str] = field(default_factory=list)


class _Staging:
    """Collects outputs in a scratch directory; files move into place only on success."""

    def __init__(self, target: Path):
        self.target = target
        target.parent.mkdir(parents=True, exist_ok=True)
        self.dir = Path(tempfile.mkdtemp(prefix=".levyflow-", dir=target.parent))
        self.tables: dict[str, dict] = {}

    def path(self, name: str) -> Path:
        return self.dir / name

    def text(self, name: str, content: str) -> None:
        self.path(name).write_text(content, encoding="utf-8", newline="\n")

    def table(self, name: str, header, columns, description: str) -> None:
        write_csv(self.path(name), header, columns)
        self.tables[name] = {"columns": list(header), "description": description}

    def commit(self, manifest: dict) -> list[str]:
        for name, meta in sorted(self.tables.items()):
            side = Path(name).with_suffix(".json").name
            doc = {"table": name, "source_manifest": MANIFEST, **meta}
            self.text(side, json.dumps(doc, indent=2, sort_keys=True) + "\n")
        names = sorted(p.name for p in self.dir.iterdir())
        manifest["files"] = [
            {"name": n, "sha256": hashlib.sha256(self.path(n).read_bytes()).hexdigest(), "bytes": self.path(n).stat().st_size}
            for n in names
        ]
        self.text(MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        _clear_previous(self.target)
        self.target.mkdir(parents=True, exist_ok=True)
        for n in names + [MANIFEST]:
            shutil.move(str(self.path(n)), str(self.target / n))
        self.discard()
        return names

    def discard(self) -> None:
        shutil.rmtree(self.dir, ignore_errors=True)


def _clear_previous(target: Path) -> None:
    """Remove the files of an earlier run; refuse to mix with foreign files."""
    if not target.exists():
        return
    entries = [p for p in target.iterdir()]
    if not entries:
        return
    manifest = target / MANIFEST
    if not manifest.exists():
        raise ConfigError(f"output_dir: {target} is not empty and holds no {MANIFEST}")
    listed = {f["name"] for f in json.loads(manifest.read_text(encoding="utf-8")).get("files", [])}
    foreign = [p.name for p in entries if p.name not in listed and p.name != MANIFEST]
    if foreign:
        raise ConfigError(f"output_dir: {target} holds files not produced by a previous run: {foreign[:3]}")
    for p in entries:
        p.unlink()


def _versions() -> dict:
    return {
        "levyflow": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "pyyaml": yaml.__version__,
    }


def h_case_of(noise: NoiseSpec) -> tuple[HCase, float]:
    if noise.kind is NoiseKind.STABLE:
        return HCase.STABLE, noise.alpha
    return HCase.GAUSSIAN, 2.0


# ---------------------------------------------------------------------------
# shared reductions


def _fit_all(curve: MomentCurve, windows: dict[str, tuple[float, float]]) -> dict[str, Optional[SlopeFit]]:
    fits = {}
    for name, win in windows.items():
        try:
            fits[name] = fit_loglog_slope(curve, win)
        except FitError as exc:
            logger.info("fit window %s skipped: %s", name, exc)
            fits[name] = None
    return fits


def _slope_column(curve: MomentCurve, fits: dict, order: list[str]) -> np.ndarray:
    col = np.full(curve.times.size, np.nan)
    for name in reversed(order):
        f = fits.get(name)
        if f is None:
            continue
        lo, hi = f.window
        inside = (curve.times >= lo * (1 - 1e-12)) & (curve.times <= hi * (1 + 1e-12))
        col[inside] = f.exponent
    return col


def _write_curve(st: _Staging, stem: str, curve: MomentCurve, fits: dict, order: list[str], what: str) -> None:
    st.table(
        f"{stem}.csv",
        ["t", "moment", "stderr", "fitted_slope"],
        [curve.times, curve.values, curve.stderr, _slope_column(curve, fits, order)],
        f"{what}; fitted_slope is the exponent of the first window in {order} containing t (nan if none)",
    )
    names = [n for n in fits]
    st.table(
        f"{stem}_slope_fits.csv",
        ["window", "t_min", "t_max", "exponent", "log_intercept", "r_squared"],
        [
            np.array(names, dtype=object),
            np.array([fits[n].window[0] if fits[n] else np.nan for n in names]),
            np.array([fits[n].window[1] if fits[n] else np.nan for n in names]),
            np.array([fits[n].exponent if fits[n] else np.nan for n in names]),
            np.array([fits[n].log_intercept if fits[n] else np.nan for n in names]),
            np.array([fits[n].r_squared if fits[n] else np.nan for n in names]),
        ],
        f"log-log least-squares fits of {stem}.csv",
    )


def _curve_svg(curve: MomentCurve, fits: dict, alpha: float, title: str, ylabel: str) -> str:
    ok = curve.values > 0
    series = [Series(f"E|.|^{curve.beta:g}", curve.times[ok], curve.values[ok])]
    anchor_t, anchor_v = curve.times[ok][-1], curve.values[ok][-1]
    t = curve.times[ok]
    for label, p in ((f"slope 1/alpha={1 / alpha:.3g}", curve.beta / alpha), ("slope 1/2", curve.beta / 2)):
        series.append(Series(label, t, anchor_v * (t / anchor_t) ** p, "dashed"))
    return emit_svg(series, Axes.LOGLOG, title, "t", ylabel)


def noise_moment_times(spec: NoiseSpec, horizon: float = 1.0) -> tuple[np.ndarray, dict[str, tuple[float, float]]]:
    """Sample times and fit windows for the driver's first-moment curve.

    STABLE: two decades ending at ``horizon``. Otherwise six decades around
    the stable/Gaussian crossover time, dense over the first half-decade.
    """
    if spec.kind is NoiseKind.STABLE:
        lo, hi = horizon / 100.0, horizon
        t = np.geomspace(lo, hi, 2 * STABLE_PER_DECADE + 1)
    else:
        tx = crossover_time(spec)
        lo, hi = tx * 1e-2, tx * 1e4
        mid = lo * 10**0.5
        early = np.geomspace(lo, mid, EARLY_PER_DECADE // 2 + 1)
        late = np.geomspace(mid, hi, int(round(math.log10(hi / mid) * LATE_PER_DECADE)) + 1)[1:]
        t = np.concatenate([early, late])
    windows = {"full": (lo, hi), "early": (lo, lo * 10**0.5), "late": (hi / 10.0, hi)}
    return np.concatenate([[0.0], t]), windows


# ---------------------------------------------------------------------------
# suites


def _noise_paths(cfg: RunConfig, st: _Staging, meta: dict) -> None:
    sim = cfg.sim
    spec = sim.noise
    times, windows = noise_moment_times(spec, sim.horizon)
    z = sample_at_times(spec, times, sim.n_particles, sim.seed, tag=NOISE_TAG, independent=True)
    unstable = spec.kind is NoiseKind.STABLE and cfg.moment_beta >= spec.alpha
    curve = moment_curve_from_samples(times[1:], np.abs(z[1:]), cfg.moment_beta, sim.seed, unstable)
    fits = _fit_all(curve, windows)
    order = ["full"] if spec.kind is NoiseKind.STABLE else ["early", "late"]
    _write_curve(st, "moment_curve", curve, fits, order, f"E|Z_t|^beta of the driver, independent samples per t (beta={cfg.moment_beta:g})")
    st.text("moment_curve.svg", _curve_svg(curve, fits, spec.alpha, f"{spec.kind.value} driver", "E|Z_t|"))

    paths = []
    for p in range(cfg.n_sample_paths):
        rng = RngStream(sim.seed, int(stream_id(p, 0, tag=PATH_TAG)))
        paths.append(simulate_noise_path(spec, sim.horizon, sim.dt, rng))
    if paths:
        t = paths[0].times
        st.table(
            "noise_paths.csv",
            ["t"] + [f"path{p}" for p in range(len(paths))],
            [t] + [q.values for q in paths],
            "sample paths of the driver on the simulation grid",
        )
        st.text("noise_paths.svg", emit_svg([Series(f"path {p}", t, q.values) for p, q in enumerate(paths)], Axes.LINLIN, "driver sample paths", "t", "Z_t"))
    meta["fit_windows"] = {k: list(v) for k, v in windows.items()}
    meta["moment_unstable"] = unstable
    meta["slopes"] = {k: (f.exponent if f else None) for k, f in fits.items()}
    if spec.kind is not NoiseKind.STABLE:
        meta["crossover_time"] = crossover_time(spec)


def _ensemble(cfg: RunConfig, workers: Optional[int], meta: dict) -> TrajectoryEnsemble:
    t0 = time.perf_counter()
    ens = run_ensemble(cfg.sim, workers=workers)
    meta["simulation_seconds"] = time.perf_counter() - t0
    meta["mode_set"] = ens.modes.to_json()
    meta["card"] = len(ens.modes)
    return ens


def _transport(cfg: RunConfig, st: _Staging, meta: dict, workers) -> None:
    ens = _ensemble(cfg, workers, meta)
    save_ensemble(ens, st.dir)
    curve = abs_moment_curve(ens, cfg.moment_beta)
    windows = default_windows(ens.times)
    fits = _fit_all(curve, windows)
    order = ["late", "early", "full"]
    _write_curve(st, "transport_moment", curve, fits, order, f"E|X_t|^beta over particles (beta={cfg.moment_beta:g})")
    st.text("transport_moment.svg", _curve_svg(curve, fits, ens.config.noise.alpha, f"transport, {ens.config.noise.kind.value} driver", "E|X_t|"))
    show = min(5, ens.positions.shape[1])
    st.text(
        "sample_trajectories.svg",
        emit_svg([Series(f"particle {p}", ens.positions[:, p, 0], ens.positions[:, p, 1]) for p in range(show)], Axes.LINLIN, "sample trajectories (recorded times)", "x1", "x2"),
    )
    meta["fit_windows"] = {k: list(v) for k, v in windows.items()}
    meta["slopes"] = {k: (f.exponent if f else None) for k, f in fits.items()}
    meta["moment_unstable"] = bool(curve.unstable)


def _reference(ens: TrajectoryEnsemble, t: float, proj: np.ndarray):
    """(name, cdf, pdf, params) of the limiting law fitted at time ``t``."""
    h, _ = h_case_of(ens.config.noise)
    alpha = ens.config.noise.alpha
    if h is HCase.STABLE:
        sb = estimate_sigma_bar(ens, h, t)
        scale = sb * t
        return "stable", (lambda x: stable_cdf_fast(alpha, scale, x)), (lambda x: stable_density(alpha, scale, x)), {"sigma_bar": sb, "scale": scale}
    mu, sd = float(np.mean(proj)), float(np.std(proj))
    return "gaussian", (lambda x: sps.norm.cdf(x, mu, sd)), (lambda x: sps.norm.pdf(x, mu, sd)), {"mean": mu, "std": sd}


def _pdf_panels(tables: list[tuple[str, object]], ref_x, ref_y, title: str) -> str:
    lin = [Series(lab, est.centers, est.densities, "points") for lab, est in tables]
    lin.append(Series("reference", ref_x, ref_y))
    log = []
    for lab, est in tables:
        ok = est.densities > 0
        log.append(Series(lab, est.centers[ok], est.densities[ok], "points"))
    ok = ref_y > 0
    log.append(Series("reference", ref_x[ok], ref_y[ok]))
    return emit_svg_panels([Panel(lin, Axes.LINLIN, title, "x", "pdf"), Panel(log, Axes.SEMILOGY, title + " (semilog)", "x", "pdf")])


def _pdf(cfg: RunConfig, st: _Staging, meta: dict, workers) -> None:
    ens = _ensemble(cfg, workers, meta)
    t = float(ens.times[-1])
    proj = project_samples(ens, 0.0, t)
    name, cdf, pdf, params = _reference(ens, t, proj)
    est = estimate_pdf(proj, cfg.n_bins)
    ref = pdf(est.centers)
    ks = ks_distance(proj, cdf)
    st.table(
        "pdf.csv",
        ["x_lo", "x_hi", "x_center", "density", "reference_density"],
        [est.bin_edges[:-1], est.bin_edges[1:], est.centers, est.densities, ref],
        f"histogram of X_t . e1 at t={t:g} on the 0.1%-99.9% quantile range, with the fitted {name} reference",
    )
    st.table("pdf_ks.csv", ["reference", "t", "ks_distance", "n_samples"], [np.array([name], dtype=object), np.array([t]), np.array([ks]), np.array([proj.size])], "one-sample KS distance of the projection against the reference")
    st.text("pdf.svg", _pdf_panels([("X_t . e1", est)], est.centers, ref, f"pdf at t={t:g}"))
    meta["reference"] = {"law": name, **params}
    meta["ks_distance"] = ks


def _isotropy(cfg: RunConfig, st: _Staging, meta: dict, workers) -> None:
    ens = _ensemble(cfg, workers, meta)
    t = float(ens.times[-1])
    thetas = list(cfg.thetas)
    projs = [project_samples(ens, th, t) for th in thetas]
    name, cdf, pdf, params = _reference(ens, t, project_samples(ens, 0.0, t))
    st.table(
        "projections.csv",
        ["particle"] + [f"theta_{i}" for i in range(len(thetas))],
        [np.arange(ens.positions.shape[1])] + projs,
        f"X_t . (cos theta, sin theta) at t={t:g}; theta_i values listed in manifest",
    )
    pa, pb, dist = [], [], []
    for i in range(len(thetas)):
        for j in range(i + 1, len(thetas)):
            pa.append(thetas[i])
            pb.append(thetas[j])
            dist.append(ks_two_sample(projs[i], projs[j]))
    st.table("isotropy_pairwise_ks.csv", ["theta_a", "theta_b", "ks_distance"], [np.array(pa), np.array(pb), np.array(dist)], "two-sample KS distances between directional projections")
    ref_ks = np.array([ks_distance(p, cdf) for p in projs])
    st.table("isotropy_reference_ks.csv", ["theta", "ks_distance"], [np.array(thetas), ref_ks], f"KS distance of each projection against the {name} law fitted on e1")
    ests = [(f"theta={th:.4g}", estimate_pdf(p, cfg.n_bins)) for th, p in zip(thetas, projs)]
    lo = min(e.bin_edges[0] for _, e in ests)
    hi = max(e.bin_edges[-1] for _, e in ests)
    xr = np.linspace(lo, hi, 121)
    st.text("isotropy_pdf.svg", _pdf_panels(ests, xr, pdf(xr), f"projections at t={t:g}"))
    meta["thetas"] = thetas
    meta["reference"] = {"law": name, **params}


def _sweep(cfg: RunConfig, st: _Staging, meta: dict, workers) -> None:
    sim = cfg.sim
    h_case, H = h_case_of(sim.noise)
    alpha = sim.noise.alpha
    etas = sorted(set(float(e) for e in cfg.sweep_etas), reverse=True)
    # the first absolute moment has infinite variance under a stable limit
    beta = cfg.stable_sigma_beta if h_case is HCase.STABLE else 1.0
    base = sim.model_dump(mode="json")
    rows = []
    t0 = time.perf_counter()
    for eta in etas:
        fld = dict(base["field"], eta=eta)
        if cfg.balance_velocity:
            fld["u"] = balanced_velocity(eta, fld["tau"], alpha, H)
        sub = SimConfig.model_validate(dict(base, field=fld))
        ens = run_ensemble(sub, workers=workers)
        t = float(ens.times[-1])
        rows.append((eta, len(ens.modes), fld["u"], estimate_sigma_bar(ens, h_case, t, beta)))
        logger.info("eta=%.5g card=%d sigma_bar=%.6g", eta, len(ens.modes), rows[-1][3])
    meta["simulation_seconds"] = time.perf_counter() - t0
    us = {r[2] for r in rows}
    if len(us) != 1:
        # per-eta velocity: fit against the prefactor evaluated at each u
        sw = fit_lambda([(r[0], r[3]) for r in rows], 1.0, fld["tau"], alpha, H)
        prefs = np.array([r[2] ** (alpha / H) for r in rows])
        sw.lambdas = sw.lambdas / prefs
        sw.fitted_lambda = float(np.exp(np.mean(np.log(sw.lambdas))))
    else:
        sw = fit_lambda([(r[0], r[3]) for r in rows], rows[0][2], fld["tau"], alpha, H)
    arr = np.array(rows, dtype=float)
    st.table(
        "sweep.csv",
        ["eta", "card", "u", "sigma_bar", "lambda"],
        [arr[:, 0], arr[:, 1].astype(int), arr[:, 2], arr[:, 3], sw.lambdas],
        f"sigma_bar at t=horizon per eta ({h_case.value} convention) and the implied prefactor",
    )
    spread = float(np.max(np.abs(sw.lambdas / sw.fitted_lambda - 1.0)))
    st.table(
        "sweep_fit.csv",
        ["H", "fitted_eta_exponent", "predicted_eta_exponent", "fitted_lambda", "max_lambda_deviation"],
        [np.array([H]), np.array([sw.fitted_eta_exponent]), np.array([sw.predicted_eta_exponent]), np.array([sw.fitted_lambda]), np.array([spread])],
        "log-log fit of sigma_bar against eta and the geometric-mean prefactor",
    )
    e = sw.etas
    line = np.exp(np.polyfit(np.log(e), np.log(sw.sigma_bars), 1)[1]) * e**sw.fitted_eta_exponent
    st.text(
        "sweep.svg",
        emit_svg([Series("sigma_bar", e, sw.sigma_bars, "points"), Series(f"fit slope {sw.fitted_eta_exponent:.3f}", e, line, "dashed")], Axes.LOGLOG, "sigma_bar versus eta", "eta", "sigma_bar"),
    )
    meta["h_case"] = h_case.value
    meta["sigma_bar_beta"] = beta
    meta["fitted_eta_exponent"] = sw.fitted_eta_exponent
    meta["fitted_lambda"] = sw.fitted_lambda


def _verify(cfg: RunConfig, st: _Staging, meta: dict) -> list:
    results = run_checks(cfg.verify_seed)
    st.table(
        "verify_report.csv",
        ["check", "value", "target", "tolerance", "passed", "detail"],
        [
            np.array([r.name for r in results], dtype=object),
            np.array([r.value for r in results]),
            np.array([r.target for r in results]),
            np.array([r.tolerance for r in results]),
            np.array([int(r.passed) for r in results]),
            np.array([r.detail.replace(",", ";") for r in results], dtype=object),
        ],
        "built-in oracle checks",
    )
    meta["checks_passed"] = sum(r.passed for r in results)
    meta["checks_total"] = len(results)
    return results


def run_experiment(cfg: RunConfig, workers: Optional[int] = None) -> ExperimentResult:
    """Run one suite; outputs appear in ``cfg.output_dir`` only if it completes."""
    t0 = time.perf_counter()
    target = Path(cfg.output_dir)
    st = _Staging(target)
    meta: dict = {}
    report: list[str] = []
    status = 0
    try:
        exp = cfg.experiment
        if exp is Experiment.NOISE_PATHS:
            _noise_paths(cfg, st, meta)
        elif exp is Experiment.TRANSPORT:
            _transport(cfg, st, meta, workers)
        elif exp is Experiment.PDF:
            _pdf(cfg, st, meta, workers)
        elif exp is Experiment.ISOTROPY:
            _isotropy(cfg, st, meta, workers)
        elif exp is Experiment.SCALING_SWEEP:
            _sweep(cfg, st, meta, workers)
        else:
            results = _verify(cfg, st, meta)
            report = [r.line() for r in results]
            report.append(f"{meta['checks_passed']}/{meta['checks_total']} checks passed")
            status = 0 if all(r.passed for r in results) else 4
        manifest = {
            "experiment": exp.value,
            "config": config_to_dict(cfg),
            "versions": _versions(),
            "wall_seconds": time.perf_counter() - t0,
            "status": status,
            "results": meta,
        }
        if cfg.sim is not None and "mode_set" not in meta:
            modes = build_mode_set(cfg.sim.field.eta)
            manifest["results"]["mode_set"] = modes.to_json()
            manifest["results"]["card"] = len(modes)
        files = st.commit(_jsonable(manifest))
    except BaseException:
        st.discard()
        raise
    return ExperimentResult(status, target, files, report)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
