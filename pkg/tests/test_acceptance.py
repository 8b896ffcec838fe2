"""End-to-end acceptance checks at desk scale.

Every check appends one ``CRITERION n: PASS|FAIL ...`` line that the
terminal summary prints in order. Run this file directly to print the
lines without pytest.
"""
import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate, stats as sps

from levyflow.config import build_config
from levyflow.dynamics import SimConfig, mode_flow_oracle, mode_jump_map, run_ensemble
from levyflow.experiments import noise_moment_times, run_experiment
from levyflow.field import WaveMode, build_mode_set, spatial_average
from levyflow.noise import (
    NoiseSpec,
    fractional_abs_moment,
    increments,
    levy_constant,
    sample_at_times,
    stable_cdf_fast,
)
from levyflow.rng import DrawSite, stream_id
from levyflow.stats import (
    HCase,
    abs_moment_curve,
    default_windows,
    estimate_sigma_bar,
    fit_loglog_slope,
    ks_distance,
    ks_two_sample,
    moment_curve_from_samples,
    project_samples,
)

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script from another directory
    ACCEPTANCE_LINES = []

ALPHA = 1.5
ETA = 2 * math.pi / 20
SWEEP_ETAS = [2 * math.pi / L for L in (10, 14, 20, 28, 40)]
DRIVERS = {
    "stable": {"kind": "stable", "alpha": ALPHA},
    "tempered": {"kind": "tempered", "alpha": ALPHA, "tempering": 0.3},
    "truncated": {"kind": "truncated", "alpha": ALPHA, "cutoff": 1e-3},
}


def record(n, ok, detail):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def sim(driver, **kw):
    doc = {"field": {"eta": ETA, "u": 1.0, "tau": 1.0}, "noise": DRIVERS[driver], "horizon": 1.0}
    doc.update(kw)
    return SimConfig.model_validate(doc)


def draws(spec, dt, n, slot):
    return increments(spec, dt, DrawSite.build(0, stream_id(np.arange(n), slot, tag=9), 0))


_ENSEMBLES = {}


def big_ensemble(driver):
    """N=1e4, dt=1e-2 ensembles shared by criteria 5 and 6."""
    if driver not in _ENSEMBLES:
        _ENSEMBLES[driver] = run_ensemble(sim(driver, dt=1e-2, n_particles=10_000, record_times=[0.0, 0.5, 1.0]))
    return _ENSEMBLES[driver]


# ---------------------------------------------------------------------------


def test_criterion_1_stable_sampler_law():
    t0 = time.perf_counter()
    z = draws(NoiseSpec(**DRIVERS["stable"]), 1.0, 100_000, 1)
    m = float(np.mean(np.abs(z) ** 0.5))
    ks = ks_distance(z, lambda x: stable_cdf_fast(ALPHA, 1.0, x))
    secs = time.perf_counter() - t0
    rel = abs(m / 1.0804 - 1)
    ok = rel < 0.02 and ks < 0.02 and secs < 5
    assert record(1, ok, f"E|Z|^0.5={m:.5f} (rel err {rel:.4f} < 0.02), KS={ks:.4f} < 0.02, {secs:.1f}s < 5s")


def test_criterion_2_noise_scaling():
    t0 = time.perf_counter()
    parts, ok = [], True
    for driver in ("stable", "tempered", "truncated"):
        spec = NoiseSpec(**DRIVERS[driver])
        times, windows = noise_moment_times(spec, 1.0)
        z = sample_at_times(spec, times, 2000, 0, independent=True)
        curve = moment_curve_from_samples(times[1:], np.abs(z[1:]), 1.0)
        if driver == "stable":
            s = fit_loglog_slope(curve, (1e-2, 1.0)).exponent
            ok &= abs(s - 1 / ALPHA) <= 0.05
            parts.append(f"stable {s:.3f}")
        else:
            e = fit_loglog_slope(curve, windows["early"]).exponent
            lt = fit_loglog_slope(curve, windows["late"]).exponent
            ok &= abs(e - 1 / ALPHA) <= 0.07 and abs(lt - 0.5) <= 0.05
            parts.append(f"{driver} early {e:.3f} late {lt:.3f}")
    secs = time.perf_counter() - t0
    ok &= secs < 60
    assert record(2, ok, "slopes: " + ", ".join(parts) + f" (targets 0.667+-0.05 / 0.667+-0.07, 0.5+-0.05), {secs:.0f}s")


def test_criterion_3_variance_oracles():
    c = levy_constant(ALPHA)
    tq, _ = integrate.quad(lambda r: r ** (1 - ALPHA) * math.exp(-0.3 * r), 0, np.inf)
    tempered_rate = 2 * c * tq
    trunc_rate = 2 * c * 1e-3 ** (2 - ALPHA) / (2 - ALPHA)
    vt = float(np.var(draws(NoiseSpec(**DRIVERS["tempered"]), 1.0, 100_000, 2)))
    vr = float(np.var(draws(NoiseSpec(**DRIVERS["truncated"]), 1.0, 100_000, 3)))
    et, er = abs(vt / tempered_rate - 1), abs(vr / trunc_rate - 1)
    assert record(3, et < 0.05 and er < 0.05,
                  f"tempered var {vt:.4f} vs {tempered_rate:.4f} (rel {et:.3f}), truncated {vr:.5f} vs {trunc_rate:.5f} (rel {er:.3f}), tol 0.05")


def test_criterion_4_transport_scaling():
    modes = build_mode_set(ETA)
    brute = sum(1 for a in range(-4, 5) for b in range(-4, 5) if (a or b) and 0.5 / ETA <= math.hypot(a, b) <= 1 / ETA)
    t0 = time.perf_counter()
    ok = len(modes) == 28 == brute
    parts = [f"card {len(modes)}"]
    for driver in ("stable", "tempered", "truncated"):
        ens = run_ensemble(sim(driver, dt=1e-2, n_particles=2000))
        curve = abs_moment_curve(ens, 1.0)
        w = default_windows(curve.times)
        if driver == "stable":
            s = fit_loglog_slope(curve, w["full"]).exponent
            ok &= abs(s - 1 / ALPHA) <= 0.07
        else:
            s = fit_loglog_slope(curve, w["late"]).exponent
            ok &= abs(s - 0.5) <= 0.07
        parts.append(f"{driver} {s:.3f}")
    secs = time.perf_counter() - t0
    ok &= secs < 600
    assert record(4, ok, "E|X_t| slopes: " + ", ".join(parts) + f" (stable 0.667+-0.07 full window, others 0.5+-0.07 last decade), {secs:.0f}s")


def test_criterion_5_pdf_match():
    parts, ok = [], True
    for driver in ("stable", "tempered", "truncated"):
        ens = big_ensemble(driver)
        x = project_samples(ens, 0.0, 1.0)
        if driver == "stable":
            scale = estimate_sigma_bar(ens, HCase.STABLE, 1.0) * 1.0
            ks = ks_distance(x, lambda v: stable_cdf_fast(ALPHA, scale, v))
        else:
            ks = ks_distance(x, sps.norm(x.mean(), x.std()).cdf)
        ok &= ks < 0.03
        parts.append(f"{driver} KS {ks:.4f}")
    assert record(5, ok, ", ".join(parts) + " (< 0.03)")


def test_criterion_6_isotropy():
    ens = big_ensemble("stable")
    thetas = [math.pi / 6, math.pi / 3, math.pi / 2]
    proj = [project_samples(ens, th, 1.0) for th in thetas]
    pair = max(ks_two_sample(proj[i], proj[j]) for i in range(3) for j in range(i + 1, 3))
    scale = estimate_sigma_bar(ens, HCase.STABLE, 1.0)
    ref = max(ks_distance(p, lambda v: stable_cdf_fast(ALPHA, scale, v)) for p in proj)
    assert record(6, pair < 0.025 and ref < 0.03, f"max pairwise KS {pair:.4f} < 0.025, max KS vs fitted reference {ref:.4f} < 0.03")


def test_criterion_7_marcus_exactness():
    rng = np.random.default_rng(7)
    ks = sorted({m.k for e in SWEEP_ETAS for m in build_mode_set(e).modes})
    flow = inv = jac = 0.0
    h = 1e-6
    for _ in range(1000):
        mode = WaveMode.of(*ks[rng.integers(len(ks))])
        x = rng.uniform(-math.pi, math.pi, 2)
        a = rng.uniform(-1, 1)
        y = mode_jump_map(mode, x, a)
        flow = max(flow, float(np.max(np.abs(y - mode_flow_oracle(mode, x, a, 8)))))
        inv = max(inv, float(np.max(np.abs(mode_jump_map(mode, y, -a) - x))))
        J = np.column_stack([(mode_jump_map(mode, x + e, a) - mode_jump_map(mode, x - e, a)) / (2 * h)
                             for e in (np.array([h, 0.0]), np.array([0.0, h]))])
        jac = max(jac, abs(np.linalg.det(J) - 1))
    ok = flow < 1e-10 and inv < 1e-14 and jac < 1e-6
    assert record(7, ok, f"max |map - RK4| {flow:.2e} < 1e-10, max inverse error {inv:.2e} < 1e-14, max |det J - 1| {jac:.2e} < 1e-6")


@pytest.mark.parametrize("driver", ["stable", "tempered", "truncated"])
def test_criterion_8_sigma_bar_scaling(driver, tmp_path):
    doc = {"experiment": "scaling_sweep", "sim": {"field": {"eta": ETA}, "noise": DRIVERS[driver], "horizon": 1.0},
           "sweep_etas": SWEEP_ETAS}
    cfg = build_config(doc, profile="desk", output_dir=str(tmp_path / driver))
    t0 = time.perf_counter()
    run_experiment(cfg)
    secs = time.perf_counter() - t0
    with open(tmp_path / driver / "sweep_fit.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    slope, lam, dev = float(row["fitted_eta_exponent"]), float(row["fitted_lambda"]), float(row["max_lambda_deviation"])
    target = 0.0 if driver == "stable" else 1 - ALPHA / 2
    ok = abs(slope - target) <= 0.1 and lam > 0 and dev <= 0.2 and secs < 3600
    assert record(8, ok, f"{driver}: eta exponent {slope:.3f} (target {target:.2f}+-0.1), lambda {lam:.4g}, max deviation {dev:.3f} <= 0.2, {secs:.0f}s")


def test_criterion_9_worker_determinism(tmp_path):
    doc = {"experiment": "transport", "sim": {"field": {"eta": ETA}, "noise": DRIVERS["truncated"], "horizon": 1.0,
                                              "n_particles": 500}}
    outs = []
    for w in (1, 4, 16):
        cfg = build_config(doc, profile="desk", output_dir=str(tmp_path / f"w{w}"))
        run_experiment(cfg, workers=w)
        outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / f"w{w}").glob("*.csv"))})
    ok = bool(outs[0]) and outs[0] == outs[1] == outs[2]
    assert record(9, ok, f"{len(outs[0])} CSV files byte-identical across 1, 4, 16 workers: {ok}")


def test_criterion_10_analytic_spot_values():
    s2, s15 = spatial_average(2.0), spatial_average(1.5)
    card = len(build_mode_set(ETA))
    fm = fractional_abs_moment(1.5, 1, 1, 1, 1)
    ok = abs(s2 - 0.5) < 1e-15 and abs(s15 - 0.5564) <= 1e-4 and card == 28 and abs(fm - 1.70548) <= 1e-4
    assert record(10, ok, f"spatial_average(2)={s2!r}, spatial_average(1.5)={s15:.6f}, card={card}, moment={fm:.6f}")


if __name__ == "__main__":
    import inspect
    import sys
    import tempfile

    failed = 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, fn in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[2]) if kv[0].startswith("test_criterion_") else 0):
            if not name.startswith("test_criterion_"):
                continue
            params = inspect.signature(fn).parameters
            for driver in (["stable", "tempered", "truncated"] if "driver" in params else [None]):
                kw = {"driver": driver} if driver else {}
                if "tmp_path" in params:
                    kw["tmp_path"] = Path(tempfile.mkdtemp(dir=tmp))
                try:
                    fn(**kw)
                except AssertionError:
                    failed += 1
    sys.exit(1 if failed else 0)
