import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special, stats as sps

from levyflow import noise
from levyflow.errors import DomainError, SamplerFailure
from levyflow.noise import (
    NoiseKind,
    NoiseSpec,
    crossover_time,
    fractional_abs_moment,
    increments,
    levy_constant,
    sample_at_times,
    sample_stable_increment,
    sample_tempered_increment,
    sample_truncated_increment,
    simulate_noise_path,
    stable_cdf,
    stable_cdf_fast,
    stable_density,
    tempered_variance_rate,
    truncated_variance_rate,
    truncation_threshold,
)
from levyflow.rng import DrawSite, RngStream, stream_id
from levyflow.stats import ks_distance, ks_two_sample

STABLE = NoiseSpec(kind="stable", alpha=1.5)
TEMPERED = NoiseSpec(kind="tempered", alpha=1.5, tempering=0.3)
TRUNCATED = NoiseSpec(kind="truncated", alpha=1.5, cutoff=1e-3)


def draws(spec, dt, n, seed=0, slot=0, tag=5):
    site = DrawSite.build(seed, stream_id(np.arange(n), slot, tag=tag), 0)
    return increments(spec, dt, site)


# ---------------------------------------------------------------- spec model


def test_spec_defaults_filled():
    assert TEMPERED.tempering == 0.3
    t = NoiseSpec(kind="truncated", alpha=1.5)
    assert t.cutoff == 1e-3 and 0 < t.inner_threshold <= t.cutoff


@pytest.mark.parametrize(
    "kw",
    [
        {"kind": "tempered", "alpha": 2.5},
        {"kind": "tempered", "alpha": 1.5, "tempering": 0.0},
        {"kind": "truncated", "alpha": 1.5, "cutoff": 1e-3, "inner_threshold": 1e-2},
        {"kind": "stable", "alpha": 1.5, "scale": -1.0},
        {"kind": "stable", "alpha": 1.5, "cutoff": 1e-3},
        {"kind": "stable", "alpha": 0.9},
    ],
)
def test_spec_rejects_invalid(kw):
    with pytest.raises(ValueError):
        NoiseSpec(**kw)


def test_inner_threshold_error_names_field():
    with pytest.raises(ValueError, match="inner_threshold"):
        NoiseSpec(kind="truncated", alpha=1.5, cutoff=1e-3, inner_threshold=2e-3)


# ---------------------------------------------------------------- constants


def test_levy_constant_value():
    assert levy_constant(1.5) == pytest.approx(0.29920671, abs=1e-8)


@pytest.mark.parametrize("alpha", [1.1, 1.3, 1.5, 1.7, 1.9])
def test_levy_constant_against_mpmath(alpha):
    # integrate by parts to get int sin(u) u^-alpha / alpha; the [0, 1] piece is summed termwise
    mpmath.mp.dps = 30
    a = mpmath.mpf(alpha)
    head = mpmath.nsum(lambda n: (-1) ** n / (mpmath.factorial(2 * n + 1) * (2 * n + 2 - a)), [0, mpmath.inf])
    tail = mpmath.quadosc(lambda u: mpmath.sin(u) * u ** (-a), [1, mpmath.inf], period=2 * mpmath.pi)
    integral = (head + tail) / a
    assert levy_constant(alpha) == pytest.approx(1 / (2 * float(integral)), rel=1e-10)


@pytest.mark.parametrize("xi", [0.5, 1.0, 2.0])
def test_levy_constant_reproduces_exponent(xi):
    a = 1.5
    c = levy_constant(a)
    # by parts: int (1 - cos xi z) z^(-1-a) dz = (xi / a) int sin(xi z) z^-a dz
    head, _ = integrate.quad(lambda z: np.sinc(xi * z / np.pi) * xi, 0, 1, weight="alg", wvar=(1 - a, 0))
    tail, _ = integrate.quad(lambda z: z**-a, 1, np.inf, weight="sin", wvar=xi)
    val = 2 * c * xi / a * (head + tail)
    assert val == pytest.approx(abs(xi) ** a, rel=1e-7)


@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5])
def test_levy_constant_domain(alpha):
    with pytest.raises(DomainError):
        levy_constant(alpha)


def test_fractional_moment_examples():
    assert fractional_abs_moment(1.5, 1, 1, 1, 1) == pytest.approx(2 * special.gamma(1 / 3) / math.pi, rel=1e-12)
    assert fractional_abs_moment(1.5, 1, 1, 1, 1) == pytest.approx(1.70548, abs=1e-4)
    assert fractional_abs_moment(1.5, 1, 0.5, 1, 1) == pytest.approx(math.sqrt(2) * special.gamma(2 / 3) / math.sqrt(math.pi), rel=1e-12)
    assert fractional_abs_moment(2.0, 3.0, 1, 0.5, 1) == pytest.approx(2 / math.sqrt(math.pi) * math.sqrt(1.5), rel=1e-12)
    with pytest.raises(DomainError):
        fractional_abs_moment(1.5, 1, 1.5, 1, 1)


# ---------------------------------------------------------------- density and cdf


def test_density_anchors():
    assert stable_density(2.0, 1.0, 0.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-8)
    assert stable_density(1.0, 1.0, 0.0) == pytest.approx(1 / math.pi, abs=1e-8)
    assert stable_density(1.5, 1.0, 0.0) == pytest.approx(special.gamma(1 + 1 / 1.5) / math.pi, abs=1e-8)


def test_density_matches_scipy_levy_stable():
    x = np.array([-7.0, -1.2, 0.3, 2.5, 20.0])
    # scipy's S1 parameterisation with unit scale has exp(-|xi|^alpha)
    ref = sps.levy_stable.pdf(x, 1.5, 0.0)
    assert np.allclose(stable_density(1.5, 1.0, x), ref, atol=1e-8)


def test_cdf_anchors():
    assert stable_cdf(1.5, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert stable_cdf(2.0, 1.0, 2.0) == pytest.approx(sps.norm.cdf(2 / math.sqrt(2)), abs=1e-8)
    assert stable_cdf(2.0, 1.0, 2.0) == pytest.approx(0.92135, abs=1e-5)


@pytest.mark.parametrize("x", [-1.0, 0.5, 3.0])
def test_density_cdf_consistency(x):
    val, _ = integrate.quad(lambda y: stable_density(1.5, 1.0, y), -np.inf, x, limit=200)
    assert val == pytest.approx(stable_cdf(1.5, 1.0, x), abs=1e-6)


@given(st.floats(-50, 50), st.floats(1.05, 2.0), st.floats(0.2, 5.0))
def test_cdf_symmetry_and_density_parity(x, alpha, scale):
    assert stable_cdf(alpha, scale, x) + stable_cdf(alpha, scale, -x) == pytest.approx(1.0, abs=1e-8)
    assert stable_density(alpha, scale, x) == pytest.approx(stable_density(alpha, scale, -x), abs=1e-12)


def test_cdf_monotone_and_fast_table():
    x = np.linspace(-30, 30, 301)
    f = stable_cdf(1.5, 0.7, x)
    assert np.all(np.diff(f) >= -1e-12)
    assert np.max(np.abs(stable_cdf_fast(1.5, 0.7, x) - f)) < 1e-7


def test_density_rejects_nonfinite():
    with pytest.raises(DomainError):
        stable_density(1.5, 1.0, float("nan"))
    with pytest.raises(DomainError):
        stable_cdf(1.5, 1.0, float("inf"))


# ---------------------------------------------------------------- stable sampler


def test_stable_fractional_moment():
    z = draws(STABLE, 1.0, 100_000)
    assert np.mean(np.abs(z) ** 0.5) == pytest.approx(1.0804, rel=0.02)


@pytest.mark.parametrize("beta", [0.25, 0.5, 0.75])
def test_moment_law_three_standard_errors(beta):
    z = np.abs(draws(STABLE, 0.3, 50_000, slot=int(beta * 4)))
    v = z**beta
    se = v.std(ddof=1) / math.sqrt(v.size)
    assert abs(v.mean() - fractional_abs_moment(1.5, 1.0, beta, 0.3)) < 3 * se


def test_stable_ks_against_cdf():
    z = draws(STABLE, 0.5, 10_000, slot=3)
    assert ks_distance(z, lambda x: stable_cdf_fast(1.5, 0.5, x)) < 0.02


def test_stable_self_similarity():
    a = draws(STABLE, 2.0, 10_000, slot=4)
    b = 2 ** (1 / 1.5) * draws(STABLE, 1.0, 10_000, slot=5)
    assert ks_two_sample(a, b) < 0.02


def test_gaussian_branch_variance():
    spec = NoiseSpec(kind="stable", alpha=2.0, scale=0.7)
    z = draws(spec, 0.2, 100_000)
    assert z.var() == pytest.approx(2 * 0.7 * 0.2, rel=0.02)


@pytest.mark.parametrize("spec", [STABLE, TEMPERED, TRUNCATED], ids=lambda s: s.kind.value)
def test_symmetry(spec):
    dt = 1e-5 if spec.kind is NoiseKind.TRUNCATED else 0.5
    z = draws(spec, dt, 10_000, slot=6)
    assert ks_two_sample(z, -z) < 0.02


def test_scalar_wrappers_replay_and_kind_check():
    for spec, fn in ((STABLE, sample_stable_increment), (TEMPERED, sample_tempered_increment), (TRUNCATED, sample_truncated_increment)):
        a = fn(spec, 0.01, RngStream(3, 4))
        b = fn(spec, 0.01, RngStream(3, 4))
        assert a == b and math.isfinite(a)
    with pytest.raises(DomainError):
        sample_stable_increment(TEMPERED, 0.01, RngStream(0))
    with pytest.raises(DomainError):
        sample_stable_increment(STABLE, 0.0, RngStream(0))
    with pytest.raises(DomainError):
        sample_truncated_increment(TRUNCATED, -1.0, RngStream(0))


# ---------------------------------------------------------------- tempered sampler


def test_tempered_small_tempering_matches_stable():
    spec = NoiseSpec(kind="tempered", alpha=1.5, tempering=1e-6)
    a = draws(spec, 1.0, 10_000, slot=7)
    b = draws(STABLE, 1.0, 10_000, slot=8)
    assert ks_two_sample(a, b) < 0.02


def test_tempered_variance_dt_one():
    z = draws(TEMPERED, 1.0, 100_000, slot=9)
    oracle, _ = integrate.quad(lambda r: r * r * math.exp(-0.3 * r) * r ** -2.5, 0, np.inf)
    oracle *= 2 * levy_constant(1.5)
    assert tempered_variance_rate(TEMPERED) == pytest.approx(oracle, rel=1e-8)
    assert z.var() == pytest.approx(oracle, rel=0.05)
    assert abs(z.mean()) < 0.02


def test_tempered_cap_raises(monkeypatch):
    monkeypatch.setattr(noise, "MAX_REJECTION_ATTEMPTS", 8)
    with pytest.raises(SamplerFailure):
        draws(TEMPERED, 1e4, 50)


# ---------------------------------------------------------------- truncated sampler


@pytest.mark.parametrize("dt", [1.0, 1e-5])
def test_truncated_variance(dt):
    z = draws(TRUNCATED, dt, 100_000, slot=10)
    oracle = 2 * levy_constant(1.5) * 1e-3**0.5 / 0.5
    assert truncated_variance_rate(TRUNCATED) == pytest.approx(oracle, rel=1e-12)
    assert z.var() / dt == pytest.approx(oracle, rel=0.05)


def test_truncated_jump_support():
    dt = 1e-7
    site = DrawSite.build(0, stream_id(np.arange(20_000), 0, tag=6), 0)
    _, jumps, _ = noise._truncated_parts(TRUNCATED, dt, site)
    delta = float(truncation_threshold(TRUNCATED, dt))
    assert jumps.size > 100
    assert np.all(np.abs(jumps) > delta) and np.all(np.abs(jumps) <= 1e-3)


def test_truncation_threshold_bounds():
    for dt in (1e-9, 1e-6, 1e-3, 1.0):
        d = float(truncation_threshold(TRUNCATED, dt))
        assert TRUNCATED.inner_threshold <= d <= TRUNCATED.cutoff


# ---------------------------------------------------------------- paths


def test_one_step_path():
    p = simulate_noise_path(STABLE, 1.0, 1.0, RngStream(1, 2))
    assert p.times.tolist() == [0.0, 1.0]
    assert p.values[0] == 0.0
    assert p.values[1] == sample_stable_increment(STABLE, 1.0, RngStream(1, 2))


@given(st.floats(0.05, 3.0), st.integers(1, 40))
def test_path_shape(horizon, n):
    dt = horizon / n * 1.3
    if dt > horizon:
        dt = horizon
    p = simulate_noise_path(TRUNCATED, horizon, dt, RngStream(0))
    assert p.values.size == math.ceil(horizon / dt - 1e-9) + 1
    assert p.times[-1] == horizon and p.values[0] == 0.0


def test_sample_at_times_modes_agree_in_law():
    times = np.array([0.0, 0.5, 1.0])
    paths = sample_at_times(STABLE, times, 20_000, 1)
    indep = sample_at_times(STABLE, times, 20_000, 2, independent=True)
    assert ks_two_sample(paths[2], indep[2]) < 0.03


def test_crossover_time_finite_for_tempered_and_truncated():
    assert crossover_time(STABLE) == math.inf
    assert 0.01 < crossover_time(TEMPERED) < 1.0
    assert 1e-8 < crossover_time(TRUNCATED) < 1e-5
