"""Marcus-type particle integrator for the tracer characteristics.

Along the flow of a single mode ``sigma_k`` the phase ``k.x`` is conserved
(``sigma_k`` is orthogonal to ``k``), so ``sigma_k`` is constant on its own
flow lines and the unit-time flow of ``a * sigma_k`` is the translation
``x + a * sigma_k(x)``. A time step draws one increment per mode and
composes these exact per-mode maps (Wong-Zakai splitting).
"""
from __future__ import annotations

import enum
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__
from .errors import RecordLookupError, SamplerFailure
from .field import FieldParams, ModeSet, WaveMode, build_mode_set, normalization_constant, sigma_eval
from .noise import NoiseSpec, increments, time_grid
from .rng import DrawSite, RngStream, stream_id

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
RECORDS_PER_DECADE = 32
CHUNK_LIMIT = 4096


class ModeOrder(str, enum.Enum):
    FIXED_LEX = "fixed_lex"
    RANDOM_PERMUTATION_PER_STEP = "random_permutation_per_step"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            for member in cls:
                if member.value == value.lower():
                    return member
        return None


def default_record_times(horizon: float, dt: float, per_decade: int = RECORDS_PER_DECADE) -> list[float]:
    """0 followed by geometric times from ``dt`` to ``horizon`` snapped to the grid."""
    grid = time_grid(horizon, dt)
    n_dec = math.log10(horizon / dt)
    n = max(2, int(round(n_dec * per_decade)) + 1)
    geo = np.geomspace(dt, horizon, n)
    idx = np.unique(np.clip(np.rint(geo / dt).astype(int), 1, grid.size - 1))
    return [0.0] + [float(grid[i]) for i in idx]


class SimConfig(BaseModel):
    """Complete, seedable description of one particle ensemble."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    field: FieldParams
    noise: NoiseSpec
    horizon: float = 1.0
    dt: float = 1e-3
    n_particles: int = Field(10_000, ge=1)
    seed: int = 0
    record_times: Optional[list[float]] = None
    mode_order: ModeOrder = ModeOrder.RANDOM_PERMUTATION_PER_STEP

    @model_validator(mode="before")
    @classmethod
    def _alpha_from_noise(cls, data):
        if isinstance(data, dict):
            fld, nz = data.get("field"), data.get("noise")
            if isinstance(fld, dict) and "alpha" not in fld:
                alpha = nz.get("alpha") if isinstance(nz, dict) else getattr(nz, "alpha", None)
                if alpha is not None:
                    data = {**data, "field": {**fld, "alpha": alpha}}
        return data

    @model_validator(mode="after")
    def _check(self) -> "SimConfig":
        if self.field.alpha != self.noise.alpha:
            raise ValueError("field.alpha and noise.alpha must agree")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if not 0 < self.dt <= self.horizon:
            raise ValueError("dt must satisfy 0 < dt <= horizon")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.record_times is None:
            object.__setattr__(self, "record_times", default_record_times(self.horizon, self.dt))
        rt = self.record_times
        if not rt or rt[0] != 0.0:
            raise ValueError("record_times must start at 0")
        if abs(rt[-1] - self.horizon) > 1e-12 * self.horizon:
            raise ValueError("record_times must end at horizon")
        if any(b <= a for a, b in zip(rt, rt[1:])):
            raise ValueError("record_times must increase strictly")
        return self

    def grid(self) -> np.ndarray:
        return time_grid(self.horizon, self.dt)

    def record_steps(self) -> np.ndarray:
        """Grid index recorded for each record time (nearest grid time)."""
        grid = self.grid()
        idx = np.searchsorted(grid, self.record_times)
        idx = np.clip(idx, 1, grid.size - 1)
        left = grid[idx - 1]
        right = grid[idx]
        rt = np.asarray(self.record_times)
        return np.where(rt - left <= right - rt, idx - 1, idx)


@dataclass
class TrajectoryEnsemble:
    """Positions ``[record][particle][coord]`` of all particles, started at the origin."""

    config: SimConfig
    times: np.ndarray
    positions: np.ndarray
    modes: ModeSet

    def at(self, t: float) -> np.ndarray:
        hit = np.nonzero(np.isclose(self.times, t, rtol=1e-12, atol=0.0))[0]
        if hit.size == 0:
            raise RecordLookupError(f"t={t} is not a recorded time")
        return self.positions[hit[0]]


# ---------------------------------------------------------------------------
# single-mode maps


def mode_jump_map(mode: WaveMode, x, amplitude) -> np.ndarray:
    """Unit-time flow of ``amplitude * sigma_mode``: an exact translation."""
    x = np.asarray(x, dtype=float)
    return x + np.asarray(amplitude, dtype=float)[..., None] * sigma_eval(mode, x)


def rk4_flow(vector_field: Callable[[np.ndarray], np.ndarray], x, n_substeps: int) -> np.ndarray:
    """Classical RK4 for ``dy/ds = vector_field(y)`` over ``s in [0, 1]``."""
    if n_substeps < 1:
        raise ValueError("n_substeps must be >= 1")
    y = np.array(x, dtype=float)
    h = 1.0 / n_substeps
    for _ in range(n_substeps):
        k1 = vector_field(y)
        k2 = vector_field(y + 0.5 * h * k1)
        k3 = vector_field(y + 0.5 * h * k2)
        k4 = vector_field(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def mode_flow_oracle(mode: WaveMode, x, amplitude: float, n_substeps: int) -> np.ndarray:
    """Numerical flow of ``amplitude * sigma_mode``; test-time cross-check only."""
    return rk4_flow(lambda y: amplitude * sigma_eval(mode, y), x, n_substeps)


# ---------------------------------------------------------------------------
# stepping


def _order_uniforms(site: DrawSite, n_modes: int) -> np.ndarray:
    cols = []
    for j in range((n_modes + 1) // 2):
        a, b = site.uniforms(j)
        cols.extend((a, b))
    return np.stack(cols[:n_modes], axis=-1)


def _apply_modes(x: np.ndarray, amplitudes: np.ndarray, modes: ModeSet, order: Optional[np.ndarray]) -> np.ndarray:
    """Compose per-mode jump maps; ``order[p, j]`` is the j-th mode of particle p."""
    kv = modes.wave_vectors
    dirs = modes.directions
    plus = modes.is_plus
    if order is None:
        for m in range(len(modes)):
            phase = x[:, 0] * kv[m, 0] + x[:, 1] * kv[m, 1]
            s = np.cos(phase) if plus[m] else np.sin(phase)
            x = x + (SQRT2 * amplitudes[:, m] * s)[:, None] * dirs[m]
        return x
    rows = np.arange(x.shape[0])
    for j in range(order.shape[1]):
        m = order[:, j]
        k = kv[m]
        phase = x[:, 0] * k[:, 0] + x[:, 1] * k[:, 1]
        s = np.where(plus[m], np.cos(phase), np.sin(phase))
        x = x + (SQRT2 * amplitudes[rows, m] * s)[:, None] * dirs[m]
    return x


def amplitude_factor(config: SimConfig, modes: ModeSet) -> float:
    f = config.field
    return f.u * normalization_constant(f.eta, f.tau, f.alpha, card=len(modes))


def step(
    x,
    modes: ModeSet,
    config: SimConfig,
    streams: Sequence[RngStream],
    order_stream: Optional[RngStream] = None,
    dt: Optional[float] = None,
) -> np.ndarray:
    """Advance one particle by one time step.

    ``streams[m]`` supplies the increment of mode ``m``; ``order_stream``
    supplies the mode permutation when the config asks for one. Each
    stream advances by one draw index.
    """
    dt = config.dt if dt is None else dt
    if len(streams) != len(modes):
        raise ValueError("need one stream per mode")
    dz = np.array([increments(config.noise, dt, s.take(1))[0] for s in streams])
    amp = amplitude_factor(config, modes) * dz
    order = None
    if config.mode_order is ModeOrder.RANDOM_PERMUTATION_PER_STEP:
        if order_stream is None:
            raise ValueError("a random mode order needs an order stream")
        order = np.argsort(_order_uniforms(order_stream.take(1), len(modes)), axis=-1).reshape(1, -1)
    x = np.asarray(x, dtype=float).reshape(1, 2)
    return _apply_modes(x, amp[None, :], modes, order)[0]


def particle_streams(config: SimConfig, particle: int, n_modes: int) -> tuple[list[RngStream], RngStream]:
    """The per-mode and mode-order streams used for ``particle`` by :func:`run_ensemble`."""
    mode_streams = [RngStream(config.seed, int(stream_id(particle, m + 1))) for m in range(n_modes)]
    return mode_streams, RngStream(config.seed, int(stream_id(particle, 0)))


def _run_chunk(config: SimConfig, modes: ModeSet, particles: np.ndarray, grid: np.ndarray, rec: np.ndarray) -> np.ndarray:
    n_modes = len(modes)
    mode_sids = stream_id(particles[:, None], np.arange(1, n_modes + 1)[None, :])
    order_sids = stream_id(particles, 0)
    factor = amplitude_factor(config, modes)
    random_order = config.mode_order is ModeOrder.RANDOM_PERMUTATION_PER_STEP
    out = np.zeros((rec.size, particles.size, 2))
    x = np.zeros((particles.size, 2))
    want = {int(g): i for i, g in enumerate(rec)}
    slots_for = {}
    for g, i in want.items():
        slots_for.setdefault(g, []).append(i)
    for n in range(grid.size - 1):
        dt = grid[n + 1] - grid[n]
        try:
            dz = increments(config.noise, dt, DrawSite.build(config.seed, mode_sids, n))
        except SamplerFailure as exc:
            raise SamplerFailure(
                f"particles {int(particles[0])}..{int(particles[-1])}, step {n}: {exc}"
            ) from exc
        order = None
        if random_order:
            u = _order_uniforms(DrawSite.build(config.seed, order_sids, n), n_modes)
            order = np.argsort(u, axis=1)
        x = _apply_modes(x, factor * dz, modes, order)
        for i in slots_for.get(n + 1, ()):
            out[i] = x
    return out


def worker_count(workers: Optional[int] = None) -> int:
    cap = os.environ.get("LEVYFLOW_THREADS")
    n = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


def run_ensemble(config: SimConfig, workers: Optional[int] = None, modes: Optional[ModeSet] = None) -> TrajectoryEnsemble:
    """Simulate ``config.n_particles`` independent tracers from the origin.

    Particle ``p`` draws mode ``m`` from stream ``stream_id(p, m+1)`` at
    draw index = step number, and its permutation from ``stream_id(p, 0)``;
    the result is therefore independent of ``workers`` and of chunking.
    """
    modes = build_mode_set(config.field.eta) if modes is None else modes
    grid = config.grid()
    rec = config.record_steps()
    n = config.n_particles
    workers = worker_count(workers)
    chunk = min(CHUNK_LIMIT, max(1, math.ceil(n / workers)))
    bounds = [(s, min(n, s + chunk)) for s in range(0, n, chunk)]
    positions = np.empty((rec.size, n, 2))

    def work(b):
        lo, hi = b
        return lo, hi, _run_chunk(config, modes, np.arange(lo, hi), grid, rec)

    if workers == 1 or len(bounds) == 1:
        blocks = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, bounds))
    for lo, hi, block in blocks:
        positions[:, lo:hi] = block
    logger.debug("ensemble done: %d particles, %d modes, %d steps", n, len(modes), grid.size - 1)
    return TrajectoryEnsemble(config, grid[rec], positions, modes)


# ---------------------------------------------------------------------------
# persistence


def fmt17(values) -> list[str]:
    return [format(float(v), ".17g") for v in values]


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    """Comma-separated, header row, 17 significant digits, LF endings."""
    cols = []
    for c in columns:
        c = np.asarray(c)
        if np.issubdtype(c.dtype, np.integer):
            cols.append([str(int(v)) for v in c])
        elif c.dtype.kind in "OUS":
            cols.append([str(v) for v in c])
        else:
            cols.append(fmt17(c))
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in zip(*cols))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def ensemble_manifest(ensemble: TrajectoryEnsemble) -> dict:
    return {
        "config": ensemble.config.model_dump(mode="json"),
        "mode_set": ensemble.modes.to_json(),
        "card": len(ensemble.modes),
        "record_times": [float(t) for t in ensemble.times],
        "wave_vector_convention": "integer k, 1/(2 eta) <= |k| <= 1/eta, no 2*pi factor",
        "time_stepping": "Wong-Zakai splitting with exact per-mode Marcus translations",
        "code_version": __version__,
    }


def save_ensemble(ensemble: TrajectoryEnsemble, directory: Path) -> list[Path]:
    """Write ``trajectories.csv`` and ``trajectories.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n_rec, n_p, _ = ensemble.positions.shape
    t = np.repeat(ensemble.times, n_p)
    p = np.tile(np.arange(n_p), n_rec)
    pos = ensemble.positions.reshape(-1, 2)
    csv_path = directory / "trajectories.csv"
    write_csv(csv_path, ["t", "particle", "x1", "x2"], [t, p, pos[:, 0], pos[:, 1]])
    json_path = directory / "trajectories.json"
    json_path.write_text(json.dumps(ensemble_manifest(ensemble), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [csv_path, json_path]


def load_ensemble(directory: Path) -> TrajectoryEnsemble:
    directory = Path(directory)
    meta = json.loads((directory / "trajectories.json").read_text(encoding="utf-8"))
    config = SimConfig.model_validate(meta["config"])
    modes = ModeSet.from_json(meta["mode_set"])
    data = np.loadtxt(directory / "trajectories.csv", delimiter=",", skiprows=1, ndmin=2)
    times = np.asarray(meta["record_times"])
    n_p = config.n_particles
    positions = data[:, 2:4].reshape(times.size, n_p, 2)
    return TrajectoryEnsemble(config, times, positions, modes)
