"""Deterministic spatial structure of the synthetic velocity field.

The field is a sum over the shell ``K_eta`` of integer wave vectors with
``1/(2 eta) <= |k| <= 1/eta`` (no 2*pi factor), each carrying the
divergence-free mode ``sqrt(2) cos(k.x) k_perp/|k|`` (PLUS half) or
``sqrt(2) sin(k.x) k_perp/|k|`` (MINUS half), ``k_perp = (-k2, k1)``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import integrate, special

from .errors import ConfigError, DomainError


class Parity(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class WaveMode:
    k: tuple[int, int]
    parity: Parity

    def __post_init__(self):
        k1, k2 = self.k
        if k1 == 0 and k2 == 0:
            raise DomainError("wave vector must be non-zero")
        if self.parity is not parity_of(self.k):
            raise DomainError(f"parity {self.parity.value} inconsistent with k={self.k}")

    @classmethod
    def of(cls, k1: int, k2: int) -> "WaveMode":
        return cls((int(k1), int(k2)), parity_of((k1, k2)))

    @property
    def norm(self) -> float:
        return math.hypot(*self.k)

    @property
    def direction(self) -> np.ndarray:
        """Unit vector ``k_perp / |k|`` along which the mode pushes."""
        k1, k2 = self.k
        return np.array([-k2, k1], dtype=float) / self.norm


def parity_of(k) -> Parity:
    k1, k2 = int(k[0]), int(k[1])
    return Parity.PLUS if (k1 > 0 or (k1 == 0 and k2 > 0)) else Parity.MINUS


@dataclass(frozen=True)
class ModeSet:
    eta: float
    modes: tuple[WaveMode, ...]

    def __len__(self) -> int:
        return len(self.modes)

    @cached_property
    def wave_vectors(self) -> np.ndarray:
        """Integer wave vectors as a float ``(n, 2)`` array."""
        return np.array([m.k for m in self.modes], dtype=float)

    @cached_property
    def directions(self) -> np.ndarray:
        """Unit push directions ``k_perp/|k|``, shape ``(n, 2)``."""
        return np.array([m.direction for m in self.modes])

    @cached_property
    def is_plus(self) -> np.ndarray:
        return np.array([m.parity is Parity.PLUS for m in self.modes])

    def to_json(self) -> dict:
        return {"eta": self.eta, "modes": [[m.k[0], m.k[1], m.parity.value] for m in self.modes]}

    @classmethod
    def from_json(cls, doc: dict | str) -> "ModeSet":
        if isinstance(doc, str):
            doc = json.loads(doc)
        modes = tuple(WaveMode((int(a), int(b)), Parity(p)) for a, b, p in doc["modes"])
        return cls(float(doc["eta"]), modes)


class FieldParams(BaseModel):
    """Mean velocity ``u``, relaxation time ``tau``, space scale ``eta``, index ``alpha``."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    u: float = 1.0
    tau: float = 1.0
    eta: float
    alpha: float

    @model_validator(mode="after")
    def _check(self) -> "FieldParams":
        for name in ("u", "tau", "eta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite positive number")
        if not 1.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (1, 2)")
        return self


def build_mode_set(eta: float) -> ModeSet:
    """All integer ``k`` with ``1/(2 eta) <= |k| <= 1/eta``, lexicographic order.

    Endpoints are compared on ``|k|^2`` with a relative slack of 1e-12 so
    that radii landing exactly on a bound are kept.
    """
    if not (eta > 0 and math.isfinite(eta)):
        raise DomainError("eta must be a finite positive number")
    lo2 = (0.5 / eta) ** 2 * (1.0 - 1e-12)
    hi2 = (1.0 / eta) ** 2 * (1.0 + 1e-12)
    r = int(math.floor(1.0 / eta)) + 1
    modes = []
    for k1 in range(-r, r + 1):
        for k2 in range(-r, r + 1):
            n2 = k1 * k1 + k2 * k2
            if n2 and lo2 <= n2 <= hi2:
                modes.append(WaveMode.of(k1, k2))
    if not modes:
        raise ConfigError(f"the wave-number shell is empty for eta={eta}")
    return ModeSet(float(eta), tuple(modes))


def sigma_eval(mode: WaveMode, x) -> np.ndarray:
    """Mode vector field at ``x``; ``x`` may carry leading batch dimensions."""
    x = np.asarray(x, dtype=float)
    phase = x[..., 0] * mode.k[0] + x[..., 1] * mode.k[1]
    amp = np.cos(phase) if mode.parity is Parity.PLUS else np.sin(phase)
    return math.sqrt(2.0) * amp[..., None] * mode.direction


def normalization_constant(eta: float, tau: float, alpha: float, card: int | None = None) -> float:
    """``Card(K_eta)^(-1/alpha) * tau^((alpha-1)/alpha)`` with the enumerated cardinality."""
    if not tau > 0:
        raise DomainError("tau must be > 0")
    if not 1.0 < alpha < 2.0:
        raise DomainError("alpha must lie in (1, 2)")
    if card is None:
        card = len(build_mode_set(eta))
    return card ** (-1.0 / alpha) * tau ** ((alpha - 1.0) / alpha)


def spatial_average(alpha: float) -> float:
    """Mean of ``|sin t|^alpha`` over a period, by quadrature."""
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    val, _ = integrate.quad(lambda t: math.sin(t) ** alpha, 0.0, 0.5 * math.pi, epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val / math.pi


def spatial_average_closed_form(alpha: float) -> float:
    """``Gamma((alpha+1)/2) / (sqrt(pi) Gamma(alpha/2 + 1))``.

    For ``alpha > 1`` this equals ``(alpha-1)/(sqrt(pi) alpha) *
    Gamma((alpha-1)/2) / Gamma(alpha/2)``.
    """
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    return float(special.gamma(0.5 * (alpha + 1.0)) / (math.sqrt(math.pi) * special.gamma(0.5 * alpha + 1.0)))
