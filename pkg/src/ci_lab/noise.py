"""Single-qubit Pauli channels, erasure, and the derived spin-model couplings."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

# (eta_x, eta_z) labels in the order used by eta_distribution: I, X, Y, Z, erased
ETA_VALUES = np.array([(1, 1), (-1, 1), (-1, -1), (1, -1), (0, 0)], dtype=np.int8)


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class PauliChannel:
    """i.i.d. single-qubit Pauli channel with probabilities (p_x, p_y, p_z)."""

    p_x: float
    p_y: float
    p_z: float
    kind: str = "pauli"
    # identity probability; computed as 1 - p unless a constructor knows a more accurate form
    p_i: float | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("p_x", "p_y", "p_z"):
            _check_prob(name, getattr(self, name))
        if self.p > 1.0 + 1e-15:
            raise ValueError(f"total error probability {self.p} exceeds 1")
        if self.p_i is None:
            object.__setattr__(self, "p_i", max(0.0, 1.0 - self.p))

    @property
    def p(self) -> float:
        return self.p_x + self.p_y + self.p_z

    @property
    def probs(self) -> np.ndarray:
        """Probabilities of (I, X, Y, Z)."""
        return np.array([self.p_i, self.p_x, self.p_y, self.p_z])

    @property
    def flip_x(self) -> float:
        """Marginal probability of an X component (X or Y)."""
        return self.p_x + self.p_y

    @property
    def flip_z(self) -> float:
        """Marginal probability of a Z component (Z or Y)."""
        return self.p_z + self.p_y

    @property
    def is_independent(self) -> bool:
        """True when the X and Z components are independent (p_y = flip_x * flip_z)."""
        return abs(self.p_i * self.p_y - self.p_x * self.p_z) < 1e-15


@dataclass(frozen=True)
class NoiseSpec:
    channel: PauliChannel
    e: float = 0.0

    def __post_init__(self):
        _check_prob("erasure probability", self.e)


@dataclass(frozen=True)
class Couplings:
    J_x: float
    J_z: float
    J_1: float


def bit_phase_flip(p1: float, p2: float | None = None) -> PauliChannel:
    """Independent bit flip (p1) and phase flip (p2, default p1)."""
    p1 = _check_prob("p1", p1)
    p2 = p1 if p2 is None else _check_prob("p2", p2)
    return PauliChannel(p1 * (1 - p2), p1 * p2, p2 * (1 - p1), kind="bf",
                        p_i=(1 - p1) * (1 - p2))


def depolarizing(p: float) -> PauliChannel:
    p = _check_prob("p", p)
    return PauliChannel(p / 3, p / 3, p / 3, kind="depol")


def identity_channel() -> PauliChannel:
    return PauliChannel(0.0, 0.0, 0.0, kind="identity")


def couplings(c: PauliChannel) -> Couplings:
    """J_x = ln[(1-p)/p_x], J_z = ln[(1-p)/p_z], J_1 = ln[(1-p) p_y / (p_x p_z)]."""
    q = c.p_i
    if min(c.p_x, c.p_y, c.p_z, q) <= 0.0:
        raise ValueError("couplings diverge for a zero-probability component; use the coset evaluator")
    return Couplings(
        J_x=math.log(q / c.p_x),
        J_z=math.log(q / c.p_z),
        J_1=math.log(q) + math.log(c.p_y) - math.log(c.p_x) - math.log(c.p_z),
    )


def eta_distribution(spec: NoiseSpec) -> tuple[np.ndarray, np.ndarray]:
    """Categorical law of (eta_x, eta_z) per qubit: returns (values[5, 2], masses[5])."""
    c, e = spec.channel, spec.e
    masses = np.array([c.p_i * (1 - e), c.p_x * (1 - e), c.p_y * (1 - e), c.p_z * (1 - e), e])
    return ETA_VALUES.copy(), masses


_NOISE = re.compile(r"^(bf|depol):([0-9.eE+-]+)(?:,([0-9.eE+-]+))?$")


def parse_noise(text: str) -> PauliChannel:
    """Parse ``bf:<p1>[,<p2>]`` or ``depol:<p>``."""
    m = _NOISE.match(text.strip().lower())
    if not m:
        raise ValueError(f"unknown noise spec {text!r}; expected bf:<p1> or depol:<p>")
    kind, a, b = m.group(1), float(m.group(2)), m.group(3)
    if kind == "bf":
        return bit_phase_flip(a, None if b is None else float(b))
    if b is not None:
        raise ValueError("depol takes a single probability")
    return depolarizing(a)


def channel_family(kind: str):
    """Map a family name to its one-parameter channel constructor."""
    try:
        return {"bf": bit_phase_flip, "depol": depolarizing}[kind]
    except KeyError:
        raise ValueError(f"unknown noise family {kind!r}; expected 'bf' or 'depol'") from None
