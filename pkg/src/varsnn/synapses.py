"""Resistive-memory synapse models.

Two memristor profiles (HP and PEO-PANI) map a charge ``q`` on
``[q_min, q_max(beta)]`` to a weight on ``[0.01, 1.0]``.  Both use the same
construction: an unscaled conductance ``G(q)`` is evaluated at the two charge
endpoints and an affine map sends those to 0.01 and 1.0::

    sf1 = 0.99 / (G(q_max) - G(q_min))
    sf2 = G(q_min) * sf1 - 0.01
    W   = G(q) * sf1 - sf2

HP uses ``G = 1 / (R_off - R_off R_on beta q)``, which is convex in ``q``.
PEO-PANI uses ``G = 1 / (-R_off R_on beta q - R_on) + R_on``, which is
concave.  Resistive switching memories (RSMs) are bistable and toggle after
``s_n`` consecutive plasticity events.  Constant connections ignore
plasticity altogether.

The scalar ``*_kernel`` functions are shared with the compiled network
kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

from ._accel import jit
from .errors import DomainError

W_MIN = 0.01
W_MAX = 1.0

HP = 0
PEO_PANI = 1


class DeviceType(IntEnum):
    HP = HP
    PEO_PANI = PEO_PANI


class Direction(IntEnum):
    NEGATIVE = -1
    NONE = 0
    POSITIVE = 1


class SynapseKind(IntEnum):
    """Connection kinds.  VMEM is a memristor whose beta and type evolve."""

    HP = 0
    PEO = 1
    VMEM = 2
    RSM = 3
    CONST = 4

    @property
    def is_memristor(self):
        return self in (SynapseKind.HP, SynapseKind.PEO, SynapseKind.VMEM)

    @property
    def is_plastic(self):
        return self is not SynapseKind.CONST


# ---------------------------------------------------------------------------
# scalar kernels


@jit
def q_max_kernel(beta, r_on, r_off):
    return (r_on - r_off) / (-r_on * r_off * beta)


@jit
def conductance_kernel(q, beta, device_type, r_on, r_off):
    k = -r_off * r_on * beta
    if device_type == HP:
        return 1.0 / (k * q + r_off)
    return 1.0 / (k * q - r_on) + r_on


@jit
def scale_factors_kernel(beta, device_type, r_on, r_off, q_min):
    g_lo = conductance_kernel(q_min, beta, device_type, r_on, r_off)
    g_hi = conductance_kernel(q_max_kernel(beta, r_on, r_off), beta, device_type, r_on, r_off)
    sf1 = (W_MAX - W_MIN) / (g_hi - g_lo)
    sf2 = g_lo * sf1 - W_MIN
    return sf1, sf2


@jit
def weight_kernel(q, beta, device_type, sf1, sf2, r_on, r_off):
    return conductance_kernel(q, beta, device_type, r_on, r_off) * sf1 - sf2


@jit
def charge_kernel(w, beta, device_type, sf1, sf2, r_on, r_off):
    g = (w + sf2) / sf1
    k = -r_off * r_on * beta
    if device_type == HP:
        return (1.0 / g - r_off) / k
    return (1.0 / (g - r_on) + r_on) / k


@jit
def rsm_kernel(s_c, s_n, w, event, lrs, hrs):
    """One RSM update.  Returns ``(s_c, w, switched)``."""
    if event:
        s_c += 1
    elif s_c > 0:
        s_c -= 1
    if s_c >= s_n:
        s_c = 0
        w = hrs if w == lrs else lrs
        return s_c, w, True
    return s_c, w, False


# ---------------------------------------------------------------------------
# parameter and state types


@dataclass(frozen=True)
class MemristorParams:
    r_on: float = 0.01
    r_off: float = 1.0
    beta: float = 1.0
    q_min: float = 0.0098
    big_l: int = 1000

    def __post_init__(self):
        if not 0 < self.r_on < self.r_off:
            raise DomainError("need 0 < r_on < r_off")
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.q_min <= 0 or self.big_l < 1:
            raise DomainError("need q_min > 0 and big_l >= 1")
        if not self.q_max > self.q_min:
            raise DomainError(f"q_max={self.q_max} does not exceed q_min={self.q_min}")

    @property
    def q_max(self) -> float:
        return q_max_kernel(self.beta, self.r_on, self.r_off)

    @property
    def delta_q(self) -> float:
        return (self.q_max - self.q_min) / self.big_l

    def with_beta(self, beta) -> "MemristorParams":
        return replace(self, beta=float(beta))

    def scale_factors(self, device_type) -> tuple[float, float]:
        return scale_factors_kernel(self.beta, int(device_type), self.r_on, self.r_off, self.q_min)


DEFAULT_MEMRISTOR = MemristorParams()


def _params(beta, params):
    base = DEFAULT_MEMRISTOR if params is None else params
    if beta is None or beta == base.beta:
        return base
    return base.with_beta(beta)


def _snap(x, lo, hi, what):
    slack = 1e-12 * (hi - lo)
    if not lo - slack <= x <= hi + slack:
        raise DomainError(f"{what}={x!r} outside [{lo!r}, {hi!r}]")
    return min(max(x, lo), hi)


def memristor_weight_from_charge(q, beta=None, device_type=DeviceType.HP, params=None) -> float:
    """Weight of a memristor holding charge ``q``.

    Raises DomainError if ``q`` lies outside ``[q_min, q_max(beta)]``.
    """
    p = _params(beta, params)
    q = _snap(float(q), p.q_min, p.q_max, "q")
    sf1, sf2 = p.scale_factors(device_type)
    return weight_kernel(q, p.beta, int(device_type), sf1, sf2, p.r_on, p.r_off)


def memristor_charge_from_weight(w, beta=None, device_type=DeviceType.HP, params=None) -> float:
    """Inverse of :func:`memristor_weight_from_charge`."""
    p = _params(beta, params)
    w = _snap(float(w), W_MIN, W_MAX, "w")
    sf1, sf2 = p.scale_factors(device_type)
    q = charge_kernel(w, p.beta, int(device_type), sf1, sf2, p.r_on, p.r_off)
    return min(max(q, p.q_min), p.q_max)


@dataclass(frozen=True)
class MemristorState:
    device_type: DeviceType
    beta: float
    q: float
    w: float

    @classmethod
    def from_charge(cls, q, beta=1.0, device_type=DeviceType.HP, params=None):
        p = _params(beta, params)
        return cls(DeviceType(device_type), p.beta, float(q), memristor_weight_from_charge(q, params=p,
                                                                                          device_type=device_type))

    @classmethod
    def from_weight(cls, w=0.5, beta=1.0, device_type=DeviceType.HP, params=None):
        p = _params(beta, params)
        q = memristor_charge_from_weight(w, params=p, device_type=device_type)
        return cls(DeviceType(device_type), p.beta, q, memristor_weight_from_charge(q, params=p,
                                                                                   device_type=device_type))


def memristor_apply_stdp(state: MemristorState, direction, params=None) -> MemristorState:
    """Move the charge one step of ``(q_max - q_min) / L`` and saturate."""
    p = _params(state.beta, params)
    direction = Direction(direction)
    if direction is Direction.NONE:
        return state
    q = state.q + direction * p.delta_q
    q = min(max(q, p.q_min), p.q_max)
    return replace(state, q=q, w=memristor_weight_from_charge(q, params=p, device_type=state.device_type))


@dataclass(frozen=True)
class RsmState:
    s_n: int
    s_c: int = 0
    w: float = 0.9
    lrs: float = 0.9
    hrs: float = 0.1

    def __post_init__(self):
        if self.s_n < 1:
            raise DomainError("s_n must be >= 1")
        if not 0 <= self.s_c < self.s_n:
            raise DomainError(f"s_c={self.s_c} must lie in [0, s_n)")
        if self.w not in (self.lrs, self.hrs):
            raise DomainError(f"RSM weight must be {self.lrs} or {self.hrs}, got {self.w}")


def rsm_step(state: RsmState, event_occurred: bool) -> RsmState:
    s_c, w, _ = rsm_kernel(state.s_c, state.s_n, state.w, bool(event_occurred), state.lrs, state.hrs)
    return replace(state, s_c=s_c, w=w)


@dataclass(frozen=True)
class ConstantState:
    w: float

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise DomainError("constant weight must lie in [0, 1]")


def constant_apply_stdp(state: ConstantState, direction=None) -> ConstantState:
    return state


def profile_sweep(kind, device_param, n_events: int, params=None) -> list[tuple[int, float]]:
    """Weight trajectory under a run of identical plasticity events.

    ``kind`` is ``"hp"``, ``"peo"`` (memristors, ``device_param`` = beta,
    positive events starting from ``q_min``) or ``"rsm"`` (``device_param`` =
    s_n, an event on every step starting from the low-resistance state).
    Row 0 is the initial weight.
    """
    if n_events < 1:
        raise DomainError("n_events must be >= 1")
    kind = str(kind).lower()
    if kind in ("hp", "peo", "peo-pani", "peo_pani"):
        dtype = DeviceType.HP if kind == "hp" else DeviceType.PEO_PANI
        p = _params(float(device_param), params)
        state = MemristorState.from_charge(p.q_min, params=p, device_type=dtype)
        curve = [(0, state.w)]
        for i in range(1, n_events + 1):
            state = memristor_apply_stdp(state, Direction.POSITIVE, p)
            curve.append((i, state.w))
        return curve
    if kind == "rsm":
        s_n = int(device_param)
        if s_n != device_param:
            raise DomainError("RSM s_n must be an integer")
        state = RsmState(s_n=s_n)
        curve = [(0, state.w)]
        for i in range(1, n_events + 1):
            state = rsm_step(state, True)
            curve.append((i, state.w))
        return curve
    raise DomainError(f"unknown sweep kind {kind!r}")
