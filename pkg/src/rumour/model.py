"""Four-class stochastic rumour model: parameters, states, rates, presets.

A closed, homogeneously mixing population of N + 1 individuals splits into
ignorants (X), uninterested (U), spreaders (Y) and stiflers (Z).  Starting
from (X, U, Y, Z) = (N, 0, 1, 0), the counts evolve as a continuous-time
Markov chain whose transitions on (X, U, Y) are

    (-1,  0, +1)   lambda * delta * X * Y
    (-1, +1,  0)   lambda * (1 - delta) * X * Y
    ( 0,  0, -2)   lambda * theta1 * Y * (Y - 1) / 2
    ( 0,  0, -1)   lambda * theta2 * Y * (Y - 1)
                   + lambda * gamma * Y * (N + 1 - X - Y)

An informed ignorant starts spreading with probability delta, otherwise it
stifles immediately (becomes uninterested).  A meeting of two spreaders
turns both into stiflers (theta1 channel) or just one (theta2 channel); a
spreader meeting anyone else already informed stifles at rate gamma.  Z is
implicit throughout: Z + U = N + 1 - X - Y.  The chain absorbs at Y = 0.

The derived combination theta = theta1 + theta2 - gamma controls the
shape of the asymptotics and must lie in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from rumour.errors import ConstraintViolation

# Derived theta within this distance of 0 or 1 snaps to the boundary;
# boundary models (theta = 0 or 1) are legitimate and float noise in
# preset mappings must not push them out of range.
THETA_SNAP = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """The five admissible rate/probability parameters.

    lam     overall contact rate (> 0); only sets the time scale
    gamma   spreader-stifler rate multiplier (> 0)
    theta1  both-stifle spreader-meeting multiplier (>= 0)
    theta2  one-stifles spreader-meeting multiplier (>= 0)
    delta   probability an informed ignorant starts spreading (0 < delta <= 1)

    theta = theta1 + theta2 - gamma is derived, never stored, and must lie
    in [0, 1] (up to a THETA_SNAP float-rounding allowance at the ends).
    """

    lam: float
    gamma: float
    theta1: float
    theta2: float
    delta: float

    def __post_init__(self):
        for name in ("lam", "gamma", "theta1", "theta2", "delta"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not math.isfinite(getattr(self, name)):
                raise ConstraintViolation(f"{name} must be finite, got {getattr(self, name)!r}")
        if not self.lam > 0:
            raise ConstraintViolation(f"lambda > 0 violated (lambda = {self.lam!r})")
        if not self.gamma > 0:
            raise ConstraintViolation(f"gamma > 0 violated (gamma = {self.gamma!r})")
        if not self.theta1 >= 0:
            raise ConstraintViolation(f"theta1 >= 0 violated (theta1 = {self.theta1!r})")
        if not self.theta2 >= 0:
            raise ConstraintViolation(f"theta2 >= 0 violated (theta2 = {self.theta2!r})")
        if not 0 < self.delta <= 1:
            raise ConstraintViolation(f"0 < delta <= 1 violated (delta = {self.delta!r})")
        raw = self.theta1 + self.theta2 - self.gamma
        if raw < -THETA_SNAP or raw > 1 + THETA_SNAP:
            raise ConstraintViolation(
                f"0 <= theta <= 1 violated (theta = theta1 + theta2 - gamma = {raw!r})"
            )

    @property
    def theta(self) -> float:
        raw = self.theta1 + self.theta2 - self.gamma
        return min(1.0, max(0.0, raw))

    def to_json_obj(self) -> dict:
        """Flat JSON object; key order is part of the output contract."""
        return {
            "lambda": self.lam,
            "gamma": self.gamma,
            "theta1": self.theta1,
            "theta2": self.theta2,
            "delta": self.delta,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ModelParams":
        """Accepts either the flat five-key form or a preset object."""
        if "preset" in obj:
            aux = {k: v for k, v in obj.items() if k != "preset"}
            return preset_params(obj["preset"], **aux)
        try:
            return cls(
                lam=float(obj["lambda"]),
                gamma=float(obj["gamma"]),
                theta1=float(obj["theta1"]),
                theta2=float(obj["theta2"]),
                delta=float(obj["delta"]),
            )
        except KeyError as e:
            raise ConstraintViolation(f"missing parameter key {e.args[0]!r}") from None


def validate_params(lam, gamma, theta1, theta2, delta) -> ModelParams:
    """Validate the five raw numbers; raises ConstraintViolation naming the
    violated inequality."""
    return ModelParams(lam=lam, gamma=gamma, theta1=theta1, theta2=theta2, delta=delta)


@dataclass(frozen=True)
class PopulationState:
    """Integer counts of the four classes for a population of size n + 1."""

    x: int
    u: int
    y: int
    z: int
    n: int

    def __post_init__(self):
        if min(self.x, self.u, self.y, self.z) < 0:
            raise ConstraintViolation(f"negative count in state {self}")
        if self.x > self.n:
            raise ConstraintViolation(f"x = {self.x} exceeds n = {self.n}")
        if self.x + self.u + self.y + self.z != self.n + 1:
            raise ConstraintViolation(
                f"x + u + y + z = {self.x + self.u + self.y + self.z} != n + 1 = {self.n + 1}"
            )

    @classmethod
    def initial(cls, n: int) -> "PopulationState":
        """One spreader amid n ignorants."""
        return cls(x=n, u=0, y=1, z=0, n=n)


@dataclass(frozen=True)
class TransitionRates:
    """Rates of the four transitions out of a state; total = 0 iff y = 0."""

    r0: float  # ignorant -> spreader
    r1: float  # ignorant -> uninterested
    r2: float  # two spreaders stifle
    r3: float  # one spreader stifles

    @property
    def total(self) -> float:
        return self.r0 + self.r1 + self.r2 + self.r3


def transition_rates(state: PopulationState, params: ModelParams) -> TransitionRates:
    """Evaluate the four transition rates at a state.

    Rates are recomputed fresh from the integer counts (four multiplies);
    a state with y = 0 is absorbing and yields all-zero rates.
    """
    x, y = state.x, state.y
    xy = float(x) * float(y)
    yy1 = float(y) * float(y - 1)
    return TransitionRates(
        r0=params.lam * params.delta * xy,
        r1=params.lam * (1.0 - params.delta) * xy,
        r2=params.lam * params.theta1 * yy1 / 2.0,
        r3=params.lam * params.theta2 * yy1
        + params.lam * params.gamma * float(y) * float(state.n + 1 - x - y),
    )


# --------------------------------------------------------------------------
# Presets: named models mapped onto the five-parameter family.
# --------------------------------------------------------------------------


def _require(cond: bool, msg: str):
    if not cond:
        raise ConstraintViolation(msg)


def _map_dk() -> ModelParams:
    return ModelParams(lam=1.0, gamma=1.0, theta1=1.0, theta2=0.0, delta=1.0)


def _map_mt() -> ModelParams:
    return ModelParams(lam=1.0, gamma=1.0, theta1=0.0, theta2=1.0, delta=1.0)


def _map_hayes() -> ModelParams:
    return ModelParams(lam=1.0, gamma=1.0, theta1=2.0, theta2=0.0, delta=1.0)


def _map_rho(rho: float) -> ModelParams:
    _require(0 <= rho <= 1, f"rho in [0, 1] violated (rho = {rho!r})")
    return ModelParams(lam=1.0, gamma=1.0, theta1=rho, theta2=1.0 - rho, delta=1.0)


def _map_apq_dk(alpha: float, p: float, q: float) -> ModelParams:
    _require(0 < alpha <= 1, f"alpha in (0, 1] violated (alpha = {alpha!r})")
    _require(0 < p <= 1, f"p in (0, 1] violated (p = {p!r})")
    _require(0 < q <= 1, f"q in (0, 1] violated (q = {q!r})")
    return ModelParams(
        lam=p,
        gamma=alpha,
        theta1=alpha * alpha * (2.0 - p),
        theta2=alpha * (1.0 - alpha) * (2.0 - p),
        delta=q,
    )


def _map_apq_mt(alpha: float, p: float, q: float) -> ModelParams:
    _require(0 < alpha <= 1, f"alpha in (0, 1] violated (alpha = {alpha!r})")
    _require(0 < p <= 1, f"p in (0, 1] violated (p = {p!r})")
    _require(0 < q <= 1, f"q in (0, 1] violated (q = {q!r})")
    return ModelParams(lam=p, gamma=alpha, theta1=0.0, theta2=alpha, delta=q)


def _map_pearce(p: float, q1: float, q2: float, r: float) -> ModelParams:
    _require(0 < p <= 1, f"p in (0, 1] violated (p = {p!r})")
    _require(q1 >= 0, f"q1 >= 0 violated (q1 = {q1!r})")
    _require(q2 >= 0, f"q2 >= 0 violated (q2 = {q2!r})")
    _require(q1 + q2 <= 1, f"q1 + q2 <= 1 violated (q1 + q2 = {q1 + q2!r})")
    _require(0 < r <= 1, f"r in (0, 1] violated (r = {r!r})")
    return ModelParams(lam=p, gamma=r / p, theta1=q2 / p, theta2=q1 / (2.0 * p), delta=1.0)


def _map_kawachi(alpha: float, beta: float, gamma: float, theta: float) -> ModelParams:
    _require(0 < alpha <= 1, f"alpha in (0, 1] violated (alpha = {alpha!r})")
    _require(0 <= beta <= 1, f"beta in [0, 1] violated (beta = {beta!r})")
    _require(0 < gamma <= 1, f"gamma in (0, 1] violated (gamma = {gamma!r})")
    _require(0 < theta <= 1, f"theta in (0, 1] violated (theta = {theta!r})")
    return ModelParams(
        lam=alpha, gamma=gamma / alpha, theta1=2.0 * beta / alpha, theta2=0.0, delta=theta
    )


@dataclass(frozen=True)
class PresetInfo:
    name: str
    aux: tuple[str, ...]
    mapping: str
    mapper: Callable[..., ModelParams]


PRESETS: dict[str, PresetInfo] = {
    "dk": PresetInfo(
        "dk", (), "lambda=1, gamma=1, theta1=1, theta2=0, delta=1", _map_dk
    ),
    "mt": PresetInfo(
        "mt", (), "lambda=1, gamma=1, theta1=0, theta2=1, delta=1", _map_mt
    ),
    "hayes": PresetInfo(
        "hayes", (), "lambda=1, gamma=1, theta1=2, theta2=0, delta=1", _map_hayes
    ),
    "rho": PresetInfo(
        "rho", ("rho",), "lambda=gamma=delta=1, theta1=rho, theta2=1-rho", _map_rho
    ),
    "apq_dk": PresetInfo(
        "apq_dk",
        ("alpha", "p", "q"),
        "lambda=p, gamma=alpha, theta1=alpha^2(2-p), theta2=alpha(1-alpha)(2-p), delta=q",
        _map_apq_dk,
    ),
    "apq_mt": PresetInfo(
        "apq_mt",
        ("alpha", "p", "q"),
        "lambda=p, gamma=alpha, theta1=0, theta2=alpha, delta=q",
        _map_apq_mt,
    ),
    "pearce": PresetInfo(
        "pearce",
        ("p", "q1", "q2", "r"),
        "lambda=p, gamma=r/p, theta1=q2/p, theta2=q1/(2p), delta=1",
        _map_pearce,
    ),
    "kawachi": PresetInfo(
        "kawachi",
        ("alpha", "beta", "gamma", "theta"),
        "lambda=alpha, gamma=gamma/alpha, theta1=2*beta/alpha, theta2=0, delta=theta",
        _map_kawachi,
    ),
}


def preset_params(name: str, **aux) -> ModelParams:
    """Map a named preset (plus its auxiliary parameters) to ModelParams.

    Raises ConstraintViolation for unknown presets, out-of-range auxiliary
    parameters, or mapped parameters that violate the admissibility
    constraints (possible for extreme pearce/kawachi inputs).
    """
    info = PRESETS.get(name)
    if info is None:
        raise ConstraintViolation(
            f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}"
        )
    missing = [a for a in info.aux if a not in aux]
    if missing:
        raise ConstraintViolation(f"preset {name!r} needs {', '.join(missing)}")
    extra = [k for k in aux if k not in info.aux]
    if extra:
        raise ConstraintViolation(f"preset {name!r} does not take {', '.join(extra)}")
    return info.mapper(**{k: float(v) for k, v in aux.items()})
