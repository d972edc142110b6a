"""Limiting fractions at absorption.

As N grows, the fraction of never-informed individuals converges to the
unique root in (0, 1) of a transcendental equation.  For 0 < theta < 1
the defining function is

    f(x) = ((gamma + delta*theta) * x**theta - (gamma + delta)*theta*x
            - gamma*(1 - theta)) / (theta * (1 - theta))

with the boundary limits

    f0(x) = (gamma + delta)*(1 - x) + gamma*log(x)              (theta = 0)
    f1(x) = -gamma*(1 - x) - (gamma + delta)*x*log(x)           (theta = 1)

Each is unimodal on (0, 1] with a negative left tail and a zero at x = 1,
so the root is safely bracketed between a small positive abscissa and the
interior maximiser.  At theta in {0, 1} the root also has a Lambert-W
closed form, and at theta = 1/2 it is (gamma / (gamma + delta))**2; those
routes are kept independent of the bracketed solver so each can check the
other.  The root never depends on lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from rumour.errors import DomainError, NoBracket, NotApplicable, ThetaBoundary
from rumour.model import ModelParams

# theta within this distance of a boundary dispatches to f0/f1; below the
# float noise of computing theta1 + theta2 - gamma.
THETA_EPS = 1e-9

# target: |f(root)| <= RESIDUAL_TOL * max(1, |f'(root)|)
RESIDUAL_TOL = 1e-12

_BISECT_WIDTH = 1e-8
_BRANCH_POINT = -math.exp(-1.0)  # -1/e


@dataclass(frozen=True)
class LimitResult:
    """Root of the final-size equation plus solver diagnostics.

    x_inf lies in (0, gamma/(gamma+delta)); u_inf = (1-delta)*(1-x_inf).
    """

    x_inf: float
    u_inf: float
    method: str  # bisection-newton | lambert-w | closed-half
    residual: float
    iterations: int

    def to_json_obj(self) -> dict:
        return {
            "x_inf": self.x_inf,
            "u_inf": self.u_inf,
            "method": self.method,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def theta_branch(theta: float) -> int | None:
    """0 or 1 when theta sits at that boundary (within THETA_EPS), else None."""
    if abs(theta) <= THETA_EPS:
        return 0
    if abs(theta - 1.0) <= THETA_EPS:
        return 1
    return None


def f_eval(x: float, p: ModelParams) -> float:
    """The interior-theta final-size function; only defined for 0 < theta < 1."""
    th = p.theta
    if theta_branch(th) is not None:
        raise ThetaBoundary(
            f"theta = {th} is at a boundary; use f0_eval/f1_eval instead"
        )
    g, d = p.gamma, p.delta
    return ((g + d * th) * x**th - (g + d) * th * x - g * (1.0 - th)) / (th * (1.0 - th))


def f0_eval(x: float, p: ModelParams) -> float:
    """theta -> 0 limit of f; defined on (0, 1]."""
    if x <= 0:
        raise DomainError(f"f0 needs x > 0, got {x!r}")
    return (p.gamma + p.delta) * (1.0 - x) + p.gamma * math.log(x)


def f1_eval(x: float, p: ModelParams) -> float:
    """theta -> 1 limit of f; defined on (0, 1]."""
    if x <= 0:
        raise DomainError(f"f1 needs x > 0, got {x!r}")
    return -p.gamma * (1.0 - x) - (p.gamma + p.delta) * x * math.log(x)


def f_theta_eval(x: float, p: ModelParams) -> float:
    """f, f0 or f1 according to where theta sits."""
    b = theta_branch(p.theta)
    if b == 0:
        return f0_eval(x, p)
    if b == 1:
        return f1_eval(x, p)
    return f_eval(x, p)


def argmax_f(p: ModelParams) -> float:
    """Interior maximiser of f: ((gamma+delta*theta)/(gamma+delta))**(1/(1-theta))."""
    th = p.theta
    if theta_branch(th) is not None:
        raise ThetaBoundary(f"theta = {th} is at a boundary; no interior-theta argmax")
    g, d = p.gamma, p.delta
    return ((g + d * th) / (g + d)) ** (1.0 / (1.0 - th))


def _target(p: ModelParams):
    """(f, f', bracket top) for the branch that theta selects.

    The bracket top is the interior maximiser: for f0 it is
    gamma/(gamma+delta) (root of f0'), for f1 it is exp(-delta/(gamma+delta))
    (root of f1'), both strictly above the sought root.
    """
    g, d = p.gamma, p.delta
    th = p.theta
    b = theta_branch(th)
    if b == 0:

        def f(x):
            return (g + d) * (1.0 - x) + g * math.log(x)

        def df(x):
            return -(g + d) + g / x

        top = g / (g + d)
    elif b == 1:

        def f(x):
            return -g * (1.0 - x) - (g + d) * x * math.log(x)

        def df(x):
            return g - (g + d) * (math.log(x) + 1.0)

        top = math.exp(-d / (g + d))
    else:
        c1 = g + d * th
        c2 = (g + d) * th
        c3 = g * (1.0 - th)
        den = th * (1.0 - th)

        def f(x):
            return (c1 * x**th - c2 * x - c3) / den

        def df(x):
            return (c1 * th * x ** (th - 1.0) - c2) / den

        top = ((g + d * th) / (g + d)) ** (1.0 / (1.0 - th))
    return f, df, top


def solve_x_infinity(p: ModelParams) -> LimitResult:
    """Solve for the limiting ignorant fraction by bracketed bisection plus
    a Newton polish.

    The bracket is (lo, interior maximiser) with lo halved from 1e-6 until
    the function is negative there; unimodality makes the left root the
    only zero inside.  Newton steps that would leave the bracket fall back
    to bisection.
    """
    f, df, top = _target(p)
    iters = 0

    lo = min(1e-6, 0.5 * top)
    for _ in range(200):
        if f(lo) < 0.0:
            break
        lo *= 0.5
        iters += 1
    else:
        raise NoBracket(f"no negative left endpoint found for {p}")
    if not f(top) > 0.0:
        raise NoBracket(f"function not positive at its maximiser for {p}")

    a, b = lo, top
    while b - a > _BISECT_WIDTH:
        m = 0.5 * (a + b)
        if f(m) < 0.0:
            a = m
        else:
            b = m
        iters += 1

    x = 0.5 * (a + b)
    for _ in range(40):
        fx = f(x)
        dfx = df(x)
        if abs(fx) <= RESIDUAL_TOL * max(1.0, abs(dfx)):
            break
        step_to = x - fx / dfx if dfx != 0.0 else a
        if not a < step_to < b:
            step_to = 0.5 * (a + b)
        if f(step_to) < 0.0:
            a = step_to
        else:
            b = step_to
        x = step_to
        iters += 1

    return LimitResult(
        x_inf=x,
        u_inf=u_infinity(p.delta, x),
        method="bisection-newton",
        residual=abs(f(x)),
        iterations=iters,
    )


# --------------------------------------------------------------------------
# Lambert W (real branches W0 and W-1) by Halley iteration.
# --------------------------------------------------------------------------


def _branch_series(z: float, sign: float) -> float:
    """Series about the branch point -1/e: w = -1 + p - p^2/3 + 11 p^3/72,
    with p = sign * sqrt(2 (1 + e z))."""
    p2 = 2.0 * (1.0 + math.e * z)
    if p2 < 0.0:  # float rounding just below the branch point
        p2 = 0.0
    p = sign * math.sqrt(p2)
    return -1.0 + p * (1.0 - p * (1.0 / 3.0 - p * (11.0 / 72.0)))


def _halley(z: float, w: float) -> tuple[float, int]:
    for i in range(1, 61):
        ew = math.exp(w)
        fw = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            wp1 = 5e-324  # escape an exact branch-point iterate
        dw = fw / (ew * wp1 - (w + 2.0) * fw / (2.0 * wp1))
        w -= dw
        if abs(dw) <= 2e-16 * (1.0 + abs(w)):
            return w, i
    return w, 60


def _lambert_w0_impl(z: float) -> tuple[float, int]:
    if math.isnan(z) or z < _BRANCH_POINT:
        raise DomainError(f"W0 needs z >= -1/e, got {z!r}")
    if z == 0.0:
        return 0.0, 0
    if z == _BRANCH_POINT:
        return -1.0, 0
    if z < 0.25 * _BRANCH_POINT:
        w = _branch_series(z, 1.0)
        if 2.0 * (1.0 + math.e * z) <= 1e-8:
            return w, 0  # series already at float accuracy
    elif z < math.e:
        w = math.log1p(z)
    else:
        lz = math.log(z)
        w = lz - math.log(lz)
    return _halley(z, w)


def _lambert_wm1_impl(z: float) -> tuple[float, int]:
    if math.isnan(z) or z < _BRANCH_POINT or z >= 0.0:
        raise DomainError(f"W-1 needs -1/e <= z < 0, got {z!r}")
    if z == _BRANCH_POINT:
        return -1.0, 0
    if z < 0.25 * _BRANCH_POINT:
        w = _branch_series(z, -1.0)
        if 2.0 * (1.0 + math.e * z) <= 1e-8:
            return w, 0
    else:
        l1 = math.log(-z)
        w = l1 - math.log(-l1)
    return _halley(z, w)


def lambert_w0(z: float) -> float:
    """Principal real branch (W0 >= -1) of the inverse of w * exp(w)."""
    return _lambert_w0_impl(z)[0]


def lambert_wm1(z: float) -> float:
    """Lower real branch (W-1 <= -1), defined on [-1/e, 0)."""
    return _lambert_wm1_impl(z)[0]


def x_infinity_closed_form(p: ModelParams) -> LimitResult:
    """Closed-form limiting fraction, available at theta in {0, 1/2, 1}.

    With h = 1 + delta/gamma:

        theta = 0    x = -W0(-h exp(-h)) / h
        theta = 1    x = -1 / (h * W-1(-exp(-1/h)/h))
        theta = 1/2  x = (gamma / (gamma + delta))**2

    Raises NotApplicable for any other theta.
    """
    g, d = p.gamma, p.delta
    th = p.theta
    b = theta_branch(th)
    h = 1.0 + d / g
    if b == 0:
        w, iters = _lambert_w0_impl(-h * math.exp(-h))
        x = -w / h
        method = "lambert-w"
    elif b == 1:
        w, iters = _lambert_wm1_impl(-math.exp(-1.0 / h) / h)
        x = -1.0 / (h * w)
        method = "lambert-w"
    elif abs(th - 0.5) <= THETA_EPS:
        x = (g / (g + d)) ** 2
        iters = 0
        method = "closed-half"
    else:
        raise NotApplicable(f"no closed form at theta = {th}")
    return LimitResult(
        x_inf=x,
        u_inf=u_infinity(d, x),
        method=method,
        residual=abs(f_theta_eval(x, p)),
        iterations=iters,
    )


def u_infinity(delta: float, x_inf: float) -> float:
    """Limiting uninterested fraction (1 - delta) * (1 - x_inf)."""
    return (1.0 - delta) * (1.0 - x_inf)
