"""Exact stochastic simulation of the rumour chain and its verification.

Simulation is exact (no leaping): every jump is drawn from the embedded
chain, with probabilities proportional to the four transition rates.  Two
modes exist.  Jump-chain mode draws transitions only; exact-time mode
additionally accumulates exponential holding times.  Holding-time draws
live in a separate random stream, so both modes visit identical state
sequences for the same seed.  Selection probabilities are computed from
lambda-free weights (lambda cancels in every ratio), which makes the
final-state law bitwise independent of lambda.

Reproducibility: replications are partitioned into fixed-size chunks
(size depends only on the population parameter), and chunk c draws its
uniforms from counter-based Philox streams keyed by (master_seed, c, 0)
for transition selection and (master_seed, c, 1) for holding times.
Replication r consumes row r - chunk_start of the chunk's pre-drawn
block, at most 2N + 1 draws (each jump decrements X or Y).  Results are
therefore identical for any worker count, and accumulated statistics are
exact integers, so no floating-point reduction order can leak in.

For small populations an exact final-state distribution is available by
propagating probability mass through the jump-chain DAG; Monte Carlo
output is checked against it with a chi-square test.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from rumour.clt import CovMatrix2
from rumour.errors import TooLarge
from rumour.limits import LimitResult
from rumour.model import ModelParams, PopulationState

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn

        return deco


MODES = ("jump-chain", "exact-time")

# Uniform doubles drawn per chunk stay near this budget (~32 MiB).
_CHUNK_DOUBLES = 1 << 22
_MAX_CHUNK = 1024


@njit(cache=True, nogil=True)
def _chunk_kernel(n, delta, gamma, th1, th2, lam, u_sel, u_hold, want_time,
                  out_x, out_u, out_j, out_t):  # pragma: no cover - jitted
    np1 = n + 1
    for r in range(out_x.shape[0]):
        x = n
        u = 0
        y = 1
        jumps = 0
        t = 0.0
        while y > 0:
            fx = float(x)
            fy = float(y)
            w0 = delta * fx * fy
            w1 = (1.0 - delta) * fx * fy
            w2 = th1 * fy * (fy - 1.0) * 0.5
            w3 = th2 * fy * (fy - 1.0) + gamma * fy * float(np1 - x - y)
            wsum = w0 + w1 + w2 + w3
            if want_time:
                t -= math.log1p(-u_hold[r, jumps]) / (lam * wsum)
            v = u_sel[r, jumps] * wsum
            jumps += 1
            if v < w0:
                x -= 1
                y += 1
            elif v < w0 + w1:
                x -= 1
                u += 1
            elif v < w0 + w1 + w2:
                y -= 2
            else:
                y -= 1
        out_x[r] = x
        out_u[r] = u
        out_j[r] = jumps
        out_t[r] = t


@dataclass(frozen=True)
class SimulationOutcome:
    """Terminal state of one replication; absorption_time is None in
    jump-chain mode."""

    final_state: PopulationState
    jump_count: int
    absorption_time: float | None


@dataclass(frozen=True)
class ReplicationBlock:
    """Final states of replications [start, start + len) in index order."""

    start: int
    x: np.ndarray
    u: np.ndarray
    z: np.ndarray
    jumps: np.ndarray
    absorption_time: np.ndarray | None


def _chunk_size(n: int) -> int:
    return max(1, min(_MAX_CHUNK, _CHUNK_DOUBLES // (2 * n + 2)))


def _run_chunk(n, params, master_seed, mode, chunk_index, start, stop) -> ReplicationBlock:
    rows = stop - start
    m = 2 * n + 1
    gen_sel = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=(master_seed, chunk_index, 0)))
    )
    u_sel = gen_sel.random((rows, m))
    want_time = mode == "exact-time"
    if want_time:
        gen_hold = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(entropy=(master_seed, chunk_index, 1)))
        )
        u_hold = gen_hold.random((rows, m))
    else:
        u_hold = np.empty((0, 0))
    out_x = np.empty(rows, np.int64)
    out_u = np.empty(rows, np.int64)
    out_j = np.empty(rows, np.int64)
    out_t = np.empty(rows, np.float64)
    _chunk_kernel(
        n,
        params.delta,
        params.gamma,
        params.theta1,
        params.theta2,
        params.lam,
        u_sel,
        u_hold,
        want_time,
        out_x,
        out_u,
        out_j,
        out_t,
    )
    z = n + 1 - out_x - out_u
    return ReplicationBlock(
        start=start,
        x=out_x,
        u=out_u,
        z=z,
        jumps=out_j,
        absorption_time=out_t if want_time else None,
    )


def iter_final_states(
    n: int,
    reps: int,
    params: ModelParams,
    master_seed: int,
    workers: int = 1,
    mode: str = "jump-chain",
) -> Iterator[ReplicationBlock]:
    """Stream replication results in chunk order (deterministic for any
    worker count)."""
    if n < 1:
        raise ValueError(f"population parameter must be >= 1, got {n}")
    if reps < 0:
        raise ValueError(f"reps must be >= 0, got {reps}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    size = _chunk_size(n)
    nchunks = (reps + size - 1) // size
    jobs = [(c, c * size, min(reps, (c + 1) * size)) for c in range(nchunks)]
    if workers > 1 and nchunks > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            yield from ex.map(
                lambda job: _run_chunk(n, params, master_seed, mode, *job), jobs
            )
    else:
        for job in jobs:
            yield _run_chunk(n, params, master_seed, mode, *job)


def run_one(n: int, params: ModelParams, seed: int, mode: str = "jump-chain") -> SimulationOutcome:
    """Run a single replication.  Equals replication 0 of a Monte Carlo run
    with master_seed = seed."""
    block = next(iter_final_states(n, 1, params, seed, workers=1, mode=mode))
    x = int(block.x[0])
    u = int(block.u[0])
    state = PopulationState(x=x, u=u, y=0, z=n + 1 - x - u, n=n)
    t = float(block.absorption_time[0]) if block.absorption_time is not None else None
    return SimulationOutcome(final_state=state, jump_count=int(block.jumps[0]), absorption_time=t)


@dataclass
class McStats:
    """Mergeable sufficient statistics over replications.

    Accumulators are exact integers over final *counts*; the fraction-scale
    sums the estimators need are exposed as properties (sum_x = S_X / n and
    so on).  Integer accumulation makes merging associative, commutative
    and bitwise reproducible.
    """

    reps: int
    n: int
    master_seed: int
    sx: int = 0
    su: int = 0
    sxx: int = 0
    sxu: int = 0
    suu: int = 0

    @classmethod
    def empty(cls, n: int, master_seed: int) -> "McStats":
        return cls(reps=0, n=n, master_seed=master_seed)

    @property
    def sum_x(self) -> float:
        return self.sx / self.n

    @property
    def sum_u(self) -> float:
        return self.su / self.n

    @property
    def sum_xx(self) -> float:
        return self.sxx / self.n**2

    @property
    def sum_xu(self) -> float:
        return self.sxu / self.n**2

    @property
    def sum_uu(self) -> float:
        return self.suu / self.n**2

    def add_block(self, block: ReplicationBlock) -> None:
        x, u = block.x, block.u
        self.reps += len(x)
        self.sx += int(x.sum())
        self.su += int(u.sum())
        self.sxx += int(np.dot(x, x))
        self.sxu += int(np.dot(x, u))
        self.suu += int(np.dot(u, u))

    def merge(self, other: "McStats") -> "McStats":
        if self.n != other.n:
            raise ValueError(f"cannot merge stats with n = {self.n} and n = {other.n}")
        if self.master_seed != other.master_seed:
            raise ValueError("cannot merge stats from different master seeds")
        return McStats(
            reps=self.reps + other.reps,
            n=self.n,
            master_seed=self.master_seed,
            sx=self.sx + other.sx,
            su=self.su + other.su,
            sxx=self.sxx + other.sxx,
            sxu=self.sxu + other.sxu,
            suu=self.suu + other.suu,
        )

    def mean_x(self) -> float:
        return self.sx / (self.reps * self.n)

    def mean_u(self) -> float:
        return self.su / (self.reps * self.n)

    def cov_sqrt_n(self) -> CovMatrix2:
        """Sample covariance of sqrt(N) * (X/N, U/N) over replications.

        Computed from the integer accumulators, so the only rounding is the
        final division.  Needs reps >= 2.
        """
        r = self.reps
        if r < 2:
            raise ValueError("covariance needs at least two replications")
        den = r * self.n * (r - 1)
        return CovMatrix2(
            s11=(r * self.sxx - self.sx * self.sx) / den,
            s12=(r * self.sxu - self.sx * self.su) / den,
            s22=(r * self.suu - self.su * self.su) / den,
        )

    def to_json_obj(self) -> dict:
        return {
            "reps": self.reps,
            "n": self.n,
            "master_seed": self.master_seed,
            "sum_x": self.sum_x,
            "sum_u": self.sum_u,
            "sum_xx": self.sum_xx,
            "sum_xu": self.sum_xu,
            "sum_uu": self.sum_uu,
        }


def monte_carlo(
    n: int,
    reps: int,
    params: ModelParams,
    master_seed: int,
    workers: int = 1,
    mode: str = "jump-chain",
) -> McStats:
    """Run reps independent replications and fold them into McStats.

    (master_seed, n, params, reps) fully determine the result; workers only
    change wall-clock time.
    """
    stats = McStats.empty(n, master_seed)
    for block in iter_final_states(n, reps, params, master_seed, workers, mode):
        stats.add_block(block)
    return stats


def final_state_counts(
    n: int,
    reps: int,
    params: ModelParams,
    master_seed: int,
    workers: int = 1,
    mode: str = "jump-chain",
) -> dict[tuple[int, int], int]:
    """Histogram of final (X, U) over replications."""
    counts: dict[tuple[int, int], int] = {}
    stride = n + 2
    for block in iter_final_states(n, reps, params, master_seed, workers, mode):
        keys, cnt = np.unique(block.x * stride + block.u, return_counts=True)
        for k, c in zip(keys.tolist(), cnt.tolist()):
            xu = (k // stride, k % stride)
            counts[xu] = counts.get(xu, 0) + c
    return counts


def write_replications_csv(fh, blocks: Iterable[ReplicationBlock]) -> None:
    """Stream per-replication final states to CSV (rep order).  The
    absorption_time column is empty in jump-chain mode."""
    w = csv.writer(fh)
    w.writerow(["rep", "x_final", "u_final", "z_final", "absorption_time"])
    for b in blocks:
        times = b.absorption_time
        for i in range(len(b.x)):
            w.writerow(
                [
                    b.start + i,
                    int(b.x[i]),
                    int(b.u[i]),
                    int(b.z[i]),
                    repr(float(times[i])) if times is not None else "",
                ]
            )


# --------------------------------------------------------------------------
# Exact final-state distribution for small populations.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactDistribution:
    """Joint law of (X_final, U_final); probs[x, u] for 0 <= x <= n,
    0 <= u <= n + 1."""

    n: int
    probs: np.ndarray

    def support(self) -> Iterator[tuple[tuple[int, int], float]]:
        xs, us = np.nonzero(self.probs)
        for x, u in zip(xs.tolist(), us.tolist()):
            yield (x, u), float(self.probs[x, u])

    def total_mass(self) -> float:
        return float(self.probs.sum())

    def mean_x(self) -> float:
        return float(self.probs.sum(axis=1) @ np.arange(self.n + 1)) / self.n

    def mean_u(self) -> float:
        return float(self.probs.sum(axis=0) @ np.arange(self.probs.shape[1])) / self.n


def exact_final_distribution(n: int, params: ModelParams, n_max: int = 60) -> ExactDistribution:
    """Propagate probability mass through the jump-chain DAG.

    States (X, U, Y) are processed in decreasing (X, then Y) order, which
    is topological: every transition lowers X or keeps X and lowers Y.
    Mass reaching Y = 0 stays there.  The computation never touches
    lambda, so the result is bitwise lambda-invariant.  Memory and time
    are O(n^3); n_max guards against accidental huge inputs.
    """
    if n < 1:
        raise ValueError(f"population parameter must be >= 1, got {n}")
    if n > n_max:
        raise TooLarge(f"exact distribution wants n <= {n_max}, got {n}")
    d, g = params.delta, params.gamma
    th1, th2 = params.theta1, params.theta2
    np1 = n + 1
    # mass[x, y, u]; u ranges over 0..n+1 (u <= n in fact, slack is cheap)
    mass = np.zeros((n + 1, n + 2, n + 2))
    mass[n, 1, 0] = 1.0
    for x in range(n, -1, -1):
        for y in range(np1 - x, 0, -1):
            v = mass[x, y]
            if not v.any():
                continue
            w0 = d * x * y
            w1 = (1.0 - d) * x * y
            w2 = th1 * y * (y - 1) / 2.0
            w3 = th2 * y * (y - 1) + g * y * (np1 - x - y)
            w = w0 + w1 + w2 + w3
            if w0 > 0.0:
                mass[x - 1, y + 1] += (w0 / w) * v
            if w1 > 0.0:
                mass[x - 1, y, 1:] += (w1 / w) * v[:-1]
            if w2 > 0.0:
                mass[x, y - 2] += (w2 / w) * v
            if w3 > 0.0:
                mass[x, y - 1] += (w3 / w) * v
    return ExactDistribution(n=n, probs=mass[:, 0, :].copy())


@dataclass(frozen=True)
class GofResult:
    chi2: float
    dof: int
    pvalue: float
    cells: int  # cells kept individually (expected count >= threshold)


def goodness_of_fit(
    counts: Mapping[tuple[int, int], int],
    dist: ExactDistribution,
    min_expected: float = 5.0,
) -> GofResult:
    """Pearson chi-square of observed final-state counts against the exact
    law, pooling cells whose expected count falls below min_expected."""
    total = sum(counts.values())
    support = list(dist.support())
    support_keys = {k for k, _ in support}
    stray = sum(c for k, c in counts.items() if k not in support_keys)
    if stray:
        # observed mass on an impossible state: reject outright
        return GofResult(chi2=math.inf, dof=max(1, len(support) - 1), pvalue=0.0, cells=len(support))

    chi2 = 0.0
    kept = 0
    pooled_exp = 0.0
    pooled_obs = 0
    for key, prob in support:
        exp = prob * total
        obs = counts.get(key, 0)
        if exp >= min_expected:
            chi2 += (obs - exp) ** 2 / exp
            kept += 1
        else:
            pooled_exp += exp
            pooled_obs += obs
    ncells = kept
    if pooled_exp > 0.0 or pooled_obs > 0:
        chi2 += (pooled_obs - pooled_exp) ** 2 / max(pooled_exp, 1e-300)
        ncells += 1
    dof = ncells - 1
    if dof < 1:
        return GofResult(chi2=chi2, dof=0, pvalue=1.0, cells=kept)
    return GofResult(chi2=chi2, dof=dof, pvalue=float(_chi2_dist.sf(chi2, dof)), cells=kept)


# --------------------------------------------------------------------------
# Theory-versus-simulation verification.
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyConfig:
    """Acceptance bands: means at mean_z_max standard errors; covariance
    entries at max(cov_rel_tol relative, cov_z_max Wishart standard
    errors)."""

    mean_z_max: float = 4.0
    cov_rel_tol: float = 0.05
    cov_z_max: float = 4.0


@dataclass(frozen=True)
class EntryCheck:
    name: str
    emp: float
    theory: float
    abs_err: float
    allowed: float
    ok: bool

    def to_json_obj(self) -> dict:
        rel = self.abs_err / abs(self.theory) if self.theory != 0.0 else (
            0.0 if self.abs_err == 0.0 else math.inf
        )
        return {
            "emp": self.emp,
            "theory": self.theory,
            "abs_err": self.abs_err,
            "rel_err": rel,
            "allowed": self.allowed,
            "ok": self.ok,
        }


@dataclass(frozen=True)
class VerificationReport:
    n: int
    reps: int
    x_inf: float
    u_inf: float
    mean_x: float
    mean_u: float
    x_mean_z: float
    u_mean_z: float
    sigma_emp: CovMatrix2
    sigma_theory: CovMatrix2
    checks: tuple[EntryCheck, ...]
    passed: bool

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "reps": self.reps,
            "x_inf": self.x_inf,
            "u_inf": self.u_inf,
            "mean_x": self.mean_x,
            "mean_u": self.mean_u,
            "x_mean_z": self.x_mean_z,
            "u_mean_z": self.u_mean_z,
            "sigma_emp": self.sigma_emp.to_json_obj(),
            "sigma_theory": self.sigma_theory.to_json_obj(),
            "checks": {c.name: c.to_json_obj() for c in self.checks},
            "pass": self.passed,
        }


def _mean_z(dev: float, var_theory: float, n: int, reps: int) -> float:
    se = math.sqrt(var_theory / (n * reps)) if var_theory > 0.0 else 0.0
    if se == 0.0:
        return 0.0 if dev == 0.0 else math.inf
    return dev / se


def verify(
    stats: McStats,
    lim: LimitResult,
    sigma: CovMatrix2,
    config: VerifyConfig | None = None,
) -> VerificationReport:
    """Standardise the empirical means against (x_inf, u_inf) and compare
    the empirical covariance of the sqrt(N)-fluctuations entry-wise with
    the theoretical Sigma."""
    cfg = config or VerifyConfig()
    if stats.reps < 2:
        raise ValueError("verification needs at least two replications")
    emp = stats.cov_sqrt_n()
    mean_x = stats.mean_x()
    mean_u = stats.mean_u()
    xz = _mean_z(mean_x - lim.x_inf, sigma.s11, stats.n, stats.reps)
    uz = _mean_z(mean_u - lim.u_inf, sigma.s22, stats.n, stats.reps)

    r = stats.reps
    checks = []
    for name, e, t, vii, vjj in (
        ("s11", emp.s11, sigma.s11, sigma.s11, sigma.s11),
        ("s12", emp.s12, sigma.s12, sigma.s11, sigma.s22),
        ("s22", emp.s22, sigma.s22, sigma.s22, sigma.s22),
    ):
        wishart_se = math.sqrt((vii * vjj + t * t) / (r - 1))
        allowed = max(cfg.cov_rel_tol * abs(t), cfg.cov_z_max * wishart_se)
        err = abs(e - t)
        checks.append(
            EntryCheck(name=name, emp=e, theory=t, abs_err=err, allowed=allowed, ok=err <= allowed)
        )

    passed = (
        abs(xz) <= cfg.mean_z_max
        and abs(uz) <= cfg.mean_z_max
        and all(c.ok for c in checks)
    )
    return VerificationReport(
        n=stats.n,
        reps=stats.reps,
        x_inf=lim.x_inf,
        u_inf=lim.u_inf,
        mean_x=mean_x,
        mean_u=mean_u,
        x_mean_z=xz,
        u_mean_z=uz,
        sigma_emp=emp,
        sigma_theory=sigma,
        checks=tuple(checks),
        passed=passed,
    )
