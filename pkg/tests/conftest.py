import numpy as np

from rumour.model import ModelParams


def random_params(rng, theta=None, delta=None, lam=None) -> ModelParams:
    """Random tuple satisfying every admissibility constraint.

    theta1/theta2 are drawn by splitting gamma + theta, so the derived
    theta lands on the requested value up to float noise.
    """
    gamma = float(rng.uniform(0.05, 4.0))
    d = float(rng.uniform(0.05, 1.0)) if delta is None else delta
    th = float(rng.uniform(0.0, 1.0)) if theta is None else theta
    s = float(rng.uniform(0.0, 1.0))
    tot = gamma + th
    return ModelParams(
        lam=float(rng.uniform(0.1, 5.0)) if lam is None else lam,
        gamma=gamma,
        theta1=s * tot,
        theta2=(1.0 - s) * tot,
        delta=d,
    )


def rng_for(name: str) -> np.random.Generator:
    """Per-test fixed-seed generator so sweeps are reproducible."""
    # stable across processes (builtin hash() is salted); FNV-1a
    h = 2166136261
    for b in name.encode():
        h = ((h ^ b) * 16777619) % 2**32
    return np.random.default_rng(h)
