import math

import pytest

from conftest import random_params, rng_for
from rumour.errors import ConstraintViolation
from rumour.model import (
    PRESETS,
    ModelParams,
    PopulationState,
    preset_params,
    transition_rates,
    validate_params,
)


class TestValidation:
    def test_dk_like_is_valid_with_theta_zero(self):
        p = validate_params(1, 1, 1, 0, 1)
        assert p.theta == 0.0

    def test_hayes_like_is_valid_with_theta_one(self):
        p = validate_params(1, 1, 2, 0, 1)
        assert p.theta == 1.0

    def test_theta_below_range_rejected(self):
        with pytest.raises(ConstraintViolation, match="theta"):
            validate_params(1, 1, 0, 0, 1)  # theta = -1

    @pytest.mark.parametrize(
        "kwargs,pat",
        [
            (dict(lam=0, gamma=1, theta1=1, theta2=0, delta=1), "lambda"),
            (dict(lam=1, gamma=0, theta1=1, theta2=0, delta=1), "gamma"),
            (dict(lam=1, gamma=1, theta1=-0.1, theta2=0.1, delta=1), "theta1"),
            (dict(lam=1, gamma=1, theta1=1.1, theta2=-0.1, delta=1), "theta2"),
            (dict(lam=1, gamma=1, theta1=1, theta2=0, delta=0), "delta"),
            (dict(lam=1, gamma=1, theta1=1, theta2=0, delta=1.5), "delta"),
            (dict(lam=1, gamma=1, theta1=2.5, theta2=0, delta=1), "theta"),
        ],
    )
    def test_each_constraint_named(self, kwargs, pat):
        with pytest.raises(ConstraintViolation, match=pat):
            ModelParams(**kwargs)

    def test_theta_snaps_to_boundary_within_1e12(self):
        p = ModelParams(lam=1, gamma=1, theta1=0.5, theta2=0.5 - 1e-13, delta=1)
        assert p.theta == 0.0
        p = ModelParams(lam=1, gamma=1, theta1=2.0, theta2=1e-13, delta=1)
        assert p.theta == 1.0

    def test_theta_outside_snap_rejected(self):
        with pytest.raises(ConstraintViolation):
            ModelParams(lam=1, gamma=1, theta1=0.5, theta2=0.5 - 1e-9, delta=1)
        with pytest.raises(ConstraintViolation):
            ModelParams(lam=1, gamma=1, theta1=2.0, theta2=1e-9, delta=1)

    def test_theta_recomputed_not_stored(self):
        p = ModelParams(lam=1, gamma=0.7, theta1=0.4, theta2=0.6, delta=0.5)
        assert p.theta == 0.4 + 0.6 - 0.7


class TestPopulationState:
    def test_initial(self):
        s = PopulationState.initial(10)
        assert (s.x, s.u, s.y, s.z) == (10, 0, 1, 0)

    def test_conservation_enforced(self):
        with pytest.raises(ConstraintViolation):
            PopulationState(x=5, u=0, y=1, z=0, n=10)

    def test_negative_and_x_bound(self):
        with pytest.raises(ConstraintViolation):
            PopulationState(x=-1, u=0, y=1, z=11, n=10)
        with pytest.raises(ConstraintViolation):
            PopulationState(x=11, u=0, y=0, z=0, n=10)

    def test_transition_deltas_preserve_conservation(self):
        # the four moves on (x, u, y, z); each re-validates on construction
        deltas = [(-1, 0, 1, 0), (-1, 1, 0, 0), (0, 0, -2, 2), (0, 0, -1, 1)]
        s = PopulationState(x=5, u=1, y=3, z=2, n=10)
        for dx, du, dy, dz in deltas:
            t = PopulationState(x=s.x + dx, u=s.u + du, y=s.y + dy, z=s.z + dz, n=s.n)
            assert t.x + t.u + t.y + t.z == s.n + 1


class TestTransitionRates:
    def test_dk_state_example(self):
        p = preset_params("dk")
        s = PopulationState(x=10, u=0, y=3, z=0, n=12)
        r = transition_rates(s, p)
        assert (r.r0, r.r1, r.r2, r.r3) == (30.0, 0.0, 3.0, 0.0)
        assert r.total == 33.0

    def test_hayes_state_example(self):
        p = preset_params("hayes")
        s = PopulationState(x=5, u=0, y=2, z=1, n=7)
        r = transition_rates(s, p)
        assert (r.r0, r.r1, r.r2, r.r3) == (10.0, 0.0, 2.0, 2.0)

    def test_absorbing_state_all_zero(self):
        rng = rng_for("absorbing")
        for _ in range(20):
            p = random_params(rng)
            s = PopulationState(x=4, u=2, y=0, z=3, n=8)
            r = transition_rates(s, p)
            assert r.total == 0.0

    def test_total_zero_iff_y_zero(self):
        p = preset_params("mt")
        for y in range(1, 4):
            s = PopulationState(x=3, u=0, y=y, z=5 - y, n=7)
            assert transition_rates(s, p).total > 0

    def test_homogeneous_in_lambda(self):
        rng = rng_for("lambda-homogeneity")
        for _ in range(200):
            base = random_params(rng, lam=1.0)
            c = float(rng.uniform(0.1, 10.0))
            scaled = ModelParams(
                lam=c, gamma=base.gamma, theta1=base.theta1,
                theta2=base.theta2, delta=base.delta,
            )
            n = int(rng.integers(2, 40))
            y = int(rng.integers(1, n))
            x = int(rng.integers(0, n + 1 - y))
            u = int(rng.integers(0, n + 2 - x - y))
            s = PopulationState(x=x, u=u, y=y, z=n + 1 - x - u - y, n=n)
            r1 = transition_rates(s, base)
            rc = transition_rates(s, scaled)
            for a, b in zip((r1.r0, r1.r1, r1.r2, r1.r3), (rc.r0, rc.r1, rc.r2, rc.r3)):
                assert math.isclose(c * a, b, rel_tol=1e-12, abs_tol=0.0)
            if r1.total > 0:
                # jump-chain probabilities unchanged
                for a, b in zip((r1.r0, r1.r1, r1.r2, r1.r3), (rc.r0, rc.r1, rc.r2, rc.r3)):
                    assert math.isclose(a / r1.total, b / rc.total, rel_tol=1e-12, abs_tol=1e-15)

    def test_delta_one_never_creates_uninterested(self):
        rng = rng_for("delta-one")
        for _ in range(100):
            p = random_params(rng, delta=1.0)
            n = int(rng.integers(2, 30))
            y = int(rng.integers(1, n))
            x = int(rng.integers(0, n + 1 - y))
            s = PopulationState(x=x, u=0, y=y, z=n + 1 - x - y, n=n)
            assert transition_rates(s, p).r1 == 0.0


class TestPresets:
    def test_apq_dk_basic_is_dk(self):
        assert preset_params("apq_dk", alpha=1, p=1, q=1) == preset_params("dk")
        assert preset_params("apq_dk", alpha=1, p=1, q=1).theta == 0.0

    def test_apq_mt_basic_is_mt(self):
        assert preset_params("apq_mt", alpha=1, p=1, q=1) == preset_params("mt")

    def test_rho_zero_equals_apq_mt_111(self):
        assert preset_params("rho", rho=0) == preset_params("apq_mt", alpha=1, p=1, q=1)

    def test_rho_one_equals_dk(self):
        assert preset_params("rho", rho=1) == preset_params("dk")

    def test_hayes_mapping(self):
        p = preset_params("hayes")
        assert (p.lam, p.gamma, p.theta1, p.theta2, p.delta) == (1, 1, 2, 0, 1)
        assert p.theta == 1.0

    def test_11q_variants_differ_only_in_theta_split(self):
        q = 0.37
        dk = preset_params("apq_dk", alpha=1, p=1, q=q)
        mt = preset_params("apq_mt", alpha=1, p=1, q=q)
        assert (dk.theta1, dk.theta2) == (1.0, 0.0)
        assert (mt.theta1, mt.theta2) == (0.0, 1.0)
        assert dk.theta == mt.theta == 0.0
        assert (dk.lam, dk.gamma, dk.delta) == (mt.lam, mt.gamma, mt.delta)

    def test_apq_dk_general_mapping(self):
        alpha, p_, q = 0.8, 0.7, 0.6
        p = preset_params("apq_dk", alpha=alpha, p=p_, q=q)
        assert p.lam == p_
        assert p.gamma == alpha
        assert p.delta == q
        assert math.isclose(p.theta1, alpha * alpha * (2 - p_))
        assert math.isclose(p.theta2, alpha * (1 - alpha) * (2 - p_))
        assert math.isclose(p.theta, alpha * (1 - p_))

    def test_pearce_mapping(self):
        p = preset_params("pearce", p=0.5, q1=0.2, q2=0.3, r=0.4)
        assert (p.lam, p.delta) == (0.5, 1.0)
        assert math.isclose(p.gamma, 0.8)
        assert math.isclose(p.theta1, 0.6)
        assert math.isclose(p.theta2, 0.2)

    def test_pearce_extreme_rejected(self):
        # maps to theta = (q2 + q1/2 - r) / p = 1.6, out of range
        with pytest.raises(ConstraintViolation):
            preset_params("pearce", p=0.5, q1=0.0, q2=1.0, r=0.2)

    def test_kawachi_mapping(self):
        p = preset_params("kawachi", alpha=0.5, beta=0.5, gamma=0.5, theta=1.0)
        assert (p.lam, p.gamma, p.theta1, p.theta2, p.delta) == (0.5, 1.0, 2.0, 0.0, 1.0)
        assert p.theta == 1.0

    def test_aux_out_of_range(self):
        with pytest.raises(ConstraintViolation, match="rho"):
            preset_params("rho", rho=1.5)
        with pytest.raises(ConstraintViolation, match="alpha"):
            preset_params("apq_dk", alpha=0, p=1, q=1)

    def test_unknown_and_missing(self):
        with pytest.raises(ConstraintViolation, match="unknown preset"):
            preset_params("nope")
        with pytest.raises(ConstraintViolation, match="needs"):
            preset_params("apq_dk", alpha=1)
        with pytest.raises(ConstraintViolation, match="does not take"):
            preset_params("dk", alpha=1)

    def test_registry_names(self):
        assert set(PRESETS) == {
            "dk", "mt", "hayes", "rho", "apq_dk", "apq_mt", "pearce", "kawachi",
        }


class TestSerialization:
    def test_round_trip(self):
        p = ModelParams(lam=0.7, gamma=0.8, theta1=0.832, theta2=0.208, delta=0.6)
        obj = p.to_json_obj()
        assert list(obj) == ["lambda", "gamma", "theta1", "theta2", "delta"]
        assert ModelParams.from_json_obj(obj) == p

    def test_preset_object(self):
        obj = {"preset": "apq_dk", "alpha": 1, "p": 1, "q": 1}
        assert ModelParams.from_json_obj(obj) == preset_params("dk")

    def test_missing_key(self):
        with pytest.raises(ConstraintViolation, match="delta"):
            ModelParams.from_json_obj({"lambda": 1, "gamma": 1, "theta1": 1, "theta2": 0})
