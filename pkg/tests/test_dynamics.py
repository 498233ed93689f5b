import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swarmsim.dynamics import (
    StepContext, limit_speed, pso_velocity, repulsion_velocity, select_nbest, step, step_reference,
    update_repulsion_strength,
)
from swarmsim.model import init_swarm
from swarmsim.rng import RngStream
from swarmsim.target import objectives
from swarmsim.topology import knn

from conftest import make_swarm, make_target, small_config

REL = 1e-12


def ctx_for(positions, k, target=None, f=None):
    pos = np.asarray(positions, dtype=float)
    target = target or make_target(position=(1000.0, 1000.0))
    f = objectives(pos, target) if f is None else np.asarray(f)
    return StepContext(pos, np.zeros_like(pos), f, knn(pos, k, relaxed=True), target)


# --- N_best -----------------------------------------------------------------

def test_nbest_on_target_is_self():
    ctx = ctx_for([(0, 0), (1, 0), (5, 0)], 2, f=[-1, -1, 0])
    assert np.array_equal(select_nbest(0, ctx), [0, 0])


def test_nbest_nearest_on_target_neighbour():
    # agent 0's neighbours by rank: 1 (dist 1), 2 (dist 2); both on target
    ctx = ctx_for([(0, 0), (1, 0), (2, 0), (9, 0)], 3, f=[0, -1, -1, 0])
    assert np.array_equal(select_nbest(0, ctx), [1, 0])
    ctx = ctx_for([(0, 0), (1, 0), (2, 0), (9, 0)], 3, f=[0, 0, -1, 0])
    assert np.array_equal(select_nbest(0, ctx), [2, 0])


def test_nbest_falls_back_to_self():
    ctx = ctx_for([(0, 0), (1, 0), (2, 0)], 2, f=[0, 0, 0])
    for i in range(3):
        assert np.array_equal(select_nbest(i, ctx), ctx.positions[i])


# --- PSO velocity -------------------------------------------------------------

def test_pso_example():
    np.testing.assert_allclose(pso_velocity((1, 0), (0, 0), (2, 2), 1.0, 0.5, 0.5), [1.5, 0.5], rtol=REL)


def test_pso_zero_social_term():
    np.testing.assert_array_equal(pso_velocity((0.3, -2), (4, 4), (4, 4), 1.0, 0.5, 0.9), [0.3, -2])
    np.testing.assert_array_equal(pso_velocity((0.3, -2), (4, 4), (4, 4), 0.0, 0.5, 0.9), [0, 0])


# --- repulsion ---------------------------------------------------------------

def test_repulsion_unit_at_gain_times_strength():
    gain, a_R = 5.0, 1.5
    ctx = ctx_for([(10.0, 10.0), (10.0 + gain * a_R, 10.0)], 1)
    np.testing.assert_allclose(repulsion_velocity(0, ctx, a_R, 6, gain), [-1.0, 0.0], rtol=REL)


def test_repulsion_symmetric_cancels():
    ctx = ctx_for([(0, 0), (2, 0), (-2, 0)], 2)
    np.testing.assert_allclose(repulsion_velocity(0, ctx, 1.5, 6, 1.0), [0.0, 0.0], atol=1e-15)


def test_repulsion_hand_value():
    # gain*a_R = 1.5 at distance 3 with d = 6: (0.5)^6
    ctx = ctx_for([(0, 0), (0, 3)], 1)
    v = repulsion_velocity(0, ctx, 1.5, 6, 1.0)
    assert np.hypot(*v) == pytest.approx(0.015625, rel=REL)
    assert v[1] < 0 and v[0] == 0


def test_repulsion_points_away():
    rng = np.random.default_rng(0)
    for _ in range(50):
        pos = rng.random((2, 2)) * 10
        ctx = ctx_for(pos, 1)
        v = repulsion_velocity(0, ctx, 1.0, 6, 1.0)
        assert np.dot(v, pos[1] - pos[0]) < 0


def test_coincident_neighbours_pushed_apart():
    # the third agent is far enough away that its push is below 1e-11
    pos = np.array([[5.0, 5.0], [5.0, 5.0], [100.0, 100.0]])
    swarm = make_swarm(pos, v_max=1.0)
    cfg = small_config(N=3, n_fast=0, k=2, c=0.0, repulsion_gain=1.0)
    out = step(swarm, make_target(position=(90.0, 90.0)), cfg, RngStream(0))
    v = out.swarm.velocities
    assert np.all(np.isfinite(v))
    # equal and opposite keyed pushes, saturating the speed cap
    np.testing.assert_allclose(v[0], -v[1], atol=1e-10)
    assert np.hypot(*v[0]) == pytest.approx(1.0)
    ref = step_reference(swarm, make_target(position=(90.0, 90.0)), cfg, RngStream(0))
    np.testing.assert_allclose(ref.swarm.velocities, v, rtol=REL, atol=1e-15)


# --- a_R update and speed limit ---------------------------------------------------

def test_repulsion_strength_examples():
    b = (0.375, 1.5)
    assert update_repulsion_strength(1.0, True, 0.01, b) == pytest.approx(0.99, rel=REL)
    assert update_repulsion_strength(0.375, True, 0.01, b) == 0.375
    assert update_repulsion_strength(1.5, False, 0.01, b) == 1.5
    assert update_repulsion_strength(1.0, False, 0.01, b) == pytest.approx(1.01, rel=REL)
    assert update_repulsion_strength(0.38, True, 0.01, b) == 0.375


def test_limit_speed_examples():
    np.testing.assert_array_equal(limit_speed((3, 4), 10), [3, 4])
    np.testing.assert_allclose(limit_speed((3, 4), 1), [0.6, 0.8], rtol=REL)
    np.testing.assert_array_equal(limit_speed((0, 0), 1), [0, 0])


# --- whole step ---------------------------------------------------------------

def test_locked_equilibrium_is_stationary():
    # middle agent is balanced by its two neighbours; the outer pair is pressed
    # into the walls, which absorb the normal component
    L = 100.0
    pos = [(0.0, 50.0), (50.0, 50.0), (L, 50.0)]
    swarm = make_swarm(pos, a_R=1.5)
    cfg = small_config(N=3, n_fast=0, k=2, L=L)
    target = make_target(position=(50.0, 10.0), radius=5.0)
    for _ in range(5):
        out = step(swarm, target, cfg, RngStream(0))
        assert not out.detected
        assert np.array_equal(out.swarm.positions, swarm.positions)
        assert np.all(out.swarm.velocities == 0)
        assert np.all(out.swarm.a_R == cfg.a_R_max)
        swarm = out.swarm


def test_fast_agent_saturates_at_cap():
    # agent 0 sees its on-target neighbour 80 units away
    pos = [(10.0, 10.0), (90.0, 10.0), (90.0, 90.0)]
    swarm = make_swarm(pos, v_max=[2.6, 1.0, 1.0])
    cfg = small_config(N=3, n_fast=1, k=2)
    rng = RngStream(0)
    r0 = rng.keyed_units(0, 3)[0]
    assert cfg.c * r0 * 80.0 > 2.6 + 1.0  # precondition: well past the cap
    out = step(swarm, make_target(position=(90.0, 10.0), radius=5.0), cfg, rng)
    moved = out.swarm.positions[0] - swarm.positions[0]
    assert np.hypot(*moved) == pytest.approx(2.6, rel=REL)


def test_no_detection_means_no_social_term():
    cfg = small_config(N=10, n_fast=3, k=4)
    swarm, _ = init_swarm(cfg, RngStream(1))
    swarm = make_swarm(swarm.positions, velocities=np.random.default_rng(0).normal(size=(10, 2)) * 0.3,
                       v_max=swarm.v_max)
    target = make_target(position=(-500.0, -500.0))
    out = step(swarm, target, cfg, RngStream(1))
    ctx = StepContext(swarm.positions, swarm.velocities, out.f, knn(swarm.positions, cfg.k), target)
    for i in range(10):
        expect = limit_speed(cfg.omega * swarm.velocities[i]
                             + repulsion_velocity(i, ctx, swarm.a_R[i], cfg.d, cfg.repulsion_gain), swarm.v_max[i])
        x = np.clip(swarm.positions[i] + expect, 0, cfg.L)
        np.testing.assert_allclose(out.swarm.positions[i], x, rtol=REL, atol=1e-12)


def run_both(cfg, steps, order_seed=None):
    rng_a, rng_b = RngStream(cfg.seed), RngStream(cfg.seed)
    sa, ta = init_swarm(cfg, rng_a)
    sb, tb = init_swarm(cfg, rng_b)
    perm = np.random.default_rng(order_seed)
    for _ in range(steps):
        oa = step(sa, ta, cfg, rng_a)
        order = perm.permutation(cfg.N) if order_seed is not None else None
        ob = step_reference(sb, tb, cfg, rng_b, order=order)
        yield oa, ob
        sa, ta = oa.swarm, oa.target
        # feed the compiled state to both so rounding differences cannot compound
        sb, tb = oa.swarm, oa.target


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_compiled_step_matches_reference(seed):
    cfg = small_config(N=20, n_fast=7, k=6, seed=seed, target_radius=30.0)
    for oa, ob in run_both(cfg, 60, order_seed=seed):
        np.testing.assert_array_equal(oa.f, ob.f)
        np.testing.assert_allclose(ob.swarm.positions, oa.swarm.positions, rtol=REL, atol=1e-12)
        np.testing.assert_allclose(ob.swarm.velocities, oa.swarm.velocities, rtol=1e-10, atol=1e-12)
        np.testing.assert_array_equal(ob.swarm.a_R, oa.swarm.a_R)
        np.testing.assert_array_equal(ob.target.position, oa.target.position)


def test_processing_order_irrelevant():
    cfg = small_config(N=15, n_fast=5, k=5, target_radius=25.0)
    swarm, target = init_swarm(cfg, RngStream(4))
    base = step_reference(swarm, target, cfg, RngStream(4))
    for seed in range(3):
        order = np.random.default_rng(seed).permutation(cfg.N)
        out = step_reference(swarm, target, cfg, RngStream(4), order=order)
        np.testing.assert_array_equal(out.swarm.positions, base.swarm.positions)
        np.testing.assert_array_equal(out.swarm.a_R, base.swarm.a_R)


def test_divide_mode_scales_velocity():
    cfg = small_config(N=3, n_fast=0, k=2, speed_limit="divide", c=0.0, repulsion_gain=0.0)
    swarm = make_swarm([(10, 10), (50, 50), (80, 20)], velocities=[(4, 0), (0, 2), (1, 1)], v_max=2.0)
    out = step(swarm, make_target(position=(-99, -99)), cfg, RngStream(0))
    np.testing.assert_allclose(out.swarm.velocities, [(2, 0), (0, 1), (0.5, 0.5)], rtol=REL)


def test_degenerate_pure_inertia():
    cfg = small_config(N=6, n_fast=2, k=3, c=0.0, repulsion_gain=0.0, L=1e6)
    vel = np.random.default_rng(2).uniform(-3, 3, (6, 2))
    v_max = np.array([2.6, 2.6, 1, 1, 1, 1.0])
    swarm = make_swarm(np.full((6, 2), 5e5) + np.arange(12).reshape(6, 2), velocities=vel, v_max=v_max)
    capped = np.array([limit_speed(v, m) for v, m in zip(vel, v_max)])
    target = make_target(position=(0.0, 0.0))
    rng = RngStream(0)
    x = swarm.positions.copy()
    for _ in range(20):
        out = step(swarm, target, cfg, rng)
        x = x + capped
        np.testing.assert_allclose(out.swarm.velocities, capped, rtol=REL)
        np.testing.assert_allclose(out.swarm.positions, x, rtol=REL)
        swarm, target = out.swarm, out.target


@given(seed=st.integers(0, 2**32), n=st.integers(3, 30), gain=st.floats(0.0, 20.0),
       omega=st.floats(0.0, 1.2), c=st.floats(0.0, 2.0))
def test_step_invariants(seed, n, gain, omega, c):
    cfg = small_config(N=n, n_fast=n // 3, k=max(2, n // 3), seed=seed, repulsion_gain=gain, omega=omega, c=c)
    rng = RngStream(seed)
    swarm, target = init_swarm(cfg, rng)
    for _ in range(40):
        out = step(swarm, target, cfg, rng)
        s = out.swarm
        assert np.all(np.hypot(s.velocities[:, 0], s.velocities[:, 1]) <= s.v_max * (1 + 1e-12))
        assert np.all((s.a_R >= cfg.a_R_min) & (s.a_R <= cfg.a_R_max))
        assert np.all((s.positions >= 0) & (s.positions <= cfg.L))
        swarm, target = s, out.target
