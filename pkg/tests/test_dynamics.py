import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_game, random_potential_game
from nearplay.dynamics import (
    DfpState,
    InvariantChecker,
    RunConfig,
    best_response,
    consensus_update,
    initial_state,
    run,
    step_dfp,
    step_fp,
    update_frequency,
)
from nearplay.game import Game, coordination_game, coordination_potential, psi
from nearplay.network import WeightRule, complete, periodic, ring, star


def dominant_game(n=3, k=3, best=2):
    return Game.from_function(n, k, lambda i, a: float(a[i] == best) + 0.01 * sum(a))


# --- best response ----------------------------------------------------------

def test_best_response_matches_certain_opponent():
    assert best_response(coordination_game(), 0, [np.array([1.0, 0.0])]) == 0
    assert best_response(coordination_game(), 1, [np.array([0.0, 1.0])]) == 1


def test_best_response_ignores_beliefs_without_interaction():
    g = Game.from_function(2, 3, lambda i, a: [0.2, 0.9, 0.4][a[i]])
    for belief in np.eye(3):
        assert best_response(g, 0, [belief]) == 1


def test_best_response_tie_lowest_index():
    assert best_response(coordination_game(), 0, [np.array([0.5, 0.5])]) == 0


def test_best_response_random_tie_is_seeded():
    g = coordination_game(2, 3)
    belief = [np.full(3, 1 / 3)]
    a = [best_response(g, 0, belief, "random", np.random.default_rng(5)) for _ in range(10)]
    b = [best_response(g, 0, belief, "random", np.random.default_rng(5)) for _ in range(10)]
    assert a == b
    draws = {best_response(g, 0, belief, "random", np.random.default_rng(s)) for s in range(30)}
    assert draws == {0, 1, 2}


def test_best_response_attains_mixed_supremum(rng):
    g = random_game(rng, 3, 3)
    beliefs = list(rng.dirichlet(np.ones(3), size=2))
    a = best_response(g, 1, beliefs)
    prof = np.array([beliefs[0], np.eye(3)[a], beliefs[1]])
    assert psi(g, prof) <= 1e-12
    gain = max(0.0, -psi(g, prof))
    # agent 1 has no profitable deviation
    from nearplay.game import deviation_payoffs

    v = deviation_payoffs(g, 1, prof)
    assert v[a] == pytest.approx(v.max())
    assert gain >= 0


# --- frequency update -------------------------------------------------------

def test_update_frequency_first_step():
    assert update_frequency([0.2, 0.3, 0.5], 2, 1).tolist() == [0, 0, 1]


def test_update_frequency_two_samples():
    assert update_frequency([1.0, 0.0], 1, 2).tolist() == [0.5, 0.5]


def test_update_frequency_four_samples():
    # actions so far {0, 1, 1} then 0: average of 4 vertices
    out = update_frequency([1 / 3, 2 / 3, 0.0], 0, 4)
    assert out == pytest.approx([0.5, 0.5, 0.0], abs=1e-15)


def test_update_frequency_rejects_t0():
    with pytest.raises(ValueError):
        update_frequency([1.0, 0.0], 0, 0)


# --- consensus --------------------------------------------------------------

def _copies(rng, n, k):
    c = rng.dirichlet(np.ones(k), size=(n, n))
    f = c[np.arange(n), np.arange(n)].copy()
    return c, f


def test_consensus_identity_weights(rng):
    c, f = _copies(rng, 4, 3)
    out = consensus_update(c, f, complete(4), WeightRule(1.0), 1)
    assert np.array_equal(out, c)


def test_consensus_fixed_point(rng):
    n, k = 4, 3
    common = rng.dirichlet(np.ones(k), size=n)
    c = np.broadcast_to(common, (n, n, k)).copy()
    out = consensus_update(c, common, ring(n), WeightRule(0.6), 3)
    assert np.allclose(out, c, atol=1e-15)


def test_consensus_star_leaf_hand_check(rng):
    c, f = _copies(rng, 3, 2)
    out = consensus_update(c, f, star(3), WeightRule(0.75), 1)
    assert out[1, 2] == pytest.approx(0.75 * c[1, 2] + 0.25 * c[0, 2])
    # center averages itself with both leaves
    assert out[0, 2] == pytest.approx(0.75 * c[0, 2] + 0.125 * c[1, 2] + 0.125 * c[2, 2])
    assert np.array_equal(out[np.arange(3), np.arange(3)], f)


# --- stepping ----------------------------------------------------------------

def test_step_dfp_two_agents_by_hand():
    cfg = RunConfig(coordination_game(), complete(2), t_final=3, init=(0, 1))
    s0 = initial_state(cfg, np.random.default_rng(0))
    s1 = step_dfp(s0, cfg)
    assert s1.last_actions == (0, 1)
    assert s1.freqs.tolist() == [[1, 0], [0, 1]]
    s2 = step_dfp(s1, cfg)
    # at step 2's exchange each agent's copy of the other is still the other's first vertex,
    # so each agent matches the other's first action
    assert s2.last_actions == (1, 0)
    assert s2.copies[0, 1].tolist() == [0, 1] and s2.copies[1, 0].tolist() == [1, 0]
    assert s2.freqs.tolist() == [[0.5, 0.5], [0.5, 0.5]]


@pytest.mark.parametrize("step", [step_dfp, step_fp])
def test_dominant_action_every_step(step):
    g = dominant_game()
    cfg = RunConfig(g, ring(3), t_final=10, init="uniform-prior")
    state = initial_state(cfg, np.random.default_rng(0))
    for _ in range(10):
        state = step(state, cfg)
        assert state.last_actions == (2, 2, 2)
        assert state.freqs.tolist() == [[0, 0, 1]] * 3


def test_dominant_game_fp_equals_dfp():
    g = dominant_game()
    a = run(RunConfig(g, ring(3), t_final=15, init=(0, 1, 0), engine="dfp"))
    b = run(RunConfig(g, ring(3), t_final=15, init=(0, 1, 0), engine="fp"))
    assert [r.actions for r in a] == [r.actions for r in b]


def test_step_beyond_t_final():
    cfg = RunConfig(coordination_game(), t_final=1, init=(0, 0))
    s = step_dfp(initial_state(cfg, np.random.default_rng(0)), cfg)
    with pytest.raises(ValueError):
        step_dfp(s, cfg)


def test_fp_coordination_converges_from_mixed_start():
    cfg = RunConfig(coordination_game(), t_final=400, init=(0, 1), engine="fp")
    trace = run(cfg)
    assert trace[-1].actions[0] == trace[-1].actions[1]
    assert trace[-1].psi >= -0.01


def test_dfp_complete_graph_tracks_fp():
    # with little self weight the copies are nearly the true frequencies
    g = coordination_game(3, 2)
    trace = run(RunConfig(g, complete(3), WeightRule(0.05), t_final=300, init=(0, 1, 1)))
    assert trace[-1].estimation_error < 0.01


# --- run ---------------------------------------------------------------------

def test_single_step_run():
    trace = run(RunConfig(coordination_game(3, 3), ring(3), t_final=1, init=(2, 0, 1)))
    assert len(trace) == 1
    assert trace[0].freqs.tolist() == np.eye(3)[[2, 0, 1]].tolist()


@pytest.mark.parametrize("tie", ["lowest-index", "random"])
def test_run_deterministic(tie):
    g = coordination_game(4, 3)
    cfg = RunConfig(g, ring(4), t_final=60, seed=99, tie_break=tie)
    a, b = run(cfg), run(cfg)
    assert [r.actions for r in a] == [r.actions for r in b]
    assert all(np.array_equal(x.copies, y.copies) for x, y in zip(a, b))


def test_stride_limits_psi():
    trace = run(RunConfig(coordination_game(), t_final=10, stride=4, init=(0, 1)))
    assert [r.t for r in trace if r.psi is not None] == [4, 8, 10]


def test_observer_failure_has_context():
    def broken(state, rec):
        if state.t == 3:
            raise KeyError("boom")

    with pytest.raises(RuntimeError, match="t=3"):
        run(RunConfig(coordination_game(), t_final=5, init=(0, 1)), [broken])


def test_pre_timing_uses_stale_copies():
    g = coordination_game(3, 2)
    post = run(RunConfig(g, ring(3), t_final=30, init=(0, 1, 1)))
    pre = run(RunConfig(g, ring(3), t_final=30, init=(0, 1, 1), belief_timing="pre"))
    for trace in (post, pre):
        assert all(np.array_equal(r.copies[np.arange(3), np.arange(3)], r.freqs) for r in trace)
    assert pre[-1].freqs.sum() == pytest.approx(3.0)


def test_invalid_config():
    g = coordination_game()
    with pytest.raises(ValueError):
        RunConfig(g, t_final=0)
    with pytest.raises(ValueError):
        RunConfig(g, ring(3))
    with pytest.raises(ValueError):
        RunConfig(g, init=(0, 5))
    with pytest.raises(ValueError):
        RunConfig(g, engine="smooth")


# --- properties over random runs ---------------------------------------------

@settings(max_examples=25, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from([(2, 2), (3, 2), (3, 3), (4, 2)]),
    st.sampled_from(["ring", "star", "alternating"]),
    st.sampled_from(["dfp", "fp"]),
    st.sampled_from(["post", "pre"]),
    st.floats(0.1, 1.0),
)
def test_invariants_hold_on_random_runs(seed, nk, net, engine, timing, sw):
    rng = np.random.default_rng(seed)
    n, k = nk
    g = random_game(rng, n, k)
    sched = {"ring": ring(n), "star": star(n), "alternating": periodic(n, [[], list(ring(n).steps[0])])}[net]
    cfg = RunConfig(g, sched, WeightRule(sw), t_final=40, seed=seed, engine=engine, belief_timing=timing)
    checker = InvariantChecker(cfg)
    run(cfg, [checker])
    assert checker.steps == 40


def test_running_average_identity_from_trace(rng):
    g = random_game(rng, 3, 3)
    trace = run(RunConfig(g, ring(3), t_final=80, seed=4))
    counts = np.zeros((3, 3))
    for rec in trace:
        counts[np.arange(3), list(rec.actions)] += 1
        assert np.max(np.abs(counts / rec.t - rec.freqs)) <= 1e-9


def test_estimation_error_rate_bounded():
    g = coordination_game(5, 2)
    trace = run(RunConfig(g, ring(5), t_final=1000, init=(0, 1, 0, 1, 1), stride=1000))
    scaled = [r.max_estimation_error * r.t / math.log(r.t) for r in trace[99:]]
    assert max(scaled) <= 50 * scaled[0]


def test_potential_trend_on_potential_game():
    rng = np.random.default_rng(3)
    g, phi = random_potential_game(rng, 3, 3)
    trace = run(RunConfig(g, ring(3), t_final=300, seed=1, potential=phi))
    pot = np.array([r.potential for r in trace])
    assert pot[-50:].mean() >= pot[:50].mean()
    assert trace[-1].psi >= -0.05


def test_potential_improvement_outside_equilibrium():
    rng = np.random.default_rng(11)
    g0, phi = random_potential_game(rng, 2, 3)
    g = Game(g0.payoffs + rng.uniform(-0.02, 0.02, g0.payoffs.shape))
    from nearplay.game import fit_closest_potential

    fit = fit_closest_potential(g)
    trace = run(RunConfig(g, ring(2), t_final=1001, seed=2, potential=fit.potential))
    eps = 0.1
    steps = [t for t in range(200, 1001) if trace[t - 1].psi < -(2 * fit.delta + eps)]
    drops = [t for t in steps if trace[t].potential < trace[t - 1].potential]
    assert len(drops) <= 0.05 * max(len(steps), 1)


def test_coordination_potential_known():
    cfg = RunConfig(coordination_game(3, 2), ring(3), t_final=20, init=(0, 1, 1), potential=coordination_potential(3, 2))
    trace = run(cfg)
    assert trace[-1].potential == pytest.approx(coordination_potential(3, 2).expected(trace[-1].freqs))


def test_invariant_checker_flags_violation():
    from nearplay.dynamics import InvariantViolation, TraceRecord

    cfg = RunConfig(coordination_game(), t_final=3, init=(0, 1))
    checker = InvariantChecker(cfg)
    f = np.array([[0.6, 0.6], [0.0, 1.0]])
    state = DfpState(1, f, np.stack([f, f]), (0, 1))
    with pytest.raises(InvariantViolation, match="simplex"):
        checker(state, TraceRecord(1, (0, 1), 0.0, 0.0))
