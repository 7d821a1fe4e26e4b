"""Cutting-plane loops: termination, monotonicity, budget bookkeeping, IGC."""

import numpy as np
import pytest

from cutplane.engine import (
    ADD_ONLY,
    INTEGRAL_FOUND,
    ITER_LIMIT,
    REMOVAL,
    RunConfig,
    compute_igc,
    extend_curve,
    load_trajectory,
    run_add_only,
    run_policy,
    run_removal,
    save_trajectory,
    trajectory_from_dict,
    trajectory_to_dict,
)
from cutplane.gomory import BOUND, apply_cuts, ceil_snap
from cutplane.lp import LE, LinearProgram, solve_lp
from cutplane.oracle import solve_ilp
from cutplane.policies import AdditionPolicy, CutScorer


def two_var_lp():
    return LinearProgram(
        objective=[-1.0, -1.0],
        A=[[3.0, 2.0], [-3.0, 2.0]],
        b=[6.0, 0.0],
        senses=[LE, LE],
        name="toy",
    )


def packing_lp(seed=0, n=5, m=5):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 6, size=(m, n)).astype(float)
    for j in range(n):
        if not A[:, j].any():
            A[rng.integers(m), j] = 1.0
    b = rng.integers(10, 16, size=m).astype(float)
    c = -rng.integers(1, 11, size=n).astype(float)
    return LinearProgram(objective=c, A=A, b=b, senses=[LE] * m, name=f"packing{seed}")


def test_integral_relaxation_stops_at_iteration_one():
    lp = LinearProgram(objective=[-1.0, -1.0], A=np.eye(2), b=[2.0, 3.0], senses=[LE, LE])
    traj = run_add_only(lp, AdditionPolicy("random"), RunConfig(max_iters=10))
    assert traj.status == INTEGRAL_FOUND
    assert len(traj.records) == 1


def test_lookahead_strictly_improves_first_iteration():
    lp = two_var_lp()
    traj = run_add_only(lp, AdditionPolicy("lookahead"), RunConfig(max_iters=2))
    assert len(traj.records) >= 2
    assert traj.records[1].lp_value > traj.records[0].lp_value + 1e-9


@pytest.mark.parametrize("policy", ["random", "mv", "mnv", "lex", "minsim", "lookahead"])
def test_add_only_lp_values_nondecreasing(policy):
    for seed in range(3):
        lp = packing_lp(seed)
        traj = run_add_only(lp, AdditionPolicy(policy, rng_seed=seed),
                            RunConfig(max_iters=8))
        v = traj.lp_values
        assert np.all(np.diff(v) >= -1e-7)


def test_removal_budget_bookkeeping():
    """|P_1| = 0 and |P_{k+1}| = min(k+1, |P_k u C_k|) + 1 (retained plus bound cut)."""
    lp = packing_lp(3)
    traj = run_removal(lp, CutScorer("remove-random", rng_seed=0), RunConfig(max_iters=8, mode=REMOVAL))
    recs = traj.records
    assert recs[0].n_active == 0
    for prev, cur in zip(recs, recs[1:]):
        cands = prev.n_active + prev.pool_size
        assert cur.n_active == min(prev.k + 1, cands) + 1


def test_removal_pool_of_five_keeps_three():
    """At k=1 with a pool of >= 2 cuts, the next active set is 2 retained + 1 bound."""
    for seed in range(12):
        lp = packing_lp(seed)
        traj = run_removal(lp, CutScorer("remove-lookahead"), RunConfig(max_iters=2, mode=REMOVAL))
        if traj.records and traj.records[0].pool_size >= 2 and len(traj.records) >= 2:
            assert traj.records[1].n_active == 3
            return
    pytest.fail("no seed produced a first pool with >= 2 cuts")


def test_removal_lp_values_respect_bound_cut():
    lp = packing_lp(1)
    traj = run_removal(lp, CutScorer("remove-lookahead"), RunConfig(max_iters=8, mode=REMOVAL))
    v = traj.lp_values
    assert np.all(np.diff(v) >= -1e-7)
    for prev, cur in zip(v, v[1:]):
        assert cur >= ceil_snap(prev) - 1e-7


def test_removal_preserves_integer_optimum():
    lp = two_var_lp()
    base = solve_ilp(lp)
    traj = run_removal(lp, CutScorer("remove-lookahead"), RunConfig(max_iters=6, mode=REMOVAL))
    for rec in traj.records:
        active = [traj.cuts[i] for i in rec.active_ids]
        res = solve_ilp(apply_cuts(lp, active))
        assert res.value == base.value


def test_old_bound_cuts_are_regular_candidates():
    lp = packing_lp(2)
    traj = run_removal(lp, CutScorer("remove-random", rng_seed=1),
                       RunConfig(max_iters=8, mode=REMOVAL))
    bound_ids = {i for i, c in traj.cuts.items() if c.kind == BOUND}
    assert bound_ids
    seen_as_candidate_again = any(
        set(rec.active_ids) & bound_ids for rec in traj.records[1:]
    )
    assert seen_as_candidate_again


def test_compute_igc_examples():
    lp = two_var_lp()
    traj = run_add_only(lp, AdditionPolicy("lookahead"), RunConfig(max_iters=30))
    igc = compute_igc(traj, z_int=-2.0)
    assert igc[0] == 0.0
    assert np.all((igc >= 0.0) & (igc <= 1.0))
    assert np.all(np.diff(igc) >= 0.0)
    if traj.status == INTEGRAL_FOUND:
        assert igc[-1] == pytest.approx(1.0)


def test_compute_igc_direct_substitution():
    class Fake:
        lp_values = np.array([0.0, 2.0, 3.0])
    np.testing.assert_allclose(compute_igc(Fake(), 4.0), [0.0, 0.5, 0.75])


def test_compute_igc_zero_gap():
    class Fake:
        lp_values = np.array([5.0, 5.0])
    np.testing.assert_array_equal(compute_igc(Fake(), 5.0), [1.0, 1.0])


def test_extend_curve():
    np.testing.assert_array_equal(extend_curve(np.array([0.0, 0.5]), 4), [0.0, 0.5, 0.5, 0.5])


def test_run_policy_dispatch_and_roundtrip(tmp_path):
    lp = packing_lp(4)
    traj = run_policy(lp, "remove-random", RunConfig(max_iters=4), instance_id="abc")
    assert traj.mode == REMOVAL
    assert traj.instance_id == "abc"
    path = tmp_path / "traj.json"
    save_trajectory(traj, path)
    back = load_trajectory(path)
    assert trajectory_to_dict(back) == trajectory_to_dict(traj)


def test_trajectories_deterministic():
    lp = packing_lp(5)
    t1 = run_policy(lp, "remove-random", RunConfig(max_iters=5, seed=7))
    t2 = run_policy(lp, "remove-random", RunConfig(max_iters=5, seed=7))
    assert trajectory_to_dict(t1) == trajectory_to_dict(t2)
