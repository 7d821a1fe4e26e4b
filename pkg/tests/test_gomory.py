"""Cut generation checked against exhaustive integer enumeration."""

import itertools

import numpy as np
import pytest

from cutplane.gomory import (
    BOUND,
    Cut,
    apply_cuts,
    bound_cut,
    ceil_snap,
    generate_cutpool,
    validate_cut,
)
from cutplane.lp import LE, RATIONAL, LinearProgram, solve_lp, solve_simplex, to_standard_form
from cutplane.oracle import enumerate_integer_points, integer_box, solve_ilp


def two_var_example():
    """LP optimum (1, 1.5) is fractional; integer optimum value -2."""
    return LinearProgram(
        objective=[-1.0, -1.0],
        A=[[3.0, 2.0], [-3.0, 2.0]],
        b=[6.0, 0.0],
        senses=[LE, LE],
    )


def pool_for(lp, mode="float"):
    sf = to_standard_form(lp)
    sol = solve_simplex(sf, lp.objective, mode)
    return sol, sf, generate_cutpool(sol, sf, lp, id_counter=itertools.count(), born_iter=1)


def test_integral_optimum_yields_empty_pool():
    lp = LinearProgram(objective=[-1.0, -1.0], A=np.eye(2), b=[2.0, 3.0], senses=[LE, LE])
    _, _, pool = pool_for(lp)
    assert len(pool) == 0


def test_two_var_pool_separates_and_preserves():
    lp = two_var_example()
    sol, _, pool = pool_for(lp)
    assert len(pool) >= 1
    pts = enumerate_integer_points(lp, bounds=[3, 3])
    for cut in pool:
        assert validate_cut(cut, sol.x, pts)
        assert cut.violation(sol.x) > 1e-7


def test_pool_size_equals_fractional_count():
    lp = two_var_example()
    sol, _, pool = pool_for(lp)
    v = sol.tableau.rhs
    n_frac = int(np.sum(np.abs(v - np.round(v)) > 1e-6))
    assert len(pool) == n_frac


def test_cut_coefficients_are_integers():
    """Integer data + all rows slacked: eliminated cuts must be integral."""
    lp = two_var_example()
    _, _, pool = pool_for(lp)
    for cut in pool:
        np.testing.assert_array_equal(cut.alpha, np.round(cut.alpha))
        assert cut.beta == round(cut.beta)


def test_exact_mode_matches_float_mode():
    lp = two_var_example()
    _, _, pool_f = pool_for(lp, "float")
    _, _, pool_e = pool_for(lp, RATIONAL)
    assert len(pool_f) == len(pool_e)
    fs = sorted((tuple(c.alpha), c.beta) for c in pool_f)
    es = sorted((tuple(c.alpha), c.beta) for c in pool_e)
    assert fs == es


def test_random_packing_cuts_validate():
    """Every generated cut on random packing draws is safe for all integer points."""
    rng = np.random.default_rng(11)
    for _ in range(25):
        n, m = 4, 4
        A = rng.integers(0, 6, size=(m, n)).astype(float)
        for j in range(n):
            if not A[:, j].any():
                A[rng.integers(m), j] = 1.0
        b = rng.integers(6, 13, size=m).astype(float)
        c = -rng.integers(1, 10, size=n).astype(float)
        lp = LinearProgram(objective=c, A=A, b=b, senses=[LE] * m)
        sol, sf, pool = pool_for(lp)
        if len(pool) == 0:
            continue
        pts = enumerate_integer_points(lp, bounds=integer_box(lp))
        for cut in pool:
            assert validate_cut(cut, sol.x, pts)


def test_pool_cuts_keep_integer_optimum():
    lp = two_var_example()
    _, _, pool = pool_for(lp)
    base = solve_ilp(lp)
    with_cuts = solve_ilp(apply_cuts(lp, pool.cuts))
    assert base.value == with_cuts.value == -2


def test_bound_cut_safe_at_integer_optimum():
    lp = two_var_example()
    rel = solve_lp(lp)
    bc = bound_cut(lp.objective, rel.value, cut_id=99, born_iter=1)
    assert bc.kind == BOUND
    res = solve_ilp(lp)
    # c @ x_int >= ceil(c @ x_frac), i.e. the bound cut holds at the integer optimum.
    assert bc.violation(res.x_int) <= 1e-7
    assert solve_ilp(apply_cuts(lp, [bc])).value == res.value


def test_ceil_snap():
    assert ceil_snap(2.0000001) == 2
    assert ceil_snap(1.9999996) == 2
    assert ceil_snap(-2.5) == -2
    assert ceil_snap(2.3) == 3


def test_pool_size_bounded_by_tableau_rows():
    lp = two_var_example()
    sol, _, pool = pool_for(lp)
    assert len(pool) <= sol.tableau.matrix.shape[0]
