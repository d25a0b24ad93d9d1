import numpy as np
import pytest

from robust_scatter.errors import InfeasibleError, UnboundedError
from robust_scatter.simplex import solve_lp


def test_basic_maximization_via_negation():
    # max x + y s.t. x + y <= 1  ->  objective -1
    x, obj = solve_lp([-1.0, -1.0], [[1.0, 1.0]], [1.0])
    assert obj == pytest.approx(-1.0, abs=1e-12)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)


def test_negative_rhs_forces_phase_one():
    # x >= 3 encoded as -x <= -3; min x -> 3
    x, obj = solve_lp([1.0], [[-1.0]], [-3.0])
    assert obj == pytest.approx(3.0, abs=1e-12)


def test_two_sided_band():
    # 2 <= x <= 5, min x -> 2; max x (min -x) -> 5
    a = [[1.0], [-1.0]]
    b = [5.0, -2.0]
    assert solve_lp([1.0], a, b)[1] == pytest.approx(2.0, abs=1e-12)
    assert solve_lp([-1.0], a, b)[1] == pytest.approx(-5.0, abs=1e-12)


def test_infeasible_detected():
    with pytest.raises(InfeasibleError):
        solve_lp([1.0], [[1.0]], [-1.0])  # x <= -1 with x >= 0


def test_unbounded_detected():
    with pytest.raises(UnboundedError):
        solve_lp([-1.0], [[-1.0]], [0.0])  # min -x with only x >= 0 binding


def test_degenerate_and_redundant_rows():
    # duplicated constraints and a zero row must not break the pivoting
    a = [[1.0, 1.0], [1.0, 1.0], [0.0, 0.0], [-1.0, 0.0]]
    b = [1.0, 1.0, 0.0, 0.0]
    x, obj = solve_lp([-2.0, -1.0], a, b)
    assert obj == pytest.approx(-2.0, abs=1e-10)
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-10)


def test_matches_dense_enumeration_on_random_instances():
    # compare against direct enumeration of basic solutions of Ax + s = b
    rng = np.random.default_rng(0)
    from itertools import combinations

    for trial in range(30):
        nv, m = 3, 4
        a = rng.normal(size=(m, nv)).round(2)
        b = rng.uniform(0.2, 2.0, size=m).round(2)
        c = rng.uniform(0.1, 1.0, size=nv).round(2)  # positive costs: bounded
        x, obj = solve_lp(c, a, b)
        assert np.all(a @ x <= b + 1e-9) and np.all(x >= -1e-12)
        # enumeration over all choices of basic columns of [A | I]
        full = np.hstack([a, np.eye(m)])
        best = np.inf
        for cols in combinations(range(nv + m), m):
            sub = full[:, cols]
            if abs(np.linalg.det(sub)) < 1e-10:
                continue
            z = np.linalg.solve(sub, b)
            if np.all(z >= -1e-9):
                xx = np.zeros(nv + m)
                xx[list(cols)] = z
                best = min(best, float(c @ xx[:nv]))
        assert obj == pytest.approx(best, abs=1e-8), f"trial {trial}"


def test_dimension_validation():
    with pytest.raises(ValueError):
        solve_lp([1.0, 2.0], [[1.0]], [1.0])
