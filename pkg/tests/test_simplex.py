"""Exact feasibility kernel: solutions, Farkas certificates, degeneracy."""

import random
from fractions import Fraction

from bellbox.simplex import solve_equality_feasibility

F = Fraction


def _check_solution(matrix, rhs, solution):
    assert all(x >= 0 for x in solution)
    for row, b in zip(matrix, rhs):
        assert sum(c * x for c, x in zip(row, solution)) == b


def _check_certificate(matrix, rhs, y):
    assert sum(yi * bi for yi, bi in zip(y, rhs)) > 0
    n = len(matrix[0])
    for j in range(n):
        assert sum(y[i] * matrix[i][j] for i in range(len(matrix))) <= 0


def test_simple_feasible():
    matrix = [[F(1), F(1)]]
    rhs = [F(1)]
    out = solve_equality_feasibility(matrix, rhs)
    assert out.feasible
    _check_solution(matrix, rhs, out.solution)


def test_simple_infeasible():
    matrix = [[F(1), F(1)], [F(1), F(1)]]
    rhs = [F(1), F(2)]
    out = solve_equality_feasibility(matrix, rhs)
    assert not out.feasible
    _check_certificate(matrix, rhs, out.certificate)


def test_negative_rhs_handled():
    matrix = [[F(-1), F(0)], [F(0), F(1)]]
    rhs = [F(-2), F(3)]
    out = solve_equality_feasibility(matrix, rhs)
    assert out.feasible
    _check_solution(matrix, rhs, out.solution)


def test_redundant_rows_feasible():
    matrix = [[F(1), F(2)], [F(2), F(4)], [F(1), F(0)]]
    rhs = [F(3), F(6), F(1)]
    out = solve_equality_feasibility(matrix, rhs)
    assert out.feasible
    _check_solution(matrix, rhs, out.solution)


def test_nonnegativity_blocks_algebraic_solution():
    # x - y = 1 with x + y = 0 needs y = -1/2: algebraically solvable,
    # infeasible under x, y >= 0.
    matrix = [[F(1), F(-1)], [F(1), F(1)]]
    rhs = [F(1), F(0)]
    out = solve_equality_feasibility(matrix, rhs)
    assert not out.feasible
    _check_certificate(matrix, rhs, out.certificate)


def test_zero_rhs_is_feasible():
    matrix = [[F(3), F(-5), F(2)]]
    rhs = [F(0)]
    out = solve_equality_feasibility(matrix, rhs)
    assert out.feasible
    _check_solution(matrix, rhs, out.solution)


def test_random_systems_always_certified():
    rand = random.Random(8)
    for _ in range(300):
        m = rand.randint(1, 5)
        n = rand.randint(1, 7)
        matrix = [
            [F(rand.randint(-4, 4), rand.randint(1, 4)) for _ in range(n)]
            for _ in range(m)
        ]
        if rand.random() < 0.5:
            # Force feasibility: derive the rhs from a known witness.
            witness = [F(rand.randint(0, 5), rand.randint(1, 3)) for _ in range(n)]
            rhs = [
                sum((c * x for c, x in zip(row, witness)), F(0)) for row in matrix
            ]
        else:
            rhs = [F(rand.randint(-6, 6), rand.randint(1, 3)) for _ in range(m)]
        out = solve_equality_feasibility(matrix, rhs)
        if out.feasible:
            _check_solution(matrix, rhs, out.solution)
        else:
            _check_certificate(matrix, rhs, out.certificate)
