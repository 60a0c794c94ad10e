import numpy as np
import pytest

from copula_markov import (
    DecompositionError,
    DomainError,
    GridCopula,
    IndependenceCopula,
    LowerFrechetCopula,
    NotStochasticallyIncreasingError,
    ResolutionCapError,
    TransposedCopula,
    UpperFrechetCopula,
    extract_pi_ordinal_structure,
    gumbel_pickands,
    extreme_value_copula,
    is_idempotent,
    iterate_to_limit,
    markov_product,
    ordinal_sum,
    power,
    quadrature_markov_product,
    si_sd_involution,
    transpose,
)
from copula_markov import d_inf

from conftest import CHECKER3, random_doubly_stochastic

# matrix square of the workhorse example, from the matrix-product oracle
CHECKER3_SQUARED = np.array(
    [
        [4 / 9, 2 / 9, 1 / 3],
        [1 / 3, 1 / 3, 1 / 3],
        [2 / 9, 4 / 9, 1 / 3],
    ]
)


# ---------------------------------------------------------------------------
# the product
# ---------------------------------------------------------------------------


def test_product_upper_bound_is_the_unit(checker3, pi, upper):
    assert markov_product(upper, checker3) is checker3
    assert markov_product(checker3, upper) is checker3
    assert markov_product(upper, pi) is pi


def test_product_independence_annihilates(checker3, pi):
    assert isinstance(markov_product(pi, checker3), IndependenceCopula)
    assert isinstance(markov_product(checker3, pi), IndependenceCopula)


def test_product_grid_identities_exact(rng):
    for n in (2, 3, 8, 16):
        eye = UpperFrechetCopula().discretize(n)
        uni = IndependenceCopula().discretize(n)
        anti = LowerFrechetCopula().discretize(n)
        c = GridCopula(random_doubly_stochastic(rng, n))
        assert np.max(np.abs(markov_product(eye, c).matrix - c.matrix)) <= 1e-12
        assert np.max(np.abs(markov_product(c, eye).matrix - c.matrix)) <= 1e-12
        assert np.max(np.abs(markov_product(uni, c).matrix - uni.matrix)) <= 1e-12
        assert np.max(np.abs(markov_product(c, uni).matrix - uni.matrix)) <= 1e-12
        assert np.max(np.abs(markov_product(anti, anti).matrix - eye.matrix)) <= 1e-12


def test_product_of_checkerboard_with_itself(checker3):
    square = markov_product(checker3, checker3)
    assert np.max(np.abs(square.matrix - CHECKER3_SQUARED)) <= 1e-15
    # cross-check against numpy's own product
    assert np.max(np.abs(square.matrix - CHECKER3 @ CHECKER3)) == 0.0


def test_product_mixed_resolution_refines_to_lcm(rng):
    a = GridCopula(random_doubly_stochastic(rng, 2))
    b = GridCopula(random_doubly_stochastic(rng, 3))
    result = markov_product(a, b)
    assert result.n == 6
    oracle = quadrature_markov_product(a, b, 12)
    corners = np.arange(7) / 6
    worst = max(
        abs(float(oracle(u, v)) - result.cdf(u, v)) for u in corners for v in corners
    )
    assert worst <= 1e-9


def test_product_resolution_cap(rng, monkeypatch):
    a = GridCopula(random_doubly_stochastic(rng, 2))
    b = GridCopula(random_doubly_stochastic(rng, 3))
    with pytest.raises(ResolutionCapError):
        markov_product(a, b, cap=4)
    monkeypatch.setenv("COPULA_GRID_CAP", "5")
    with pytest.raises(ResolutionCapError):
        markov_product(a, b)
    monkeypatch.setenv("COPULA_GRID_CAP", "6")
    assert markov_product(a, b).n == 6


def test_product_associative_on_random_triples(rng):
    for n in (2, 5, 32):
        for _ in range(5):
            a = GridCopula(random_doubly_stochastic(rng, n))
            b = GridCopula(random_doubly_stochastic(rng, n))
            c = GridCopula(random_doubly_stochastic(rng, n))
            left = markov_product(markov_product(a, b), c).matrix
            right = markov_product(a, markov_product(b, c)).matrix
            assert np.max(np.abs(left - right)) <= 1e-12


# ---------------------------------------------------------------------------
# the quadrature oracle
# ---------------------------------------------------------------------------


def test_quadrature_lower_bound_squared_limits_to_upper(lower):
    oracle = quadrature_markov_product(lower, lower, 300)
    assert float(oracle(0.5, 0.5)) == pytest.approx(0.5, abs=1e-3)


def test_quadrature_independence_annihilates(pi, upper, rng):
    oracle = quadrature_markov_product(pi, upper, 256)
    for _ in range(10):
        u, v = rng.random(2)
        assert float(oracle(u, v)) == pytest.approx(u * v, abs=1e-3)


def test_quadrature_exact_on_aligned_panels(checker3):
    oracle = quadrature_markov_product(checker3, checker3, 3 * 17)
    square = markov_product(checker3, checker3)
    corners = np.arange(4) / 3
    for u in corners:
        for v in corners:
            assert float(oracle(u, v)) == pytest.approx(square.cdf(u, v), abs=1e-12)


def test_quadrature_rejects_small_panel_count(pi, upper):
    with pytest.raises(DomainError):
        quadrature_markov_product(pi, upper, 4)


# ---------------------------------------------------------------------------
# transposition and the SI/SD involution
# ---------------------------------------------------------------------------


def test_transpose_symmetric_copulas_unchanged(pi, upper, lower):
    assert transpose(pi) is pi
    assert transpose(upper) is upper
    assert transpose(lower) is lower


def test_transpose_grid_is_matrix_transpose(checker3):
    assert np.array_equal(transpose(checker3).matrix, CHECKER3.T)


def test_transpose_involution_bit_exact(checker3):
    assert np.array_equal(transpose(transpose(checker3)).matrix, checker3.matrix)
    ev = extreme_value_copula(gumbel_pickands(2.0))
    wrapped = transpose(ev)
    assert isinstance(wrapped, TransposedCopula)
    assert transpose(wrapped) is ev


def test_involution_swaps_frechet_bounds(upper, lower, pi):
    assert d_inf(si_sd_involution(upper), lower) == 0.0
    assert d_inf(si_sd_involution(pi), pi) == 0.0


def test_involution_reverses_grid_rows(checker3):
    flipped = si_sd_involution(checker3)
    assert np.array_equal(flipped.matrix, CHECKER3[::-1])


def test_involution_applied_twice_is_identity_bit_exact(rng):
    for n in (2, 3, 7, 12):
        for _ in range(5):
            g = GridCopula(random_doubly_stochastic(rng, n))
            twice = si_sd_involution(si_sd_involution(g))
            assert np.array_equal(twice.matrix, g.matrix)


def test_involution_derivative_identity(rng):
    # d1 (C- * C)(u, v) = d1 C(1 - u, v); at cell boundaries the reflection
    # swaps the one-sided conventions
    for _ in range(10):
        n = int(rng.integers(2, 9))
        g = GridCopula(random_doubly_stochastic(rng, n))
        flipped = si_sd_involution(g)
        mids = (np.arange(n) + 0.5) / n
        corners = np.arange(1, n) / n
        for v in corners:
            for u in mids:
                assert abs(
                    flipped.partial_derivative(1, u, v)
                    - g.partial_derivative(1, 1.0 - u, v)
                ) <= 1e-12
            for u in corners:
                assert abs(
                    flipped.partial_derivative(1, u, v)
                    - g.partial_derivative(1, 1.0 - u, v, side="left")
                ) <= 1e-12


# ---------------------------------------------------------------------------
# powers
# ---------------------------------------------------------------------------


def test_power_unit_and_involution_elements(upper, lower):
    assert power(upper, 7) is upper
    squared = power(lower, 2)
    assert np.array_equal(squared.matrix, np.eye(squared.n))


def test_power_matches_matrix_power_oracle(checker3):
    for k in (1, 2, 5, 17):
        oracle = np.linalg.matrix_power(CHECKER3, k)
        assert np.max(np.abs(power(checker3, k).matrix - oracle)) <= 1e-12


def test_power_converges_to_uniform(checker3):
    # the matrix is ergodic (spectrum 1, 1/3, 0), so powers flatten to 1/3
    assert np.max(np.abs(power(checker3, 50).matrix - 1.0 / 3.0)) <= 1e-8


def test_power_rejects_zero(checker3):
    with pytest.raises(DomainError):
        power(checker3, 0)


# ---------------------------------------------------------------------------
# idempotency
# ---------------------------------------------------------------------------


def test_idempotent_independence_and_unit(pi, upper):
    assert is_idempotent(pi, tol=1e-12).idempotent
    assert is_idempotent(upper, tol=1e-12).idempotent
    assert is_idempotent(pi.discretize(16), tol=1e-12).idempotent


def test_checkerboard_example_is_not_idempotent(checker3):
    verdict = is_idempotent(checker3, tol=1e-6)
    assert not verdict.idempotent
    # largest prefix-sum discrepancy between A^2 and A, computed directly
    p1 = np.zeros((4, 4))
    p1[1:, 1:] = CHECKER3.cumsum(0).cumsum(1)
    p2 = np.zeros((4, 4))
    p2[1:, 1:] = (CHECKER3 @ CHECKER3).cumsum(0).cumsum(1)
    oracle_gap = np.max(np.abs(p1 - p2)) / 3
    assert verdict.gap == pytest.approx(oracle_gap, abs=1e-12)
    assert verdict.witness is not None


def test_idempotent_ordinal_sum_resolves_componentwise(pi):
    # interval endpoints that align with no dyadic grid stay exact
    cop = ordinal_sum([(0.0, 1 / 3), (5 / 6, 1.0)], [pi, pi])
    verdict = is_idempotent(cop, tol=1e-12)
    assert verdict.idempotent
    assert verdict.gap == 0.0


def test_is_idempotent_requires_positive_tol(pi):
    with pytest.raises(DomainError):
        is_idempotent(pi, tol=0.0)


# ---------------------------------------------------------------------------
# iterate to the idempotent limit
# ---------------------------------------------------------------------------


def test_iterate_independence_converges_immediately(pi):
    report = iterate_to_limit(pi, tol=1e-8, max_iter=50)
    assert report.converged
    assert report.n_steps == 1
    assert report.intervals.to_list() == [[0.0, 1.0]]


def test_iterate_upper_bound_fixed_point(upper):
    report = iterate_to_limit(upper, tol=1e-8, max_iter=50)
    assert report.converged
    assert report.n_steps == 1
    assert report.intervals.to_list() == []


def test_iterate_checkerboard_flattens_to_uniform(checker3):
    report = iterate_to_limit(checker3, tol=1e-8, max_iter=200)
    assert report.converged
    assert report.n_steps <= 60
    assert np.max(np.abs(report.limit.matrix - 1.0 / 3.0)) <= 1e-7
    assert report.intervals.to_list() == [[0.0, 1.0]]
    assert report.monotone_decrease_violation <= 1e-12
    gaps = [step[1] for step in report.steps]
    assert all(g1 >= g2 for g1, g2 in zip(gaps, gaps[1:]))


def test_iterate_rejects_non_si_input(lower):
    with pytest.raises(NotStochasticallyIncreasingError):
        iterate_to_limit(lower.discretize(8))


def test_iterate_reports_non_convergence(checker3):
    report = iterate_to_limit(checker3, tol=1e-8, max_iter=2)
    assert not report.converged
    assert report.n_steps == 2
    assert report.sup_gap > 1e-8


def test_iterate_aligned_ordinal_sum_is_fixed(pi):
    cop = ordinal_sum([(0.0, 0.5), (0.5, 1.0)], [pi, pi])
    report = iterate_to_limit(cop, tol=1e-8, max_iter=50)
    assert report.converged
    assert report.n_steps == 1
    assert report.intervals.to_list() == [[0.0, 0.5], [0.5, 1.0]]


# ---------------------------------------------------------------------------
# ordinal structure extraction
# ---------------------------------------------------------------------------


def test_extract_structure_independence(pi):
    result = extract_pi_ordinal_structure(pi)
    assert result.intervals.to_list() == [[0.0, 1.0]]
    assert result.max_block_gap <= 1e-9


def test_extract_structure_upper_bound(upper):
    result = extract_pi_ordinal_structure(upper)
    assert result.intervals.to_list() == []


def test_extract_structure_grid_exact_endpoints(pi):
    cop = ordinal_sum([(0.0, 1 / 3), (5 / 6, 1.0)], [pi, pi])
    result = extract_pi_ordinal_structure(cop.discretize(36))
    assert result.intervals.to_list() == [[0.0, 1 / 3], [5 / 6, 1.0]]
    assert result.max_block_gap <= 1e-9


def test_extract_structure_analytic_refined_endpoints(pi):
    cop = ordinal_sum([(0.0, 1 / 3), (5 / 6, 1.0)], [pi, pi])
    result = extract_pi_ordinal_structure(cop)
    (a1, b1), (a2, b2) = result.intervals
    assert a1 == 0.0 and b2 == 1.0
    assert abs(b1 - 1 / 3) <= 1e-9
    assert abs(a2 - 5 / 6) <= 1e-9


def test_extract_structure_requires_idempotent_input(checker3):
    with pytest.raises(DomainError):
        extract_pi_ordinal_structure(checker3)


def test_extract_structure_flags_non_monotone_idempotents():
    # idempotent but not stochastically monotone: the averaged cells are
    # not contiguous, so the diagonal criterion misreads the structure
    scattered = GridCopula(
        np.array([[0.5, 0.0, 0.5], [0.0, 1.0, 0.0], [0.5, 0.0, 0.5]])
    )
    assert is_idempotent(scattered, tol=1e-12).idempotent
    with pytest.raises(DecompositionError):
        extract_pi_ordinal_structure(scattered)
