import numpy as np
import pytest
import sympy

from core.constants import Config
from core.coupling import (NullifierSet, StarChain, StarStep, certify_degree, chain_agreement, diamond, drop_below,
                           exact_p_of_k, extract_quadratic, high_order_residual, real_value, realize_matrix,
                           reduce_step, star, star_to_diamond, theorem1_residual)
from core.errors import DimensionError, FeedforwardError, InputError, OrderReductionError
from core.polyring import Poly, outcome_symbol, outcome_symbols, parse_poly


@pytest.fixture
def cubic_chain():
    s1 = outcome_symbol('s1')
    return StarChain(parse_poly('x1^3'), [StarStep(parse_poly('-x1^3'), sympy.Matrix([[1]]), [s1])])


def test_star_substitutes_shifted_ancilla():
    s1 = outcome_symbol('s1')
    result = star(parse_poly('x1^2'), parse_poly('x1^3'), [[2]], [s1])
    assert result.coefficient((3,)) == 8
    assert result.coefficient((2,)) == 1 - 12 * s1
    assert result.coefficient((0,)) == -s1 ** 3


def test_star_checks_dimensions():
    with pytest.raises(DimensionError):
        star(parse_poly('x1^2'), parse_poly('x1^3'), [[1, 1]], [1])
    with pytest.raises(DimensionError):
        star(parse_poly('x1^2'), parse_poly('x1^3'), [[1]], [1, 2])


def test_star_with_zero_ancilla_polynomial():
    f = parse_poly('x1^2 + x2')
    assert star(f, Poly.zero(1), [[1, 0]], [3]) == f


def test_exact_p_of_k():
    assert exact_p_of_k(sympy.Matrix([[1]])) == sympy.Matrix([[1 / sympy.sqrt(2)]])
    assert exact_p_of_k(sympy.Matrix([[1, 0], [0, 2]])) is None


def test_diamond_needs_numeric_coupling():
    with pytest.raises(InputError):
        diamond(parse_poly('x1^3'), parse_poly('x1^3'), sympy.Matrix([[outcome_symbol('s1')]]), [1])


def test_theorem1_residual_on_random_couplings(rng):
    f = parse_poly('x1^3 + x1*x2^2 - 2*x2^3')
    g = parse_poly('x1^2*x3 + x2^3 - x3', n=3)
    for _ in range(5):
        K = rng.normal(size=(3, 2))
        assert theorem1_residual(f, g, K, trials=10, seed=3) < Config.THEOREM1_TOL


def _random_cubic(rng, n):
    terms = {}
    for _ in range(3):
        exps = tuple(int(e) for e in rng.multinomial(3, [1 / n] * n))
        terms[exps] = terms.get(exps, 0) + int(rng.integers(-3, 4))
    return Poly(n, terms)


@pytest.mark.parametrize('seed', range(100))
def test_theorem1_residual_across_seeds(seed):
    rng = np.random.default_rng(seed)
    n, n_anc = (int(v) for v in rng.integers(1, 4, size=2))
    f = _random_cubic(rng, n)
    g = _random_cubic(rng, n_anc)
    K = rng.normal(size=(n_anc, n))
    assert theorem1_residual(f, g, K, trials=3, seed=seed) < Config.THEOREM1_TOL


def test_theorem1_residual_checks_shapes():
    with pytest.raises(DimensionError):
        theorem1_residual(parse_poly('x1^3'), parse_poly('x1^3'), np.ones((2, 1)))


def test_nullifier_description():
    nullifiers = NullifierSet(parse_poly('-x1*x2^2'))
    assert nullifiers.describe(prime=True) == ["p1' + x2^2", "p2' + 2*x1*x2"]
    assert nullifiers.describe() == ['p1 + x2^2', 'p2 + 2*x1*x2']
    assert nullifiers.commuting()


def test_nullifier_of_missing_mode():
    assert NullifierSet(parse_poly('x1^3', n=2)).describe() == ['p1 - 3*x1^2', 'p2']


def test_real_value_takes_real_odd_roots():
    s1 = outcome_symbol('s1')
    assert real_value(s1 ** sympy.Rational(1, 3), {s1: sympy.Integer(-8)}) == pytest.approx(-2.0)
    assert real_value(sympy.Integer(5), {}) == 5.0


def test_real_value_even_root_of_negative_radicand():
    s1 = outcome_symbol('s1')
    with pytest.raises(FeedforwardError):
        real_value(sympy.sqrt(s1), {s1: sympy.Integer(-4)}, strict=True)
    warnings = []
    assert real_value(sympy.sqrt(s1), {s1: sympy.Integer(-4)}, warnings=warnings) == pytest.approx(2.0)
    assert len(warnings) == 1


def test_realize_matrix_errors():
    s1, s2 = outcome_symbols(2)
    K = sympy.Matrix([[s1, s2]])
    with pytest.raises(FeedforwardError):
        realize_matrix(K, {s1: 1})
    with pytest.raises(FeedforwardError):
        realize_matrix(sympy.Matrix([[1 / s1]]), {s1: sympy.Rational(1, 10 ** 14)})
    assert np.allclose(realize_matrix(K, {s1: 2, s2: 3}), [[2.0, 3.0]])


def test_drop_below_and_residual():
    f = parse_poly('x1^3/10000000000 + x1^2 + x1')
    assert drop_below(f, 2) == parse_poly('x1^3/10000000000 + x1^2')
    assert drop_below(f, 0) == f
    assert high_order_residual(f) == pytest.approx(1e-10)
    assert high_order_residual(Poly.zero(1)) == 0.0


def test_reduce_step_lowers_order():
    s1 = outcome_symbol('s1')
    result = reduce_step(parse_poly('x1^3'), parse_poly('-x1^3'), [[1]], [s1])
    assert result.degree() == 2
    assert result.coefficient((2,)) == 3 * s1
    assert reduce_step(parse_poly('x1^3'), Poly.zero(1), [[1]], [s1]) == parse_poly('x1^3')


def test_reduce_step_reports_surviving_top_order():
    s1 = outcome_symbol('s1')
    with pytest.raises(OrderReductionError) as info:
        reduce_step(parse_poly('x1^3'), parse_poly('x1^3'), [[1]], [s1])
    assert info.value.residual == parse_poly('2*x1^3')


def test_certify_degree():
    s1 = outcome_symbol('s1')
    assert certify_degree(parse_poly('x1^2 + x1')) == (True, 0.0)
    ok, residual = certify_degree(parse_poly('x1^3'))
    assert not ok and residual == 1.0
    rooted = Poly(1, {(3,): sympy.sqrt(s1) ** 2 - s1, (2,): 1})
    assert certify_degree(rooted)[0]


def test_extract_quadratic():
    q = extract_quadratic(parse_poly('3*x1^2 + 2*x1*x2 + x2 + 5'))
    assert q.A == sympy.Matrix([[3, 1], [1, 0]])
    assert list(q.b) == [0, 1]
    assert q.c == 5
    assert q.to_poly() == parse_poly('3*x1^2 + 2*x1*x2 + x2 + 5')
    A, b, c = q.numeric()
    assert np.allclose(A, [[3, 1], [1, 0]]) and np.allclose(b, [0, 1]) and c == 5.0


def test_extract_quadratic_rejects_higher_degree():
    with pytest.raises(OrderReductionError):
        extract_quadratic(parse_poly('x1^3 + x1^2'))
    q = extract_quadratic(parse_poly('x1^3/10000000000000 + x1^2'), tol=1e-9)
    assert q.A == sympy.Matrix([[1]])


def test_star_chain_symbolic_matches_evaluation(cubic_chain):
    s1 = outcome_symbol('s1')
    symbolic = cubic_chain.symbolic()
    assert symbolic.degree() == 2
    point = {s1: sympy.Rational(3, 2)}
    at_point = cubic_chain.evaluate(point)
    exact = symbolic.subs_outcomes(point)
    for exps in exact.terms:
        assert float(at_point.coefficient(exps)) == pytest.approx(float(exact.coefficient(exps)))


def test_star_to_diamond_agrees_with_star_chain(cubic_chain):
    chain = star_to_diamond(cubic_chain, [[0.7]], 'star')
    assert chain_agreement(chain) < Config.CHAIN_AGREEMENT_TOL
    assert chain.A.shape == (1, 1)
    assert chain.A[0, 0] == pytest.approx(1 / np.sqrt(2))


def test_star_and_measured_outcomes_are_inverse(cubic_chain):
    forward = star_to_diamond(cubic_chain, [[0.7]], 'star')
    measured = forward.blocks[0].measured
    backward = star_to_diamond(cubic_chain, [measured], 'measured')
    assert backward.blocks[0].star_outcome[0] == pytest.approx(0.7)


def test_star_to_diamond_two_steps():
    s1, s2 = outcome_symbol('s1_1'), outcome_symbol('s2_1')
    V = parse_poly('x1^4')
    chain = StarChain(V, [
        StarStep(parse_poly('-x1^4'), sympy.Matrix([[1]]), [s1]),
        StarStep(parse_poly('-x1^3'), sympy.Matrix([[sympy.cbrt(4 * s1)]]), [s2]),
    ])
    diamond_chain = star_to_diamond(chain, [[0.8], [1.3]], 'measured')
    assert len(diamond_chain.blocks) == 2
    assert chain_agreement(diamond_chain) < Config.CHAIN_AGREEMENT_TOL


def test_star_to_diamond_input_checks(cubic_chain):
    with pytest.raises(InputError):
        star_to_diamond(cubic_chain, [[0.7]], 'guess')
    with pytest.raises(DimensionError):
        star_to_diamond(cubic_chain, [[0.7], [0.2]])
    with pytest.raises(DimensionError):
        star_to_diamond(cubic_chain, [[0.7, 0.2]])


def test_first_cnz_step_leaves_elementary_cubic():
    s = outcome_symbols(4)
    V = parse_poly('x1*x2*x3*x4')
    result = reduce_step(V, -V, sympy.eye(4), s)
    assert result.degree() == 3
    expected = Poly.zero(4)
    for j in range(4):
        exps = tuple(0 if i == j else 1 for i in range(4))
        expected = expected + Poly.monomial(exps).scale(s[j])
    assert result.homogeneous_part(3) == expected
