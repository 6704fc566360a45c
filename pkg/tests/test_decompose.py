import pytest
import sympy

from core.decompose import (ChowDecomp, Partition, WaringDecomp, chow_elementary, chow_elementary_weighted,
                            chow_heuristic, closed_form_crank, d_scaling, extract_BMD, q_partitions, rank_functions,
                            term_layout, waring_known, waring_monomial, weighted_term_count)
from core.errors import DecompositionError, InputError
from core.polyring import outcome_symbols, parse_poly


def test_q_partitions_of_seven_into_five_parts():
    found = {p.parts for p in q_partitions(7, 2)}
    assert found == {(1, 1, 1, 1, 3), (1, 1, 2, 1, 2), (1, 1, 3, 1, 1), (2, 1, 1, 1, 2), (2, 1, 2, 1, 1),
                     (3, 1, 1, 1, 1)}
    assert all(Partition(parts).in_Q(7, 2) for parts in found)


def test_q_partitions_edge_cases():
    assert [p.parts for p in q_partitions(3, 0)] == [(3,)]
    assert q_partitions(2, 1) == []
    assert q_partitions(4, -1) == []


def test_partition_helpers():
    p = Partition((2, 1, 3))
    assert p.total == 6
    assert p.in_P(6, 3)
    assert not p.in_P(6, 2)
    assert p.ranges() == [[0, 1], [2], [3, 4, 5]]
    assert p.argmax() == 2


@pytest.mark.parametrize('n, k', [(n, k) for n in range(1, 9) for k in range(1, n + 1)])
def test_elementary_construction_expands_exactly(n, k):
    d = chow_elementary(n, k)
    assert d.verify()
    assert d.crank == closed_form_crank(n, k)


def test_closed_form_crank_values():
    assert closed_form_crank(5, 3) == 3
    assert closed_form_crank(6, 4) == 6
    assert closed_form_crank(10, 5) == 21
    assert closed_form_crank(4, 2) == 3


def test_elementary_rejects_bad_order():
    with pytest.raises(InputError):
        chow_elementary(3, 4)
    with pytest.raises(InputError):
        chow_elementary(3, 0)


def test_weighted_elementary_construction():
    a = {(0, 1): 1, (0, 2): 2, (1, 2): 3}
    d = chow_elementary_weighted(3, 2, a)
    assert d.verify()
    assert d.target == parse_poly('x1*x2 + 2*x1*x3 + 3*x2*x3')


def test_weighted_construction_with_outcome_coefficients():
    s1, s2 = outcome_symbols(2)
    a = {(0, 1): s1, (0, 2): s2, (1, 2): s1 * s2}
    d = chow_elementary_weighted(3, 2, a)
    assert d.verify()
    assert all(term.coefficient.free_symbols == set() for term in d.terms)


def test_weighted_construction_needs_every_subset():
    with pytest.raises(InputError):
        chow_elementary_weighted(3, 2, {(0, 1): 1})


def test_weighted_term_count_covers_closed_form():
    assert weighted_term_count(3, 3) == 1
    assert weighted_term_count(4, 2) >= closed_form_crank(4, 2)


def test_heuristic_uses_elementary_for_uniform_squarefree():
    f = parse_poly('2*x1*x2*x3 + 2*x1*x2*x4 + 2*x1*x3*x4 + 2*x2*x3*x4')
    d = chow_heuristic(f)
    assert d.crank == closed_form_crank(4, 3)
    assert d.verify()


def test_heuristic_greedy_cover():
    d = chow_heuristic(parse_poly('x1*x2^2'))
    assert d.crank == 1
    assert d.verify()
    g = chow_heuristic(parse_poly('x1^2*x2^2 + x1^4'))
    assert g.verify()
    assert g.order == 4


def test_heuristic_rejects_non_homogeneous_and_constants():
    with pytest.raises(DecompositionError):
        chow_heuristic(parse_poly('x1^2 + x1'))
    with pytest.raises(DecompositionError):
        chow_heuristic(parse_poly('x1^0*3', n=1))
    assert chow_heuristic(parse_poly('0*x1')).crank == 0


@pytest.mark.parametrize('build', [
    lambda: chow_elementary(3, 2),
    lambda: chow_elementary_weighted(3, 2, {(0, 1): 1, (0, 2): 2, (1, 2): 3}),
    lambda: chow_heuristic(parse_poly('x1*x2 + x1*x3 + x2*x3')),
    lambda: chow_heuristic(parse_poly('x1^2*x2^2 + x1^4')),
])
def test_chow_constructions_refuse_mismatched_expansion(mocker, build):
    mocker.patch.object(ChowDecomp, 'verify', return_value=False)
    with pytest.raises(DecompositionError) as info:
        build()
    assert 'does not expand to its target' in str(info.value)


@pytest.mark.parametrize('gate_id', ['toffoli', 'small-example'])
def test_waring_constructions_refuse_mismatched_expansion(mocker, gate_id):
    mocker.patch.object(WaringDecomp, 'verify', return_value=False)
    with pytest.raises(DecompositionError) as info:
        waring_known(gate_id)
    assert info.value.details['construction'] == 'Waring'


def test_rank_functions():
    d = chow_elementary(5, 3)
    ranks = rank_functions(d)
    assert ranks['crank'] == 3
    assert ranks['brank'] == 9
    assert rank_functions((5, 3)) == {'crank': 3, 'brank': 9, 'closed_form': 3}


def test_extract_block_polynomial():
    d = chow_elementary(4, 2)
    B, M = extract_BMD(d)
    assert B.n == d.brank
    assert M.shape == (d.brank, 4)
    assert B.is_outcome_free()
    assert B.substitute_affine(M) == d.target
    assert term_layout(d) == [(0, 2), (2, 2), (4, 2)]


def test_d_scaling_normalizes_product():
    s1, s2 = outcome_symbols(2)
    D = d_scaling((1, 2), (s1, s2), 3)
    q = sympy.cbrt(s1 * s2 ** 2)
    assert sympy.simplify(D[0, 0] - s1 / q) == 0
    assert sympy.simplify(D[0, 0] * D[1, 1] ** 2 - 1) == 0
    with pytest.raises(InputError):
        d_scaling((1,), (s1,), 0)


@pytest.mark.parametrize('exps, wrank', [
    ((1, 2), 3),
    ((1, 1, 1), 4),
    ((1, 1, 1, 1), 8),
    ((1, 1, 1, 1, 1, 1), 32),
    ((1, 3), 4),
    ((0, 5), 1),
])
def test_waring_monomials_expand_exactly(exps, wrank):
    d = waring_monomial(exps)
    assert d.wrank == wrank
    assert d.verify()


def test_toffoli_waring_normalization():
    d = waring_known('toffoli')
    assert {abs(c) for c, _ in d.terms} == {sympy.Rational(1, 24)}


def test_waring_unsupported_monomial():
    with pytest.raises(DecompositionError):
        waring_monomial((2, 2))
    with pytest.raises(DecompositionError):
        waring_known('unknown-gate')
    with pytest.raises(InputError):
        waring_known('cnz', 1)


def test_small_example_waring():
    d = waring_known('small-example')
    assert d.wrank == 3
    assert d.order == 4
    assert d.verify()


def test_cphase_family_reproduces_cubic_qnd():
    assert waring_known('cphase', 3).expand() == waring_known('cubic-qnd').expand()


def test_waring_dict_form():
    d = waring_known('cubic-qnd')
    restored = WaringDecomp.from_dict(d.to_dict(), d.target)
    assert restored.wrank == d.wrank
    assert restored.verify()


def test_waring_from_malformed_dict():
    with pytest.raises(InputError):
        WaringDecomp.from_dict({'n': 2})


def test_chow_text():
    d = ChowDecomp(2, [], None)
    assert str(d) == '0'
    assert d.verify()
    assert str(chow_elementary(3, 3)) == 'x1x2x3'
