import pytest
import sympy

from core.decompose import waring_monomial
from core.errors import DecompositionError, InputError, OrderReductionError
from core.polyring import parse_poly
from core.strategies import (cnz_counts, count_table, gate_preset, plan_adaptive, plan_gate, plan_strategy1,
                             plan_strategy2, plan_strategy3, sign_mode, sign_reference_count, verify_plan, waring_for)


@pytest.mark.parametrize('name, N, n, order', [
    ('cubic-qnd', None, 2, 3),
    ('toffoli', None, 3, 3),
    ('cphase', 5, 2, 5),
    ('cnz', 4, 4, 4),
    ('small-example', None, 2, 4),
])
def test_gate_presets(name, N, n, order):
    g = gate_preset(name, N)
    assert g.n == n
    assert g.order == order


def test_custom_gate_and_preset_errors():
    g = gate_preset('custom', poly='x1^2*x3')
    assert g.n == 3
    assert g.V == parse_poly('x1^2*x3')
    assert gate_preset('custom', poly='0').n == 1
    with pytest.raises(InputError):
        gate_preset('custom')
    with pytest.raises(InputError):
        gate_preset('custom', poly='s1*x1^3')
    with pytest.raises(InputError):
        gate_preset('cnz', 1)
    with pytest.raises(InputError):
        gate_preset('teleport')


@pytest.mark.parametrize('name, N, strategy, expected', [
    ('cubic-qnd', None, '1', 2),
    ('cubic-qnd', None, '2', 2),
    ('cubic-qnd', None, '3', 3),
    ('toffoli', None, '1', 3),
    ('toffoli', None, '3', 4),
    ('small-example', None, '1', 6),
    ('small-example', None, '2', 5),
    ('small-example', None, '3', 6),
    ('cphase', 4, '1', 4),
    ('cphase', 5, '1', 6),
    ('cnz', 4, '1', 10),
    ('cnz', 4, '2', 8),
    ('cnz', 4, '3', 16),
])
def test_mode_counts(name, N, strategy, expected):
    plan = plan_gate(gate_preset(name, N), strategy)
    assert plan.non_gaussian_count == expected
    assert plan.gaussian_count == gate_preset(name, N).n


@pytest.mark.parametrize('name, N', [('cphase', N) for N in range(3, 9)])
def test_cphase_strategy1_count(name, N):
    assert plan_strategy1(gate_preset(name, N)).non_gaussian_count == 2 * (N - 2)


def test_third_order_gates_use_mode_wise_coupling():
    g = gate_preset('toffoli')
    for plan in (plan_strategy1(g), plan_strategy2(g)):
        assert len(plan.steps) == 1
        step = plan.steps[0]
        assert step.provenance == 'identity'
        assert step.K == sympy.eye(3)
        assert step.f == -g.V


@pytest.mark.parametrize('name, N', [('cubic-qnd', None), ('toffoli', None), ('small-example', None), ('cphase', 4),
                                     ('cnz', 4)])
@pytest.mark.parametrize('strategy', ['1', '2', '3'])
def test_plans_reduce_to_quadratic(name, N, strategy):
    plan = plan_gate(gate_preset(name, N), strategy)
    ok, residual = verify_plan(plan, trials=5, seed=0)
    assert ok, residual
    assert plan.verified


@pytest.mark.parametrize('name', ['cphase', 'cnz'])
@pytest.mark.parametrize('strategy', ['1', '2', '3'])
def test_fifth_order_gates_reduce_to_quadratic(name, strategy):
    plan = plan_gate(gate_preset(name, 5), strategy)
    assert plan.verified
    ok, residual = verify_plan(plan, trials=4, seed=7)
    assert ok, residual
    assert max(step.f.degree() for step in plan.steps) == 5


@pytest.mark.parametrize('planner', [plan_strategy2, plan_strategy3])
def test_planners_check_degree_reduction(planner):
    plan = planner(gate_preset('small-example'))
    assert plan.verified


@pytest.mark.parametrize('planner', [plan_strategy2, plan_strategy3])
def test_planners_refuse_unreduced_chain(mocker, planner):
    mocker.patch('core.strategies.verify_plan', return_value=(False, 0.25))
    with pytest.raises(OrderReductionError) as info:
        planner(gate_preset('toffoli'))
    assert info.value.residual == 0.25


def test_ancilla_polynomials_never_depend_on_outcomes():
    plan = plan_gate(gate_preset('small-example'), '2')
    assert all(step.f.is_outcome_free() for step in plan.steps)
    assert plan.steps[1].dependencies
    assert all(str(s).startswith('s1_') for s in plan.steps[1].K.free_symbols)


def test_strategy2_absorbs_lower_order_parts():
    g = gate_preset('custom', poly='x1^4 + x1^3 + x1^2')
    plan = plan_strategy2(g)
    assert plan.steps[0].f == -parse_poly('x1^4')
    assert verify_plan(plan, trials=5, seed=1)[0]


def test_strategy1_on_non_homogeneous_gate():
    g = gate_preset('custom', poly='x1^3 + x1^2')
    plan = plan_strategy1(g)
    assert plan.steps[0].f == -g.V
    assert verify_plan(plan, trials=3)[0]


def test_quadratic_gate_needs_no_steps():
    plan = plan_gate(gate_preset('custom', poly='x1^2 + 3*x1'), '1')
    assert plan.steps == []
    assert verify_plan(plan) == (True, 0.0)


def test_strategy3_requirements():
    with pytest.raises(DecompositionError):
        plan_strategy3(gate_preset('custom', poly='x1^3 + x1^2'))
    with pytest.raises(DecompositionError):
        plan_strategy3(gate_preset('toffoli'), waring_monomial((1, 2)))
    with pytest.raises(DecompositionError):
        plan_strategy3(gate_preset('cubic-qnd'), waring_monomial((2, 1)))


def test_strategy3_records_ancilla_kinds():
    plan = plan_strategy3(gate_preset('cnz', 4))
    assert plan.metadata['wrank'] == 8
    assert plan.metadata['ancilla_kinds'] == {'4': '|p - 4*x^3 = 0>', '3': '|p - 3*x^2 = 0>'}
    assert all(step.ancilla_kind == 'quadrature-phase' for step in plan.steps)
    assert plan.formula_count == 16


def test_waring_for_custom_monomial():
    w = waring_for(gate_preset('custom', poly='2*x1*x2^2'))
    assert w.verify()
    with pytest.raises(DecompositionError):
        waring_for(gate_preset('custom', poly='x1^3 + x2^3'))


def test_plan_gate_rejects_unknown_strategy():
    with pytest.raises(InputError):
        plan_gate(gate_preset('toffoli'), '4')


def test_adaptive_reference_plan():
    plan = plan_adaptive(gate_preset('cnz', 5))
    assert plan.formula_count == 15
    assert plan.non_gaussian_count == 15
    assert plan.metadata['outcome_dependent_ancillas']


def test_sign_reference_count():
    assert [sign_reference_count(N) for N in range(3, 8)] == [1, 3, 4, 6, 7]


def test_duplicate_sign_mode_on_single_mode_gate():
    plan = plan_gate(gate_preset('custom', poly='x1^5'), '3')
    assert plan.non_gaussian_count == 3
    doubled = sign_mode(plan, 'duplicate')
    assert doubled.metadata['duplicated_steps'] == [2]
    assert doubled.non_gaussian_count == sign_reference_count(5) == 4
    assert sign_mode(plan, 'assume-positive').non_gaussian_count == 3


def test_sign_mode_rejects_unknown_mode():
    with pytest.raises(InputError):
        sign_mode(plan_gate(gate_preset('toffoli'), '1'), 'ignore')


def test_structural_counts():
    assert cnz_counts(4) == {'1': 10, '2': 8, '3': 16}
    rows = [cnz_counts(N) for N in range(3, 9)]
    assert [r['1'] for r in rows] == [3, 10, 29, 67, 155, 333]
    assert [r['2'] for r in rows] == [3, 8, 27, 114, 639, 3936]
    assert [r['3'] for r in rows] == [4, 16, 48, 128, 320, 768]


def test_count_table_flags_swapped_rows():
    table = count_table()
    assert table['N'] == [3, 4, 5, 6, 7, 8]
    assert table['matches']['1']['matches_stored_row'] == '2'
    assert table['matches']['2']['matches_stored_row'] == '1'
    assert all(table['matches']['3']['same_label'])
    assert table['constructed']['1'] == [None] * 6


def test_count_table_constructed_plans_match_structure():
    table = count_table(range(3, 6), construct_upto=5)
    for key in ('1', '2', '3'):
        assert table['constructed'][key] == table['computed'][key]
