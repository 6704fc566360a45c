"""
Order-reduction planners.

Every planner returns a ``Plan``: a list of steps (f_k, K_k(s)) whose star
chain V * f_1 * f_2 * ... lowers the x-degree of V by one per step until it
is quadratic. f_k never depends on outcomes; K_k may depend on the outcomes
of earlier steps.
"""

import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import sympy

from core.constants import Config
from core.coupling import certify_degree, high_order_residual, reduce_step
from core.decompose import ChowDecomp, ChowTerm, WaringDecomp, chow_heuristic, closed_form_crank, extract_BMD, waring_known, waring_monomial, weighted_term_count
from core.errors import DecompositionError, InputError, OrderReductionError, PlanningError
from core.models import GateSpec, Plan, PlanStep, RootRecipe
from core.polyring import Poly, has_fractional_powers, outcome_symbols, parse_poly, positive_rational_samples
from ui.debug_logger import DebugManager
from workers.sampling import run_samples

slog = DebugManager.create_logger(__name__)


def gate_preset(name: str, N: Optional[int]=None, poly: Optional[str]=None) -> GateSpec:
    """Preset gate polynomial, or a custom one parsed from ``poly``."""
    if name == 'cubic-qnd':
        return GateSpec(name, 2, Poly.monomial((1, 2)))
    if name == 'toffoli':
        return GateSpec(name, 3, Poly.monomial((1, 1, 1)))
    if name == 'cphase':
        if N is None or N < 2:
            raise InputError('cphase needs --N >= 2', 'gate')
        return GateSpec(name, 2, Poly.monomial((1, N - 1)), {'N': N})
    if name == 'cnz':
        if N is None or N < 2:
            raise InputError('cnz needs --N >= 2', 'gate')
        return GateSpec(name, N, Poly.monomial((1,) * N), {'N': N})
    if name == 'small-example':
        return GateSpec(name, 2, Poly(2, {(2, 2): 1, (4, 0): 1}))
    if name == 'custom':
        if poly is None:
            raise InputError('custom gate needs --poly', 'gate')
        V = parse_poly(poly)
        if not V.is_outcome_free():
            raise InputError('Gate polynomial must not contain outcome symbols', 'gate')
        n = max(V.n, 1)
        return GateSpec(name, n, V.pad(n), {'poly': poly})
    raise InputError(f'Unknown gate {name!r}', 'gate', {'choices': list(Config.PRESET_GATES)})


def _identity(n: int) -> sympy.Matrix:
    return sympy.eye(n)


def _top_part(f: Poly) -> Poly:
    return f.homogeneous_part(f.degree())


def _require_reduction(plan: Plan) -> Plan:
    ok, residual = verify_plan(plan, Config.PLAN_CHECK_TRIALS, Config.DEFAULT_SEED)
    if not ok:
        raise OrderReductionError(f'Strategy {plan.strategy} chain keeps terms above degree two', residual, {'residual': residual})
    return plan


def plan_strategy1(g: GateSpec) -> Plan:
    """Chow-decompose the top-order part of the running chain at every step."""
    V = g.V
    N = V.degree()
    plan = Plan('1', g)
    if N <= 2:
        return plan
    with slog.context('Strategy I', gate=g.name, order=N):
        s1 = outcome_symbols(g.n, 1)
        plan.steps.append(PlanStep(1, -V, _identity(g.n), s1, 'identity'))
        running = reduce_step(V, -V, _identity(g.n), s1, keep_from=3)
        for k in range(2, N - 1):
            top = _top_part(running)
            d = chow_heuristic(top)
            B, M = extract_BMD(d)
            s_k = outcome_symbols(B.n, k)
            plan.steps.append(PlanStep(k, -B, M, s_k, 'chow-bm'))
            slog.trace(f'step {k}: {d.crank} Chow terms, {d.brank} modes')
            running = reduce_step(running, -B, M, s_k, keep_from=3)
        if not running.is_zero():
            raise OrderReductionError('Chain did not reach degree two', running)
    plan.formula_count = g.n + sum((s.dimension for s in plan.steps[1:]))
    plan.verified = True
    return plan


def _embed(d: ChowDecomp, total: int, offset: int) -> List[ChowTerm]:
    terms = []
    for term in d.terms:
        factors = []
        for form, e in term.factors:
            padded = (sympy.Integer(0),) * offset + tuple(form) + (sympy.Integer(0),) * (total - offset - len(form))
            factors.append((padded, e))
        terms.append(ChowTerm(term.coefficient, factors))
    return terms


def _block_sum(blocks: Sequence[Poly]) -> Tuple[Poly, List[ChowTerm]]:
    total = sum((b.n for b in blocks))
    f = Poly.zero(0)
    terms: List[ChowTerm] = []
    offset = 0
    for block in blocks:
        f = f.direct_sum(block)
        terms.extend(_embed(chow_heuristic(block), total, offset))
        offset += block.n
    return (f, terms)


def plan_strategy2(g: GateSpec) -> Plan:
    """Fixed recursion on the Chow decompositions of earlier ancilla polynomials.

    At step j+1 every Chow term c * prod (w_l . y)^n_l of an earlier f_i
    contributes a block -c (-1)^m C(k, m) * contract(prod z^n, 1, m) with
    m = j - i + 1, coupled through D^-1 F K_i where F stacks the forms w_l,
    u = F s_i and D = diag(u / q), q = (prod u^n)^(1/(k - m)).
    """
    V = g.V
    N = V.degree()
    plan = Plan('2', g)
    if N <= 2:
        return plan
    with slog.context('Strategy II', gate=g.name, order=N):
        s1 = outcome_symbols(g.n, 1)
        f1 = -V.homogeneous_part(N)
        plan.steps.append(PlanStep(1, f1, _identity(g.n), s1, 'identity'))
        history = [(f1, _identity(g.n), s1, chow_heuristic(f1).terms)]
        for j in range(1, N - 2):
            blocks: List[Poly] = []
            rows: List[sympy.Matrix] = []
            roots: List[RootRecipe] = []
            for i, (f_i, K_i, s_i, terms) in enumerate(history, start=1):
                m = j - i + 1
                k = f_i.degree()
                reduced = k - m
                S = sympy.Matrix(s_i)
                for term in terms:
                    F = sympy.Matrix([list(form) for form, _ in term.factors])
                    exps = term.exponents()
                    u = list(F * S)
                    radicand = sympy.Mul(*[v ** e for v, e in zip(u, exps)])
                    q = radicand ** sympy.Rational(1, reduced)
                    weight = -term.coefficient * (-1) ** m * math.comb(k, m)
                    blocks.append(Poly.monomial(exps).contract([1] * len(exps), m).scale(weight))
                    rows.append(sympy.diag(*[q / v for v in u]) * F * K_i)
                    roots.append(RootRecipe.make(radicand, reduced))
            lower = V.homogeneous_part(N - j)
            if not lower.is_zero():
                blocks.append(-lower)
                rows.append(_identity(g.n))
            f_next, terms_next = _block_sum(blocks)
            K_next = sympy.Matrix.vstack(*rows)
            s_next = outcome_symbols(f_next.n, j + 1)
            plan.steps.append(PlanStep(j + 1, f_next, K_next, s_next, 'd-scaling', roots))
            history.append((f_next, K_next, s_next, terms_next))
            slog.trace(f'step {j + 1}: {len(blocks)} blocks, {f_next.n} modes')
    plan.formula_count = g.n + sum((s.dimension for s in plan.steps[1:]))
    return _require_reduction(plan)


def waring_for(g: GateSpec) -> WaringDecomp:
    """Known Waring decomposition of a gate, or of a single-monomial custom gate."""
    if g.name in ('cubic-qnd', 'toffoli', 'small-example'):
        return waring_known(g.name)
    if g.name in ('cphase', 'cnz'):
        return waring_known(g.name, g.params.get('N'))
    if len(g.V.terms) == 1:
        (exps, c), = g.V.terms.items()
        return waring_monomial(exps, c)
    raise DecompositionError('No Waring decomposition known for this gate; supply one with --waring', {'gate': g.name})


def _quadrature_phase_sign(c: sympy.Expr, k: int) -> Tuple[int, sympy.Expr, sympy.Expr]:
    """(sign, radicand, d) with sign * d^k = -c."""
    c = sympy.sympify(c)
    if k % 2 == 1 and (c.is_positive or c.is_negative):
        # odd order: keep every ancilla of the same kind and put the sign into d
        radicand = abs(c)
        d = radicand ** sympy.Rational(1, k)
        return (-1, radicand, d if c.is_positive else -d)
    if c.is_positive:
        return (-1, c, c ** sympy.Rational(1, k))
    radicand = -c
    return (1, radicand, radicand ** sympy.Rational(1, k))


def plan_strategy3(g: GateSpec, waring: Optional[WaringDecomp]=None) -> Plan:
    """K_j = D_j M with M the stacked Waring forms and f_j = sum_i sign_i y_i^(N-j+1)."""
    V = g.V
    N = V.degree()
    plan = Plan('3', g)
    if N <= 2:
        return plan
    if not V.is_homogeneous():
        raise DecompositionError('Strategy III needs a homogeneous gate polynomial', {'gate': g.name})
    w = waring if waring is not None else waring_for(g)
    if w.n != g.n or w.order != N:
        raise DecompositionError(f'Waring decomposition is order {w.order} on {w.n} modes; gate is order {N} on {g.n}')
    if not w.expand().equals(V):
        raise DecompositionError('Waring decomposition does not expand to the gate polynomial')
    M = w.matrix()
    r = w.wrank
    univariate = [Poly.monomial((N,), c) for c, _ in w.terms]
    with slog.context('Strategy III', gate=g.name, order=N, wrank=r):
        for j in range(1, N - 1):
            k = N - j + 1
            s_j = outcome_symbols(r, j)
            signs, ds, roots = ([], [], [])
            for i in range(r):
                sign, radicand, d = _quadrature_phase_sign(univariate[i].coefficient((k,)), k)
                signs.append(sign)
                ds.append(d)
                roots.append(RootRecipe.make(radicand, k))
                univariate[i] = univariate[i] + (Poly.linear_form([d], -s_j[i]) ** k).scale(sign)
            f = Poly(r, {tuple((k if a == i else 0 for a in range(r))): signs[i] for i in range(r)})
            K = sympy.diag(*ds) * M
            plan.steps.append(PlanStep(j, f, K, s_j, 'waring-dm', roots, 'quadrature-phase', signs))
    plan.formula_count = (N - 2) * r
    plan.metadata['wrank'] = r
    plan.metadata['ancilla_kinds'] = {str(N - j + 1): f'|p - {N - j + 1}*x^{N - j} = 0>' for j in range(1, N - 1)}
    return _require_reduction(plan)


def plan_adaptive(g: GateSpec) -> Plan:
    """Reference plan with outcome-dependent ancillas f_k = -top(V_k-1), K_k = I; counting only."""
    V = g.V
    N = V.degree()
    plan = Plan('adaptive', g, metadata={'outcome_dependent_ancillas': True})
    running = V
    for k in range(1, max(N - 1, 1)):
        if running.degree() <= 2:
            break
        f = -_top_part(running)
        s_k = outcome_symbols(g.n, k)
        plan.steps.append(PlanStep(k, f, _identity(g.n), s_k, 'identity'))
        running = reduce_step(running, f, _identity(g.n), s_k, keep_from=3)
    plan.formula_count = max(N - 2, 0) * g.n
    return plan


PLANNERS = {'1': plan_strategy1, '2': plan_strategy2, '3': plan_strategy3}


def plan_gate(g: GateSpec, strategy: str, waring: Optional[WaringDecomp]=None) -> Plan:
    if strategy not in PLANNERS:
        raise InputError(f'Unknown strategy {strategy!r}', 'strategy', {'choices': list(PLANNERS)})
    debugger = DebugManager.get_compiler_debugger()
    debugger.log_plan_start(g.name, strategy, g.order)
    if strategy == '3':
        plan = plan_strategy3(g, waring)
    else:
        plan = PLANNERS[strategy](g)
    for step in plan.steps:
        if not step.f.is_outcome_free():
            raise PlanningError(f'Ancilla polynomial of step {step.index} depends on outcomes')
        debugger.log_plan_step(step.index, step.dimension, step.provenance)
    debugger.log_plan_done(plan.non_gaussian_count, plan.formula_count)
    return plan


def sign_reference_count(N: int) -> int:
    """Single-mode chain mode count when both outcome signs are prepared for."""
    return N - 2 + (N - 2) // 2


def sign_mode(plan: Plan, mode: str) -> Plan:
    if mode not in Config.SIGN_MODES:
        raise InputError(f'Unknown sign mode {mode!r}', 'sign_mode', {'choices': list(Config.SIGN_MODES)})
    metadata = dict(plan.metadata)
    if mode == 'duplicate':
        metadata['duplicated_steps'] = [s.index for s in plan.steps if s.sign_indefinite]
        if plan.gate.n == 1 and plan.strategy == '3':
            metadata['sign_reference_count'] = sign_reference_count(plan.gate.order)
    return replace(plan, sign_mode=mode, metadata=metadata)


def _chain_residual(chain, point) -> float:
    return high_order_residual(chain.evaluate(point))


def verify_plan(plan: Plan, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED, tol: float=Config.DEFAULT_TOLERANCE) -> Tuple[bool, float]:
    """Sampled check that the chain has no terms above degree two."""
    chain = plan.chain()
    symbols = chain.outcome_symbols()
    if not plan.steps:
        ok = plan.gate.V.degree() <= 2
        return (ok, 0.0 if ok else 1.0)
    with slog.context('Verify plan', strategy=plan.strategy, trials=trials):
        exact_possible = not any((has_fractional_powers(v) for s in plan.steps for v in s.K))
        if exact_possible and len(symbols) <= 12:
            ok, residual = certify_degree(chain.symbolic(keep_from=3), 2, trials, seed, tol)
        else:
            points = positive_rational_samples(symbols, trials, seed)
            residuals = run_samples(lambda p: _chain_residual(chain, p), points, operation='Plan verification')
            residual = max(residuals) if residuals else 0.0
            ok = residual < tol
        slog.debug_response('Degree reduction', ok, f'residual {residual:.3e}')
    plan.verified = ok
    return (ok, residual)


def wcount(n: int, k: int) -> int:
    return weighted_term_count(n, k)


def cnz_counts(N: int) -> Dict[str, int]:
    """Structural mode counts of the three strategies for the N-qumode controlled-Z gate."""
    strategy1 = N + sum(((N - k) * wcount(N, N - k) for k in range(1, N - 2)))
    cranks = [1]
    dims = [N]
    for j in range(1, N - 2):
        dims.append(sum((cranks[i - 1] * (N - i + 1) for i in range(1, j + 1))))
        cranks.append(sum((cranks[i - 1] * closed_form_crank(N - i + 1, N - j) for i in range(1, j + 1))))
    strategy3 = (N - 2) * 2 ** (N - 1)
    return {'1': strategy1, '2': sum(dims), '3': strategy3}


def count_table(N_range: Sequence[int]=Config.TABLE_N_RANGE, construct_upto: int=0) -> Dict[str, object]:
    """Structural counts per strategy beside the stored comparison rows.

    The stored rows for strategies 1 and 2 are kept unchanged, which puts
    each under the other's label: computed strategy 1 equals stored row 2 and
    computed strategy 2 equals stored row 1. ``matches`` records which stored
    row each computed row agrees with so the swap is reported, not corrected.
    Plans are built and compared with the structural counts for N up to
    ``construct_upto``.
    """
    N_values = list(N_range)
    computed = {key: [cnz_counts(N)[key] for N in N_values] for key in PLANNERS}
    stored = {}
    for key, row in Config.STORED_TABLE.items():
        by_N = dict(zip(Config.TABLE_N_RANGE, row))
        stored[key] = [by_N.get(N) for N in N_values]
    matches = {}
    for key, row in computed.items():
        matches[key] = {'same_label': [a == b for a, b in zip(row, stored[key])], 'matches_stored_row': next((label for label, srow in stored.items() if srow == row), None)}
    constructed: Dict[str, List[Optional[int]]] = {key: [] for key in PLANNERS}
    for N in N_values:
        for key in PLANNERS:
            if N <= construct_upto:
                constructed[key].append(plan_gate(gate_preset('cnz', N), key).non_gaussian_count)
            else:
                constructed[key].append(None)
    slog.debug(f'Count table for N={N_values}')
    return {'N': N_values, 'computed': computed, 'stored': stored, 'matches': matches, 'constructed': constructed}
