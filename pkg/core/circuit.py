"""
Measurement-based circuit assembly.

A verified plan becomes a ``CircuitIR``: n squeezed modes for the half
beamsplitter wrapper, one ancilla set per reduction step, one coupling block
per step and a final adaptive homodyne stage. ``resolve_feedforward`` turns
the IR into numeric optical settings for a given set of outcomes.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from core.constants import Config
from core.coupling import DiamondChain, NullifierSet, chain_agreement, extract_quadratic, high_order_residual, star_to_diamond, theorem1_residual
from core.decorators import safe_check
from core.decompose import WaringDecomp
from core.errors import CompilerError, FeedforwardError, VerificationError
from core.linalg import MeasurePlan, TwoModeRotation, givens_factor, measure_symmetric, svd, transmittances
from core.models import AncillaSpec, CheckResult, CircuitIR, CouplingBlockSpec, FinalStage, GateSpec, Plan, VerificationReport, format_float
from core.polyring import Poly, positive_rational_samples, x_symbols
from core.strategies import plan_gate, sign_mode, verify_plan
from core.validators import InputValidator, MatrixValidator
from ui.debug_logger import DebugManager
from workers.sampling import run_samples

slog = DebugManager.create_logger(__name__)


def _squeezed_wrapper(n: int) -> List[AncillaSpec]:
    return [AncillaSpec(i, 0, Poly.zero(1), 'squeezed', 'x-eigenstate |x=0> for the mode-wise half beamsplitter') for i in range(n)]


def _nullifier_text(f: Poly) -> str:
    return 'eigenstate of m(x\',p\';f) with eigenvalue 0: ' + ', '.join((f'{m} = 0' for m in NullifierSet(f).describe(prime=True)))


def build_circuit(plan: Plan, require_verified: bool=True) -> CircuitIR:
    if require_verified and plan.steps and (not plan.verified):
        raise VerificationError('Plan has not been verified; run verify_plan first', 'unverified_plan')
    g = plan.gate
    ancillas: List[AncillaSpec] = []
    blocks: List[CouplingBlockSpec] = []
    for step in plan.steps:
        ancillas.append(AncillaSpec(len(ancillas), step.index, step.f, step.ancilla_kind, _nullifier_text(step.f)))
        if plan.step_modes(step) > step.dimension:
            ancillas.append(AncillaSpec(len(ancillas), step.index, -step.f, step.ancilla_kind, 'sign-flipped copy, used when an even-root radicand of this step is negative', 'negated'))
        mode_wise = step.K.shape == (g.n, g.n) and step.K == sympy.eye(g.n)
        blocks.append(CouplingBlockSpec(step.index, step.K, list(step.outcomes), mode_wise, list(step.roots)))
    metadata: Dict[str, Any] = {
        'non_gaussian': plan.non_gaussian_count,
        'gaussian': plan.gaussian_count,
        'formula_count': plan.formula_count,
        'steps': plan.dimensions,
        'provenance': [s.provenance for s in plan.steps],
        'verified': plan.verified,
        'squeezing': 'sqrt(2)',
    }
    for key in ('wrank', 'ancilla_kinds', 'duplicated_steps', 'sign_reference_count'):
        if key in plan.metadata:
            metadata[key] = plan.metadata[key]
    ir = CircuitIR(g, plan.strategy, plan.sign_mode, _squeezed_wrapper(g.n), ancillas, blocks, FinalStage(), metadata)
    if ir.non_gaussian_count != plan.non_gaussian_count:
        raise VerificationError(f'Circuit has {ir.non_gaussian_count} non-Gaussian modes, plan has {plan.non_gaussian_count}', 'mode_accounting')
    slog.debug(f'Built circuit for {g.name}: {ir.non_gaussian_count} non-Gaussian, {ir.gaussian_count} Gaussian modes')
    return ir


def compile_gate(g: GateSpec, strategy: str, mode: str='assume-positive', waring: Optional[WaringDecomp]=None, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED, tol: float=Config.DEFAULT_TOLERANCE) -> CircuitIR:
    """Plan, verify and assemble one gate."""
    plan = plan_gate(g, strategy, waring)
    ok, residual = verify_plan(plan, trials, seed, tol)
    if not ok:
        raise VerificationError(f'Chain keeps terms above degree two (residual {residual:.3e})', 'degree_reduction', {'residual': residual})
    return build_circuit(sign_mode(plan, mode))


@dataclass
class FeedforwardProgram:
    """Ordered classical instructions run between measurements."""
    instructions: List[Dict[str, Any]] = field(default_factory=list)

    def validate(self) -> List[str]:
        """Names read before they are bound."""
        bound = set()
        problems = []
        for ins in self.instructions:
            for name in ins.get('reads', []):
                if name not in bound:
                    problems.append(f"{ins['op']} at step {ins.get('step')} reads unbound {name}")
            bound.update(ins.get('binds', []))
        return problems


def feedforward_program(ir: CircuitIR) -> FeedforwardProgram:
    program = FeedforwardProgram()
    for block in ir.blocks:
        program.instructions.append({'op': 'evaluate', 'step': block.step, 'reads': block.depends_on})
        program.instructions.append({'op': 'svd', 'step': block.step})
        program.instructions.append({'op': 'measure', 'step': block.step, 'binds': [str(s) for s in block.outcomes]})
    program.instructions.append({'op': 'eigh', 'step': len(ir.blocks) + 1, 'reads': [str(s) for b in ir.blocks for s in b.outcomes]})
    program.instructions.append({'op': 'postprocess', 'step': len(ir.blocks) + 1})
    program.instructions.append({'op': 'displace', 'step': len(ir.blocks) + 1})
    return program


def _floats(values) -> List:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return format_float(arr)
    return [_floats(v) for v in arr]


def _rotations(rotations: List[TwoModeRotation]) -> List[Dict[str, Any]]:
    return [{'modes': [r.mode_a, r.mode_b], 'theta': format_float(r.theta)} for r in rotations]


@dataclass
class ResolvedBlock:
    """Numeric settings of one coupling block: O, the VBS layer and O'."""
    step: int
    K_prime: np.ndarray
    O_anc: np.ndarray
    sigma: np.ndarray
    O: np.ndarray
    t: np.ndarray
    r: np.ndarray
    input_rotations: List[TwoModeRotation]
    input_signs: np.ndarray
    ancilla_rotations: List[TwoModeRotation]
    ancilla_signs: np.ndarray
    measured: np.ndarray
    star_outcome: np.ndarray
    mode_wise: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'step': self.step,
            'mode_wise': self.mode_wise,
            'K_prime': _floats(self.K_prime),
            'singular_values': _floats(self.sigma),
            'transmittance': _floats(self.t),
            'reflectance': _floats(self.r),
            'input_network': {'rotations': _rotations(self.input_rotations), 'signs': _floats(self.input_signs)},
            'ancilla_network': {'rotations': _rotations(self.ancilla_rotations), 'signs': _floats(self.ancilla_signs)},
            'measured': _floats(self.measured),
            'star_outcome': _floats(self.star_outcome),
        }


@dataclass
class ResolvedCircuit:
    blocks: List[ResolvedBlock]
    A: np.ndarray
    b: np.ndarray
    quadratic: np.ndarray
    offset: np.ndarray
    final: MeasurePlan
    final_rotations: List[TwoModeRotation]
    final_signs: np.ndarray
    diamond: DiamondChain
    warnings: List[str] = field(default_factory=list)

    @property
    def target(self) -> np.ndarray:
        """C in the final measurement p + C x."""
        return -2.0 * self.quadratic

    def to_dict(self) -> Dict[str, Any]:
        return {
            'blocks': [b.to_dict() for b in self.blocks],
            'tracker': {'A': _floats(self.A), 'b': _floats(self.b)},
            'final_stage': {
                'C': _floats(self.target),
                'offset': _floats(self.offset),
                'thetas': _floats(self.final.thetas),
                'network': {'rotations': _rotations(self.final_rotations), 'signs': _floats(self.final_signs)},
                'postprocess': _floats(self.final.postprocess),
            },
            'warnings': list(self.warnings),
        }


def _resolve_block(step: int, K_prime: np.ndarray, measured, star_outcome, mode_wise: bool) -> ResolvedBlock:
    n_anc, n = K_prime.shape
    O_anc, sigma, O = svd(K_prime)
    t, r = transmittances(sigma, n)
    rot_in, signs_in = givens_factor(O)
    rot_anc, signs_anc = givens_factor(O_anc)
    return ResolvedBlock(step, K_prime, O_anc, sigma, O, t, r, rot_in, signs_in, rot_anc, signs_anc, np.asarray(measured), np.asarray(star_outcome), mode_wise)


def sample_outcomes(ir: CircuitIR, seed: int=Config.DEFAULT_SEED, trials: int=1) -> List[List[List[float]]]:
    """Seeded positive star outcomes, grouped per block."""
    symbols = ir.chain().outcome_symbols()
    grouped = []
    for point in positive_rational_samples(symbols, trials, seed):
        grouped.append([[float(point[s]) for s in b.outcomes] for b in ir.blocks])
    return grouped


def resolve_feedforward(ir: CircuitIR, outcomes: Optional[Sequence[Sequence[float]]]=None, kind: str='star', strict: bool=False, tol: float=Config.DEFAULT_TOLERANCE) -> ResolvedCircuit:
    """Numeric beamsplitter networks, homodyne phases and postprocessing.

    ``outcomes`` holds one vector per block, either star outcomes or the
    values read off the detectors (``kind='measured'``). Without outcomes a
    seeded positive sample is used.
    """
    if outcomes is None:
        outcomes = sample_outcomes(ir)[0]
    valid, error = InputValidator.validate_outcomes(outcomes, [len(b.outcomes) for b in ir.blocks], positive=False)
    if not valid:
        raise FeedforwardError(error, 'outcomes')
    warnings: List[str] = []
    debugger = DebugManager.get_compiler_debugger()
    with slog.context('Resolve feedforward', gate=ir.gate.name, blocks=len(ir.blocks)):
        dchain = star_to_diamond(ir.chain(), outcomes, kind, strict, warnings)
        resolved = []
        for spec, block in zip(ir.blocks, dchain.blocks):
            resolved.append(_resolve_block(spec.step, block.K_prime, block.measured, block.star_outcome, spec.mode_wise))
            debugger.log_feedforward(spec.step, len(block.measured))
        quad = extract_quadratic(dchain.star_polynomial(), tol)
        A_S, b_S, _ = quad.numeric()
        A = dchain.A
        b = dchain.b
        A_D = A.T @ A_S @ A
        A_D = (A_D + A_D.T) / 2
        b_D = A.T @ (2.0 * A_S @ b + b_S)
        final = measure_symmetric(-2.0 * A_D)
        rotations, signs = givens_factor(final.network)
    for w in warnings:
        slog.warning(w)
    return ResolvedCircuit(resolved, A, b, A_D, b_D, final, rotations, signs, dchain, warnings)


@safe_check('mode accounting')
def check_mode_accounting(ir: CircuitIR):
    problems = []
    expected = ir.metadata.get('non_gaussian')
    if expected is not None and expected != ir.non_gaussian_count:
        problems.append(f'{ir.non_gaussian_count} non-Gaussian modes, expected {expected}')
    if ir.gaussian_count != ir.n:
        problems.append(f'{ir.gaussian_count} squeezed modes for {ir.n} inputs')
    for step, deps in ir.feedforward_dag().items():
        if any((d >= step for d in deps)):
            problems.append(f'step {step} reads outcomes of steps {deps}')
    for block in ir.blocks:
        modes = ir.primary_ancilla(block.step).modes
        if block.K.shape != (modes, ir.n):
            problems.append(f'step {block.step} couples {block.K.shape}, ancilla has {modes} modes on {ir.n} inputs')
    problems.extend(feedforward_program(ir).validate())
    return (not problems, None, {'problems': problems} if problems else {})


def _degree_residual(chain, point) -> float:
    return high_order_residual(chain.evaluate(point))


@safe_check('degree reduction')
def check_degree_reduction(ir: CircuitIR, trials: int, seed: int, tol: float):
    chain = ir.chain()
    if not chain.steps:
        degree = ir.gate.V.degree()
        return (degree <= 2, 0.0 if degree <= 2 else 1.0, {'degree': degree})
    points = positive_rational_samples(chain.outcome_symbols(), trials, seed)
    residuals = run_samples(lambda p: _degree_residual(chain, p), points, operation='Degree reduction')
    worst = max(residuals) if residuals else 0.0
    return (worst < tol, worst, {'samples': len(points)})


@safe_check('theorem 1 residual')
def check_theorem1(resolved: ResolvedCircuit, trials: int, seed: int, tol: float=Config.THEOREM1_TOL):
    per_block = []
    for k, block in enumerate(resolved.diamond.blocks):
        before = resolved.diamond.evaluate(upto=k)
        per_block.append(theorem1_residual(before, block.f, block.K_prime, trials, seed))
    worst = max(per_block, default=0.0)
    return (worst < tol, worst, {'per_block': [format_float(v) for v in per_block]})


@safe_check('star/diamond agreement')
def check_chain_agreement(resolved: ResolvedCircuit):
    gap = chain_agreement(resolved.diamond)
    return (gap < Config.CHAIN_AGREEMENT_TOL, gap, {})


@safe_check('final measurement reconstruction')
def check_final_stage(resolved: ResolvedCircuit):
    B, C = resolved.final.reconstruct()
    n = B.shape[0]
    residual = max(float(np.max(np.abs(B - np.eye(n)), initial=0.0)), float(np.max(np.abs(C - resolved.target), initial=0.0)))
    network = MatrixValidator.get_validation_summary(resolved.final.network)
    ok = residual < Config.ORTHO_TOL * max(1.0, float(np.max(np.abs(resolved.target), initial=0.0)))
    return (ok and network['is_orthogonal'], residual, {'thetas': _floats(resolved.final.thetas), 'network': network})


def wrapper_transform(V: Poly) -> Tuple[List[sympy.Expr], List[sympy.Expr]]:
    """Output (x, p) of the half-beamsplitter wrapper around the gate, ancilla |x=0>.

    Input quadratures are ``x1.., p1..``; the ancilla momenta ``pa1..`` must
    cancel from the result.
    """
    n = V.n
    root2 = sympy.sqrt(2)
    xs = x_symbols(n)
    ps = sympy.symbols(f'p1:{n + 1}')
    pa = sympy.symbols(f'pa1:{n + 1}')
    half = sympy.eye(n) / root2
    grad_half = [d.substitute_affine(half).to_expr() for d in V.grad()]
    x_out = [x / root2 for x in xs]
    outcome = [(p + a) / root2 - g for p, a, g in zip(ps, pa, grad_half)]
    p_out = [sympy.expand((p - a) / root2 + m) for p, a, m in zip(ps, pa, outcome)]
    return (x_out, p_out)


@safe_check('wrapper transform')
def check_wrapper(V: Poly):
    n = V.n
    root2 = sympy.sqrt(2)
    xs = x_symbols(n)
    ps = sympy.symbols(f'p1:{n + 1}')
    x_out, p_out = wrapper_transform(V)
    scaled = V.to_expr().xreplace({x: x / root2 for x in xs})
    target = [root2 * p - root2 * sympy.diff(scaled, x) for p, x in zip(ps, xs)]
    mismatched = [i + 1 for i in range(n) if sympy.expand(p_out[i] - target[i]) != 0]
    return (not mismatched, float(len(mismatched)), {'x_out': [str(v) for v in x_out], 'mismatched_modes': mismatched})


def _resolvable(ir: CircuitIR, trials: int, seed: int, tol: float) -> Optional[ResolvedCircuit]:
    for outcomes in sample_outcomes(ir, seed, max(trials, Config.RESOLVE_ATTEMPTS)):
        try:
            return resolve_feedforward(ir, outcomes, 'star', True, tol)
        except FeedforwardError as e:
            slog.debug(f'Skipping sample: {e}')
    return None


def verify_circuit(ir: CircuitIR, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED, tol: float=Config.DEFAULT_TOLERANCE) -> VerificationReport:
    """End-to-end report; failures become report entries."""
    report = VerificationReport(seed=seed, trials=trials, tolerance=tol, flags={'gate': ir.gate.name, 'strategy': ir.strategy, 'sign_mode': ir.sign_mode})
    debugger = DebugManager.get_compiler_debugger()
    with slog.context('Verify circuit', gate=ir.gate.name, trials=trials):
        report.add(check_mode_accounting(ir))
        report.add(check_degree_reduction(ir, trials, seed, tol))
        resolved = None
        try:
            resolved = _resolvable(ir, trials, seed, tol)
            if resolved is None:
                report.add(CheckResult('feedforward', False, None, {'error': 'no sampled outcome keeps every even-root radicand positive', 'attempts': max(trials, Config.RESOLVE_ATTEMPTS)}))
        except CompilerError as e:
            debugger.log_error('Resolve feedforward', e)
            report.add(CheckResult('feedforward', False, None, {'error': str(e), 'error_type': e.error_type}))
        if resolved is not None:
            report.add(check_theorem1(resolved, min(trials, 5), seed))
            report.add(check_chain_agreement(resolved))
            report.add(check_final_stage(resolved))
        report.add(check_wrapper(ir.gate.V))
        for check in report.checks:
            debugger.log_check(check.name, check.passed, check.residual, check.duration_ms)
        debugger.log_verification(len(report.checks) - len(report.failed_checks), len(report.checks))
        slog.debug(f'Debugger summary: {debugger.get_summary()}')
        slog.trace(f'Check trace:\n{debugger.logger.get_buffer()}')
    return report
