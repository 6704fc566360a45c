"""
Star and diamond coupling calculus.

``star(f, g, K, s) = f(x) + g(Kx - s)`` is the algebraic bookkeeping form of a
measurement chain; ``diamond`` is what the beamsplitter network physically
produces. K is stored with one row per mode of g and one column per mode of
f. Diamond chains are only ever evaluated at numeric outcomes; exact
reasoning happens on star chains.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from core.constants import Config
from core.errors import DimensionError, FeedforwardError, InputError, OrderReductionError
from core.linalg import p_of_k, svd, transmittances
from core.polyring import Poly, has_fractional_powers, positive_rational_samples, scalars_equal
from ui.debug_logger import DebugManager

slog = DebugManager.create_logger(__name__)


def _to_sympy_matrix(K) -> sympy.Matrix:
    if isinstance(K, sympy.MatrixBase):
        return sympy.Matrix(K)
    if isinstance(K, np.ndarray):
        return sympy.Matrix(np.atleast_2d(K).tolist()).applyfunc(lambda v: sympy.Float(float(v), Config.SAMPLE_PRECISION))
    return sympy.Matrix(K)


def _check_dims(f: Poly, g: Poly, K: sympy.Matrix, s: Sequence):
    if K.rows != g.n or K.cols != f.n:
        raise DimensionError(f'Coupling matrix is {K.rows}x{K.cols}; expected {g.n}x{f.n}')
    if len(s) != g.n:
        raise DimensionError(f'Outcome vector has {len(s)} entries; expected {g.n}')


def star(f: Poly, g: Poly, K, s: Sequence) -> Poly:
    """f(x) + g(Kx - s)."""
    K = _to_sympy_matrix(K)
    s = [sympy.sympify(v) for v in s]
    _check_dims(f, g, K, s)
    if g.is_zero():
        return Poly(f.n, dict(f.terms))
    return f + g.substitute_affine(K, [-v for v in s])


def exact_p_of_k(K: sympy.Matrix) -> Optional[sympy.Matrix]:
    """P(K) in closed form when K^T K is a multiple of the identity."""
    if K.free_symbols:
        return None
    G = K.T * K
    c = G[0, 0] if G.rows else sympy.Integer(0)
    if G != c * sympy.eye(G.rows):
        return None
    return sympy.eye(G.rows) / sympy.sqrt(1 + c)


def diamond(f: Poly, g: Poly, K, s: Sequence) -> Poly:
    """f(P(K)x + K^T s) + g(K P(K) x - s) for a numeric K."""
    K = _to_sympy_matrix(K)
    s = [sympy.sympify(v) for v in s]
    _check_dims(f, g, K, s)
    if K.free_symbols:
        raise InputError('diamond needs a numeric coupling matrix; evaluate outcomes first', 'symbolic_coupling')
    P = exact_p_of_k(K)
    if P is None:
        P = _to_sympy_matrix(p_of_k(np.array(K.evalf(Config.SAMPLE_PRECISION).tolist(), dtype=float)))
    S = sympy.Matrix(s)
    left = f.substitute_affine(P, list(K.T * S))
    right = g.substitute_affine(K * P, [-v for v in s])
    return left + right


def _grad_at(f: Poly, point: np.ndarray) -> np.ndarray:
    if f.is_zero():
        return np.zeros(f.n)
    values = [float(v) for v in point]
    return np.array([d.evaluate(values) if not d.is_zero() else 0.0 for d in f.grad()], dtype=float)


@dataclass
class BeamsplitterRelations:
    """Output quadratures of the generalized coupling network for one input point."""
    x_plus: np.ndarray
    p_plus: np.ndarray
    x_minus: np.ndarray
    p_minus: np.ndarray
    outcome: np.ndarray


def beamsplitter_relations(K: np.ndarray, x, p, xa, pa) -> BeamsplitterRelations:
    """Push (x, p) and ancilla (x', p') through O, O', the VBS layer and back.

    The measured x_- is rescaled to the star outcome s = O'^T T' x_-.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n_anc, n = K.shape
    O_anc, sigma, O = svd(K)
    t_in, _ = transmittances(sigma, n)
    t_anc, _ = transmittances(sigma, n_anc)
    R = np.zeros((n_anc, n))
    for i, value in enumerate(sigma):
        R[i, i] = value * t_in[i]
    T = np.diag(t_in)
    T_anc = np.diag(t_anc)

    def plus(u, ua):
        return O.T @ (T @ O @ u + R.T @ O_anc @ ua)

    def minus(u, ua):
        return R @ O @ u - T_anc @ O_anc @ ua
    x_minus = minus(x, xa)
    return BeamsplitterRelations(plus(x, xa), plus(p, pa), x_minus, minus(p, pa), O_anc.T @ T_anc @ x_minus)


def theorem1_residual(f: Poly, g: Poly, K, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED) -> float:
    """Max |P m(x,p;f) + (KP)^T m(x',p';g) - m(x+,p+; f diamond g)| over random points."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n_anc, n = K.shape
    if f.n != n or g.n != n_anc:
        raise DimensionError(f'Coupling matrix is {n_anc}x{n}; polynomials have {g.n} and {f.n} modes')
    rng = np.random.default_rng(seed)
    P = p_of_k(K)
    KP = K @ P
    worst = 0.0
    for _ in range(trials):
        x, p = (rng.normal(size=n), rng.normal(size=n))
        xa, pa = (rng.normal(size=n_anc), rng.normal(size=n_anc))
        rel = beamsplitter_relations(K, x, p, xa, pa)
        lhs = P @ (p - _grad_at(f, x)) + KP.T @ (pa - _grad_at(g, xa))
        # gradient of f(Px + K^T s) + g(KPx - s) at x_+
        inner_f = P @ rel.x_plus + K.T @ rel.outcome
        inner_g = KP @ rel.x_plus - rel.outcome
        rhs = rel.p_plus - (P @ _grad_at(f, inner_f) + KP.T @ _grad_at(g, inner_g))
        worst = max(worst, float(np.max(np.abs(lhs - rhs), initial=0.0)))
    slog.debug(f'Coupling identity residual over {trials} trials: {worst:.3e}')
    return worst


class NullifierSet:
    """Operators m_i = p_i - dV/dx_i."""

    def __init__(self, V: Poly):
        self.V = V
        self.n = V.n

    def gradients(self) -> List[Poly]:
        return self.V.grad()

    def commuting(self) -> bool:
        grads = self.gradients()
        return all((grads[i].diff(j) == grads[j].diff(i) for i in range(self.n) for j in range(i + 1, self.n)))

    def describe(self, prime: bool=False) -> List[str]:
        mark = "'" if prime else ''
        out = []
        for i, d in enumerate(self.gradients()):
            text = str(-d)
            if text == '0':
                out.append(f'p{i + 1}{mark}')
            elif text.startswith('-'):
                out.append(f'p{i + 1}{mark} - {text[1:]}')
            else:
                out.append(f'p{i + 1}{mark} + {text}')
        return out


def realize_matrix(K: sympy.Matrix, binding: Dict[sympy.Symbol, object], strict: bool=False, warnings: Optional[List[str]]=None) -> np.ndarray:
    """Numeric K at the given outcomes, taking real roots.

    Odd roots of negative radicands are taken as real roots. Even roots of a
    negative radicand raise in strict mode and use its absolute value
    otherwise (a warning is appended).
    """
    unbound = K.free_symbols - set(binding)
    if unbound:
        raise FeedforwardError(f'Outcomes {sorted((str(s) for s in unbound))} are not bound yet', 'unbound_outcome')
    values = np.zeros((K.rows, K.cols))
    numeric_binding = {sym: sympy.sympify(v) for sym, v in binding.items()}
    for i in range(K.rows):
        for j in range(K.cols):
            values[i, j] = real_value(K[i, j], numeric_binding, strict, warnings)
    if not np.all(np.isfinite(values)):
        raise FeedforwardError('Coupling matrix is not finite at these outcomes', 'non_finite')
    if np.max(np.abs(values), initial=0.0) > Config.FEEDFORWARD_LIMIT:
        raise FeedforwardError('Coupling matrix exceeds the feedforward limit', 'near_singular', {'max_entry': float(np.max(np.abs(values)))})
    return values


def real_value(expr, binding: Dict[sympy.Symbol, sympy.Expr], strict: bool=False, warnings: Optional[List[str]]=None) -> float:
    expr = sympy.sympify(expr)
    if expr.is_Number:
        return float(expr)

    def fix(power):
        base = power.base.xreplace(binding).evalf(Config.SAMPLE_PRECISION)
        if base.is_extended_negative:
            if power.exp.q % 2 == 1:
                return (-1) ** power.exp.p * (-base) ** power.exp
            if strict:
                raise FeedforwardError(f'Negative radicand {base} under an even root', 'sign_indefinite', {'radicand': str(power.base)})
            if warnings is not None:
                warnings.append(f'even root of negative radicand {sympy.sstr(power.base)} taken on its absolute value')
            return (-base) ** power.exp
        return base ** power.exp
    fractional = [pw for pw in expr.atoms(sympy.Pow) if pw.exp.is_Rational and (not pw.exp.is_integer)]
    replacements = {pw: fix(pw) for pw in fractional}
    value = complex(expr.xreplace(replacements).xreplace(binding).evalf(Config.SAMPLE_PRECISION))
    if abs(value.imag) > 1e-12 * max(1.0, abs(value)):
        raise FeedforwardError(f'Feedforward value {sympy.sstr(expr)} is complex at these outcomes', 'complex_value')
    return value.real


@dataclass
class StarStep:
    f: Poly
    K: sympy.Matrix
    outcomes: List[sympy.Symbol]


@dataclass
class StarChain:
    """V star_{K1,s1} f1 star_{K2,s2} f2 ..."""
    V: Poly
    steps: List[StarStep] = field(default_factory=list)

    def outcome_symbols(self) -> List[sympy.Symbol]:
        return [s for step in self.steps for s in step.outcomes]

    def symbolic(self, keep_from: int=0) -> Poly:
        result = self.V
        for step in self.steps:
            result = drop_below(star(result, step.f, step.K, step.outcomes), keep_from)
        return result

    def evaluate(self, binding: Dict[sympy.Symbol, object], upto: Optional[int]=None) -> Poly:
        """Chain polynomial with outcomes bound; principal roots, 30 digits."""
        result = self.V
        for step in self.steps[:upto]:
            K = step.K.xreplace(binding).evalf(Config.SAMPLE_PRECISION)
            s = [sympy.sympify(binding[sym]) for sym in step.outcomes]
            result = result + step.f.substitute_affine(K, [-v for v in s])
        return result.subs_outcomes(binding, Config.SAMPLE_PRECISION)


def drop_below(f: Poly, k: int) -> Poly:
    if k <= 0:
        return f
    return Poly(f.n, {e: c for e, c in f.terms.items() if sum(e) >= k})


def coefficient_magnitude(c) -> float:
    return abs(complex(sympy.N(c, Config.SAMPLE_PRECISION)))


def high_order_residual(f: Poly, max_degree: int=2) -> float:
    """Largest |coefficient| above ``max_degree`` relative to the largest overall."""
    mags = {e: coefficient_magnitude(c) for e, c in f.terms.items()}
    if not mags:
        return 0.0
    scale = max(mags.values())
    above = max((m for e, m in mags.items() if sum(e) > max_degree), default=0.0)
    return above / scale if scale else 0.0


def certify_degree(f: Poly, max_degree: int=2, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED, tol: float=Config.DEFAULT_TOLERANCE) -> Tuple[bool, float]:
    """Whether all terms above ``max_degree`` vanish; exact unless fractional powers occur."""
    high = drop_below(f, max_degree + 1)
    if high.is_zero():
        return (True, 0.0)
    if not any((has_fractional_powers(c) for c in high.terms.values())):
        exact = all((scalars_equal(c, 0) for c in high.terms.values()))
        return (exact, 0.0 if exact else 1.0)
    worst = 0.0
    for point in positive_rational_samples(f.free_outcomes(), trials, seed):
        worst = max(worst, high_order_residual(f.subs_outcomes(point, Config.SAMPLE_PRECISION), max_degree))
    return (worst < tol, worst)


def reduce_step(Vj: Poly, f: Poly, K, s: Sequence, keep_from: int=0) -> Poly:
    """One order-reduction step V_j star f.

    Raises ``OrderReductionError`` carrying the surviving top-order part when
    the step does not lower the degree.
    """
    if f.is_zero():
        return Vj
    top = Vj.degree()
    result = drop_below(star(Vj, f, K, s), keep_from)
    residual = result.homogeneous_part(top)
    if not residual.is_zero():
        if not all((scalars_equal(c, 0) for c in residual.terms.values())):
            raise OrderReductionError(f'Top order {top} does not cancel', residual, {'residual': str(residual)})
        result = Poly(result.n, {e: c for e, c in result.terms.items() if sum(e) != top})
    slog.trace(f'Reduced order {top} -> {result.degree()}')
    return result


@dataclass
class QuadResidual:
    """x^T A x + b^T x + c with A symmetric."""
    A: sympy.Matrix
    b: sympy.Matrix
    c: sympy.Expr

    def to_poly(self) -> Poly:
        n = self.A.rows
        x = [Poly.variable(n, i) for i in range(n)]
        result = Poly.constant(n, self.c)
        for i in range(n):
            result = result + x[i].scale(self.b[i])
            for j in range(n):
                result = result + (x[i] * x[j]).scale(self.A[i, j])
        return result

    def numeric(self) -> Tuple[np.ndarray, np.ndarray, float]:
        A = np.array(self.A.evalf(Config.SAMPLE_PRECISION).tolist(), dtype=float).reshape(self.A.shape)
        b = np.array(self.b.evalf(Config.SAMPLE_PRECISION).tolist(), dtype=float).reshape(-1)
        return (A, b, complex(sympy.N(self.c)).real)


def extract_quadratic(f: Poly, tol: Optional[float]=None) -> QuadResidual:
    """Read A, b, c off a polynomial of degree at most two.

    With ``tol`` set, numeric terms above degree two whose relative size is
    below ``tol`` are ignored.
    """
    if f.degree() > 2:
        if tol is None or high_order_residual(f) >= tol:
            raise OrderReductionError(f'Polynomial still has degree {f.degree()}', drop_below(f, 3))
    n = f.n
    A = sympy.zeros(n, n)
    b = sympy.zeros(n, 1)
    c = sympy.Integer(0)
    for exps, coeff in f.terms.items():
        degree = sum(exps)
        support = [i for i, e in enumerate(exps) if e]
        if degree == 0:
            c = coeff
        elif degree == 1:
            b[support[0]] = coeff
        elif degree == 2:
            if len(support) == 1:
                A[support[0], support[0]] = coeff
            else:
                i, j = support
                A[i, j] = coeff / 2
                A[j, i] = coeff / 2
    return QuadResidual(A, b, c)


@dataclass
class DiamondBlock:
    f: Poly
    K: np.ndarray
    K_prime: np.ndarray
    measured: np.ndarray
    star_outcome: np.ndarray


@dataclass
class DiamondChain:
    """Diamond chain with the affine tracker mapping it onto a star chain.

    ``D(x) = S(Ax + b)`` where S is the star chain evaluated at the star
    outcomes of every block.
    """
    V: Poly
    blocks: List[DiamondBlock] = field(default_factory=list)
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None

    def evaluate(self, upto: Optional[int]=None) -> Poly:
        result = self.V
        for block in self.blocks[:upto]:
            result = diamond(result, block.f, block.K_prime, block.measured.tolist())
        return result

    def star_polynomial(self) -> Poly:
        """S(x): the star chain at the star outcomes, with the realized couplings."""
        result = self.V
        for block in self.blocks:
            result = result + block.f.substitute_affine(block.K, -block.star_outcome)
        return result


def star_to_diamond(chain: StarChain, outcomes: Sequence[Sequence[float]], kind: str='star', strict: bool=False, warnings: Optional[List[str]]=None) -> DiamondChain:
    """Convert a star chain into the physically executed diamond chain.

    Per step: K' = K A, star outcome s = (I + K A A^T K^T) m + K b for the
    measured m, then (A, b) <- (A P(K'), A A^T K^T m + b). ``kind`` says
    whether ``outcomes`` holds star or measured values.
    """
    if kind not in ('star', 'measured'):
        raise InputError(f'Unknown outcome kind {kind!r}', 'outcome_kind')
    if len(outcomes) != len(chain.steps):
        raise DimensionError(f'{len(outcomes)} outcome vectors for {len(chain.steps)} steps')
    n = chain.V.n
    A = np.eye(n)
    b = np.zeros(n)
    binding: Dict[sympy.Symbol, object] = {}
    blocks = []
    for step, given in zip(chain.steps, outcomes):
        given = np.asarray(given, dtype=float).reshape(-1)
        if given.size != step.f.n:
            raise DimensionError(f'Step expects {step.f.n} outcomes, got {given.size}')
        K = realize_matrix(step.K, binding, strict, warnings)
        K_prime = K @ A
        G = np.eye(step.f.n) + K_prime @ K_prime.T
        if kind == 'star':
            star_value = given
            measured = np.linalg.solve(G, given - K @ b)
        else:
            measured = given
            star_value = G @ measured + K @ b
        b = A @ K_prime.T @ measured + b
        A = A @ p_of_k(K_prime)
        for sym, value in zip(step.outcomes, star_value):
            binding[sym] = sympy.Float(float(value), Config.SAMPLE_PRECISION)
        blocks.append(DiamondBlock(step.f, K, K_prime, measured, star_value))
    return DiamondChain(chain.V, blocks, A, b)


def chain_agreement(diamond_chain: DiamondChain) -> float:
    """Largest coefficient gap between D(x) and S(Ax + b), relative to D."""
    D = diamond_chain.evaluate()
    composed = diamond_chain.star_polynomial().substitute_affine(diamond_chain.A, diamond_chain.b)
    gap = D - composed
    scale = max((coefficient_magnitude(c) for c in D.terms.values()), default=0.0)
    worst = max((coefficient_magnitude(c) for c in gap.terms.values()), default=0.0)
    return worst / scale if scale else worst
