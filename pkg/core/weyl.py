"""
Normal-ordered Weyl algebra in (x_i, p_i) with [x, p] = i.

Operators are stored as maps (M, N) -> c meaning c * x^M p^N with every x
factor to the left of every p factor. Coefficients are exact Gaussian
rationals (sympy ``QQ_I``).

The module also decomposes anticommutators {x^M, p^N} into sums of nested
commutators of pure-x and pure-p monomials, so any polynomial Hamiltonian
can be written with quadrature-gate generators only.
"""

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.polyerrors import CoercionFailed

from core.errors import DimensionError, InputError, ParseError

logger = logging.getLogger(__name__)

Exps = Tuple[int, ...]
Key = Tuple[Exps, Exps]

ZERO = QQ_I.zero
ONE = QQ_I.one
I_UNIT = QQ_I(0, 1)
_MINUS_I_POWERS = (QQ_I(1, 0), QQ_I(0, -1), QQ_I(-1, 0), QQ_I(0, 1))


def gauss(c) -> 'QQ_I.dtype':
    """Convert ints, rationals and sympy expressions to a Gaussian rational."""
    if isinstance(c, QQ_I.dtype):
        return c
    try:
        return QQ_I.from_sympy(sympy.nsimplify(sympy.sympify(c), rational=True))
    except (CoercionFailed, TypeError, ValueError) as e:
        raise InputError(f'Coefficient {c} is not a Gaussian rational', 'coefficient') from e


def conjugate(c) -> 'QQ_I.dtype':
    return QQ_I(c.x, -c.y)


def to_sympy(c) -> sympy.Expr:
    return QQ_I.to_sympy(c)


def _is_zero(c) -> bool:
    return c == ZERO


def _minus_i_power(k: int):
    return _MINUS_I_POWERS[k % 4]


def _monomial_text(symbol: str, exps: Exps) -> str:
    return '*'.join((f'{symbol}{i + 1}' + (f'^{e}' if e > 1 else '') for i, e in enumerate(exps) if e))


class WeylOp:
    __slots__ = ('n', 'terms')

    def __init__(self, n: int, terms: Optional[Dict[Key, object]]=None):
        self.n = n
        clean: Dict[Key, object] = {}
        for (M, N), c in (terms or {}).items():
            M, N = (tuple(M), tuple(N))
            if len(M) != n or len(N) != n:
                raise DimensionError(f'Exponent vectors {M}, {N} do not have {n} entries')
            clean[M, N] = clean.get((M, N), ZERO) + gauss(c)
        self.terms = {k: v for k, v in clean.items() if not _is_zero(v)}

    @classmethod
    def _raw(cls, n: int, terms: Dict[Key, object]) -> 'WeylOp':
        op = cls.__new__(cls)
        op.n = n
        op.terms = {k: v for k, v in terms.items() if not _is_zero(v)}
        return op

    @classmethod
    def zero(cls, n: int) -> 'WeylOp':
        return cls._raw(n, {})

    @classmethod
    def constant(cls, n: int, c=1) -> 'WeylOp':
        return cls(n, {((0,) * n, (0,) * n): c})

    @classmethod
    def monomial(cls, M: Sequence[int], N: Sequence[int], c=1) -> 'WeylOp':
        if len(M) != len(N):
            raise DimensionError(f'Exponent vectors {tuple(M)}, {tuple(N)} differ in length')
        return cls(len(M), {(tuple(M), tuple(N)): c})

    @classmethod
    def x(cls, n: int, i: int) -> 'WeylOp':
        M = [0] * n
        M[i] = 1
        return cls.monomial(M, [0] * n)

    @classmethod
    def p(cls, n: int, i: int) -> 'WeylOp':
        N = [0] * n
        N[i] = 1
        return cls.monomial([0] * n, N)

    @classmethod
    def x_power(cls, M: Sequence[int]) -> 'WeylOp':
        return cls.monomial(M, [0] * len(M))

    @classmethod
    def p_power(cls, N: Sequence[int]) -> 'WeylOp':
        return cls.monomial([0] * len(N), N)

    def is_zero(self) -> bool:
        return not self.terms

    def _check_same(self, other: 'WeylOp'):
        if self.n != other.n:
            raise DimensionError(f'Mode count mismatch: {self.n} vs {other.n}')

    def __add__(self, other: 'WeylOp') -> 'WeylOp':
        self._check_same(other)
        merged = dict(self.terms)
        for k, c in other.terms.items():
            merged[k] = merged.get(k, ZERO) + c
        return WeylOp._raw(self.n, merged)

    def __neg__(self) -> 'WeylOp':
        return self.scale(-1)

    def __sub__(self, other: 'WeylOp') -> 'WeylOp':
        return self + -other

    def scale(self, c) -> 'WeylOp':
        c = gauss(c)
        return WeylOp._raw(self.n, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other) -> 'WeylOp':
        if not isinstance(other, WeylOp):
            return self.scale(other)
        return product(self, other)

    def __rmul__(self, other) -> 'WeylOp':
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, WeylOp):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    __hash__ = None

    def adjoint(self) -> 'WeylOp':
        result = WeylOp.zero(self.n)
        for (M, N), c in self.terms.items():
            reordered = product(WeylOp.p_power(N), WeylOp.x_power(M))
            result = result + reordered.scale(conjugate(c))
        return result

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max((sum(M) + sum(N) for M, N in self.terms))

    def sorted_terms(self) -> List[Tuple[Key, object]]:
        return sorted(self.terms.items(), key=lambda item: (sum(item[0][0]) + sum(item[0][1]), item[0]), reverse=True)

    def __repr__(self):
        return f'WeylOp({self.n}, {str(self)!r})'

    def __str__(self):
        if not self.terms:
            return '0'
        parts = []
        for (M, N), c in self.sorted_terms():
            mono = '*'.join((t for t in (_monomial_text('x', M), _monomial_text('p', N)) if t))
            parts.append(_format_scaled(c, mono))
        return ' + '.join(parts).replace('+ -', '- ')


def _format_scaled(c, text: str) -> str:
    value = to_sympy(c)
    if not text:
        return sympy.sstr(value)
    if value == 1:
        return text
    if value == -1:
        return f'-{text}'
    if c.y == 0 or c.x == 0:
        return f'{sympy.sstr(value)}*{text}'
    return f'({sympy.sstr(value)})*{text}'


def _reorder_mode(n_p: int, m_x: int) -> List[Tuple[int, int, object]]:
    """p^n x^m as a list of (x exponent, p exponent, coefficient)."""
    out = []
    for k in range(min(n_p, m_x) + 1):
        coeff = math.comb(n_p, k) * math.comb(m_x, k) * math.factorial(k)
        out.append((m_x - k, n_p - k, _minus_i_power(k) * QQ_I(coeff, 0)))
    return out


def product(a: WeylOp, b: WeylOp) -> WeylOp:
    """Normal-ordered product a*b."""
    a._check_same(b)
    n = a.n
    acc: Dict[Key, object] = {}
    for (M1, N1), c1 in a.terms.items():
        for (M2, N2), c2 in b.terms.items():
            per_mode = [_reorder_mode(N1[i], M2[i]) for i in range(n)]
            base = c1 * c2
            for choice in itertools.product(*per_mode):
                coeff = base
                M = []
                N = []
                for i, (mx, np_, c) in enumerate(choice):
                    coeff = coeff * c
                    M.append(M1[i] + mx)
                    N.append(np_ + N2[i])
                key = (tuple(M), tuple(N))
                acc[key] = acc.get(key, ZERO) + coeff
    return WeylOp._raw(n, acc)


def commutator(a: WeylOp, b: WeylOp) -> WeylOp:
    return product(a, b) - product(b, a)


def anticommutator(a: WeylOp, b: WeylOp) -> WeylOp:
    return product(a, b) + product(b, a)


@dataclass(frozen=True)
class SplitTerm:
    """One summand of a Hermitian Hamiltonian.

    ``anticomm`` terms stand for weight * {x^M, p^N}; ``comm`` terms stand for
    i * weight * [x^M, p^N]. Weights are real rationals.
    """
    weight: sympy.Rational
    kind: str
    M: Exps
    N: Exps

    def to_op(self) -> WeylOp:
        X = WeylOp.x_power(self.M)
        P = WeylOp.p_power(self.N)
        if self.kind == 'anticomm':
            return anticommutator(X, P).scale(self.weight)
        return commutator(X, P).scale(gauss(sympy.I * self.weight))


def split_hamiltonian(H: WeylOp) -> List[SplitTerm]:
    """Write a Hermitian H as a sum of real-weighted {x^M,p^N} and i[x^M,p^N].

    With H = sum c x^M p^N in normal order, H = (H + H^dagger)/2 gives
    Re(c)/2 on the anticommutator and Im(c)/2 on the commutator. A real
    constant is carried as a commutator on [x1, p1], whose value is i.
    """
    if not H.is_hermitian():
        raise InputError('Hamiltonian is not Hermitian', 'non_hermitian', {'hamiltonian': str(H)})
    n = H.n
    zero = (0,) * n
    terms: List[SplitTerm] = []
    constant = sympy.Integer(0)
    for (M, N), c in H.sorted_terms():
        re_part = QQ.to_sympy(c.x)
        im_part = QQ.to_sympy(c.y)
        if M == zero and N == zero:
            constant += re_part
            continue
        if re_part != 0:
            terms.append(SplitTerm(re_part / 2, 'anticomm', M, N))
        if im_part != 0 and any(M) and any(N) and _commutator_nonzero(M, N):
            terms.append(SplitTerm(im_part / 2, 'comm', M, N))
    if constant != 0:
        if n == 0:
            raise DimensionError('Cannot place a constant on a zero-mode operator')
        e1 = tuple((1 if i == 0 else 0 for i in range(n)))
        terms.append(SplitTerm(-constant, 'comm', e1, e1))
    return terms


def _commutator_nonzero(M: Exps, N: Exps) -> bool:
    return any((m and k for m, k in zip(M, N)))


def reassemble(terms: Sequence[SplitTerm], n: int) -> WeylOp:
    result = WeylOp.zero(n)
    for term in terms:
        result = result + term.to_op()
    return result


@dataclass(frozen=True)
class Leaf:
    """Pure quadrature monomial x^M (kind 'x') or p^N (kind 'p')."""
    kind: str
    exps: Exps

    def __str__(self):
        text = _monomial_text(self.kind, self.exps)
        return text or '1'


@dataclass(frozen=True)
class Bracket:
    kind: str
    left: Union[Leaf, 'Bracket']
    right: Union[Leaf, 'Bracket']

    def __str__(self):
        if self.kind == 'comm':
            return f'[{self.left},{self.right}]'
        return f'{{{self.left},{self.right}}}'


Node = Union[Leaf, Bracket]


@dataclass
class ExprTree:
    """Linear combination of quadrature brackets plus a constant."""
    n: int
    terms: Dict[Node, object] = field(default_factory=dict)
    constant: object = ZERO

    def add(self, node: Node, c):
        c = gauss(c)
        if _is_zero(c):
            return
        self.terms[node] = self.terms.get(node, ZERO) + c

    def add_constant(self, c):
        self.constant = self.constant + gauss(c)

    def extend(self, other: 'ExprTree', scale):
        scale = gauss(scale)
        for node, c in other.terms.items():
            self.add(node, c * scale)
        self.add_constant(other.constant * scale)

    def __str__(self):
        parts = [_format_scaled(c, str(node)) for node, c in self.terms.items()]
        if not _is_zero(self.constant) or not parts:
            parts.append(sympy.sstr(to_sympy(self.constant)))
        return ' + '.join(parts).replace('+ -', '- ')


def node_op(node: Node, n: int) -> WeylOp:
    if isinstance(node, Leaf):
        if node.kind == 'x':
            return WeylOp.x_power(node.exps)
        return WeylOp.p_power(node.exps)
    left = node_op(node.left, n)
    right = node_op(node.right, n)
    if node.kind == 'comm':
        return commutator(left, right)
    return anticommutator(left, right)


def expand(tree: ExprTree) -> WeylOp:
    result = WeylOp.constant(tree.n, tree.constant)
    for node, c in tree.terms.items():
        result = result + node_op(node, tree.n).scale(c)
    return result


def nesting_depth(tree: ExprTree) -> int:

    def depth(node: Node) -> int:
        if isinstance(node, Leaf):
            return 0
        return 1 + max(depth(node.left), depth(node.right))
    return max((depth(node) for node in tree.terms), default=0)


def naive_nesting_depth(H: WeylOp) -> int:
    """Nesting needed when every term is built by repeated commutators with a cubic gate.

    Each commutator with a cubic generator raises the degree by one, so a
    degree-d term sits d - 2 brackets deep.
    """
    return max(H.degree() - 2, 0)


def _unit(n: int, j: int, k: int=1) -> Exps:
    v = [0] * n
    v[j] = k
    return tuple(v)


def _add(a: Sequence[int], b: Sequence[int]) -> Exps:
    return tuple((x + y for x, y in zip(a, b)))


def _sub(a: Sequence[int], b: Sequence[int]) -> Exps:
    return tuple((x - y for x, y in zip(a, b)))


def _nested(n: int, outer_p: Exps, inner_x: Exps, inner_p: Exps) -> Optional[Bracket]:
    """[p^outer, [x^inner_x, p^inner_p]] or None when it vanishes trivially."""
    if not any(outer_p) or not any(inner_x) or not any(inner_p):
        return None
    if not _commutator_nonzero(inner_x, inner_p):
        return None
    return Bracket('comm', Leaf('p', outer_p), Bracket('comm', Leaf('x', inner_x), Leaf('p', inner_p)))


def _decompose_raw(M: Exps, N: Exps) -> ExprTree:
    n = len(M)
    tree = ExprTree(n)
    if not any(M) and not any(N):
        tree.add_constant(2)
        return tree
    if not any(N):
        tree.add(Leaf('x', M), 2)
        return tree
    if not any(M):
        tree.add(Leaf('p', N), 2)
        return tree
    q = next((i for i in range(n) if M[i] or N[i]))
    eq = _unit(n, q)
    scale = QQ_I(0, sympy.Rational(-2, (M[q] + 1) * (N[q] + 1)))
    inner = ExprTree(n)
    inner.add(Bracket('comm', Leaf('x', _add(M, eq)), Leaf('p', _add(N, eq))), 1)
    pivot_weight = QQ_I(0, sympy.Rational(-(M[q] + 1), 2))
    for k in range(N[q] + 1):
        node = _nested(n, _sub(N, _unit(n, q, k)), M, _unit(n, q, k))
        if node is not None:
            inner.add(node, pivot_weight)
    for j in range(q + 1, n):
        if not M[j]:
            continue
        shifted_x = _sub(_add(M, eq), _unit(n, j))
        if N[j]:
            sub_tree = _decompose_raw(shifted_x, _sub(_add(N, eq), _unit(n, j)))
            inner.extend(sub_tree, QQ_I(0, sympy.Rational(-M[j] * N[j], 2)))
        below = tuple((N[i] if i < j else 0 for i in range(n)))
        above = tuple((N[i] if i > j else 0 for i in range(n)))
        for k in range(N[j]):
            node = _nested(n, _add(above, _unit(n, j, N[j] - k - 1)), shifted_x, _add(_add(below, eq), _unit(n, j, k)))
            if node is not None:
                inner.add(node, QQ_I(0, sympy.Rational(-M[j], 2)))
    tree.extend(inner, scale)
    return tree


def _canonical(tree: ExprTree) -> ExprTree:
    out = ExprTree(tree.n, constant=tree.constant)
    for node, c in tree.terms.items():
        if _is_zero(c):
            continue
        op = node_op(node, tree.n)
        if op.is_zero():
            continue
        keys = list(op.terms)
        if keys == [((0,) * tree.n, (0,) * tree.n)]:
            out.add_constant(op.terms[keys[0]] * c)
            continue
        out.add(node, c)
    out.terms = {node: c for node, c in out.terms.items() if not _is_zero(c)}
    return out


def anticomm_decompose(M: Sequence[int], N: Sequence[int]) -> ExprTree:
    """{x^M, p^N} as commutators of pure quadrature monomials.

    Brackets whose value is a scalar are folded into the constant and
    repeated brackets are merged.
    """
    M, N = (tuple(M), tuple(N))
    if len(M) != len(N):
        raise DimensionError(f'Exponent vectors {M}, {N} differ in length')
    if any((e < 0 for e in M + N)):
        raise InputError(f'Exponents must be non-negative: {M}, {N}', 'exponent')
    tree = _canonical(_decompose_raw(M, N))
    logger.debug(f'Decomposed {{x^{M}, p^{N}}} into {len(tree.terms)} brackets')
    return tree


def verify_decomposition(M: Sequence[int], N: Sequence[int]) -> bool:
    target = anticommutator(WeylOp.x_power(tuple(M)), WeylOp.p_power(tuple(N)))
    return expand(anticomm_decompose(M, N)) == target


def decompose_hamiltonian(H: WeylOp) -> ExprTree:
    """Full quadrature-bracket expression of a Hermitian Hamiltonian."""
    tree = ExprTree(H.n)
    for term in split_hamiltonian(H):
        if term.kind == 'anticomm':
            tree.extend(anticomm_decompose(term.M, term.N), term.weight)
        else:
            tree.add(Bracket('comm', Leaf('x', term.M), Leaf('p', term.N)), gauss(sympy.I * term.weight))
    return _canonical(tree)


@dataclass(frozen=True)
class GateToken:
    """One Trotter factor exp(i * angle * generator).

    ``kind`` is 'quadrature' (pure-x exponential in the frame given by
    ``fourier_modes``), 'fourier' / 'inverse_fourier' (frame changes), 'bracket'
    (generator-level commutator term) or 'phase'.
    """
    kind: str
    angle: sympy.Expr = sympy.Integer(0)
    generator: Optional[WeylOp] = None
    exps: Exps = ()
    modes: Tuple[int, ...] = ()
    label: str = ''

    def __str__(self):
        if self.kind in ('fourier', 'inverse_fourier'):
            return f"{self.kind}({','.join((str(m + 1) for m in self.modes))})"
        return f'exp(i*({sympy.sstr(self.angle)})*{self.label})'


def _hermitian_angle(node_value: WeylOp, c) -> Tuple[sympy.Expr, WeylOp]:
    if c.y == 0:
        return (to_sympy(QQ_I(c.x, 0)), node_value)
    if c.x == 0:
        return (to_sympy(QQ_I(c.y, 0)), node_value.scale(I_UNIT))
    raise InputError(f'Bracket coefficient {to_sympy(c)} is neither real nor imaginary', 'non_hermitian')


def trotter_sequence(H: WeylOp, t, steps: int=1) -> List[GateToken]:
    """First-order Trotter sequence of quadrature-gate tokens for exp(iHt)."""
    if steps < 1:
        raise InputError(f'Trotter step count must be positive, got {steps}', 'steps')
    t = sympy.Rational(t) if not isinstance(t, sympy.Basic) else t
    tree = decompose_hamiltonian(H)
    one_step: List[GateToken] = []
    for node, c in tree.terms.items():
        value = node_op(node, H.n)
        angle, generator = _hermitian_angle(value, c)
        angle = angle * t / steps
        if isinstance(node, Leaf) and node.kind == 'x':
            one_step.append(GateToken('quadrature', angle, generator, node.exps, (), str(node)))
        elif isinstance(node, Leaf):
            modes = tuple((i for i, e in enumerate(node.exps) if e))
            rotated = Leaf('x', node.exps)
            one_step.append(GateToken('fourier', modes=modes))
            one_step.append(GateToken('quadrature', angle, generator, node.exps, modes, str(rotated)))
            one_step.append(GateToken('inverse_fourier', modes=modes))
        else:
            label = str(node) if c.y == 0 else f'i{node}'
            one_step.append(GateToken('bracket', angle, generator, (), (), label))
    if not _is_zero(tree.constant):
        one_step.append(GateToken('phase', to_sympy(tree.constant) * t / steps, WeylOp.constant(H.n), (), (), '1'))
    logger.debug(f'Trotter step has {len(one_step)} tokens, repeated {steps} times')
    return one_step * steps


def trotter_generator_sum(tokens: Sequence[GateToken], n: int) -> WeylOp:
    """Sum of angle * generator over the tokens; equals t*H for a full sequence."""
    total = WeylOp.zero(n)
    for token in tokens:
        if token.generator is None:
            continue
        total = total + token.generator.scale(gauss(token.angle))
    return total


def parse_weyl(text: str, n: Optional[int]=None) -> WeylOp:
    """Parse mixed x/p polynomial text such as ``x1*p1 + p1*x1`` (``I`` is the imaginary unit)."""
    if text is None or not text.strip():
        raise ParseError('Empty operator text')
    local: Dict[str, object] = {'I': sympy.I}
    max_index = 0
    names = sorted(set(re.findall('[A-Za-z_][A-Za-z_0-9]*', text)))
    for name in names:
        if name == 'I':
            continue
        match = re.match('^([xp])(\\d+)$', name)
        if not match or int(match.group(2)) == 0:
            raise ParseError(f'Unknown name {name!r} in operator text')
        max_index = max(max_index, int(match.group(2)))
        local[name] = sympy.Symbol(name, commutative=False)
    if n is None:
        n = max_index
    elif n < max_index:
        raise DimensionError(f'Operator uses mode {max_index} but only {n} modes were declared')
    try:
        expr = sympy.expand(parse_expr(text, local_dict=local, transformations=standard_transformations + (convert_xor,), evaluate=True))
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ParseError(f'Cannot parse operator {text!r}: {e}') from e
    result = WeylOp.zero(n)
    for term in sympy.Add.make_args(expr):
        commutative, ordered = term.args_cnc()
        coeff = gauss(sympy.Mul(*commutative))
        op = WeylOp.constant(n, coeff)
        for factor in ordered:
            base, exponent = factor.as_base_exp()
            if not exponent.is_Integer or exponent < 0:
                raise ParseError(f'Non-polynomial factor {factor} in operator text')
            kind, index = (base.name[0], int(base.name[1:]) - 1)
            single = WeylOp.x(n, index) if kind == 'x' else WeylOp.p(n, index)
            for _ in range(int(exponent)):
                op = product(op, single)
        result = result + op
    return result
