"""
Exact multivariate polynomials in mode variables x1..xn.

Coefficients are sympy expressions over measurement-outcome symbols, so a
single ``Poly`` type covers both fixed ancilla polynomials (rational
coefficients) and outcome-dependent chain polynomials. Outcome symbols are
declared positive, which lets sympy distribute fractional powers over
products of outcomes.
"""

import ast
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, rationalize, standard_transformations

from core.constants import Config
from core.errors import DimensionError, InputError, ParseError

logger = logging.getLogger(__name__)

Exps = Tuple[int, ...]

_X_NAME = re.compile(r'^x(\d+)$')
_P_NAME = re.compile(r'^p(\d+)$')
_S_NAME = re.compile(r'^s(\d+)(?:_(\d+))?$')
_ALLOWED_FUNCTIONS = {'sqrt': sympy.sqrt, 'Rational': sympy.Rational}
_SREPR_NAMES = {
    'Integer': sympy.Integer,
    'Rational': sympy.Rational,
    'Float': sympy.Float,
    'Symbol': sympy.Symbol,
    'Add': sympy.Add,
    'Mul': sympy.Mul,
    'Pow': sympy.Pow,
    'I': sympy.I,
    'sqrt': sympy.sqrt,
}
_SREPR_NODES = (ast.Expression, ast.Call, ast.Name, ast.Load, ast.keyword, ast.Constant, ast.UnaryOp, ast.USub)


def x_symbol(i: int) -> sympy.Symbol:
    """Mode variable x_{i+1} for zero-based index ``i``."""
    return sympy.Symbol(f'x{i + 1}', real=True)


def x_symbols(n: int) -> List[sympy.Symbol]:
    return [x_symbol(i) for i in range(n)]


def outcome_symbol(name: str) -> sympy.Symbol:
    return sympy.Symbol(name, positive=True)


def outcome_symbols(count: int, step: Optional[int]=None) -> List[sympy.Symbol]:
    """Outcome symbols ``s1..`` or, for chain step ``k``, ``sk_1..``."""
    if step is None:
        return [outcome_symbol(f's{j + 1}') for j in range(count)]
    return [outcome_symbol(f's{step}_{j + 1}') for j in range(count)]


def canonical_scalar(c) -> sympy.Expr:
    c = sympy.sympify(c)
    if c.is_Number:
        return c
    return sympy.expand(c)


def fractional_power_symbols(expr) -> set:
    """Symbols that occur inside a base raised to a non-integer power."""
    expr = sympy.sympify(expr)
    found = set()
    for power in expr.atoms(sympy.Pow):
        if not power.exp.is_integer:
            found |= power.base.free_symbols
    return found


def has_fractional_powers(expr) -> bool:
    expr = sympy.sympify(expr)
    return any((not power.exp.is_integer for power in expr.atoms(sympy.Pow)))


def positive_rational_samples(symbols: Sequence[sympy.Symbol], trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED) -> List[Dict[sympy.Symbol, sympy.Rational]]:
    """Seeded positive rational sample points, one dict per trial.

    Symbols are visited in name order so the points depend only on the seed
    and the symbol names.
    """
    rng = np.random.default_rng(seed)
    ordered = sorted(symbols, key=lambda s: s.name)
    points = []
    for _ in range(trials):
        nums = rng.integers(1, Config.SAMPLE_NUMERATOR_MAX + 1, size=len(ordered))
        dens = rng.integers(1, Config.SAMPLE_DENOMINATOR_MAX + 1, size=len(ordered))
        points.append({s: sympy.Rational(int(a), int(b)) for s, a, b in zip(ordered, nums, dens)})
    return points


def scalars_equal(a, b, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED, rel_tol: float=Config.SCALAR_REL_TOL) -> bool:
    """Identity test for outcome expressions.

    Exact normal form when no fractional powers occur, otherwise agreement at
    ``trials`` positive rational points evaluated to ``Config.SAMPLE_PRECISION``
    digits.
    """
    a = sympy.sympify(a)
    b = sympy.sympify(b)
    diff = a - b
    if not has_fractional_powers(diff):
        return sympy.cancel(sympy.together(diff)) == 0
    symbols = diff.free_symbols
    if not symbols:
        value = abs(diff.evalf(Config.SAMPLE_PRECISION))
        scale = max(1, abs(a.evalf(Config.SAMPLE_PRECISION)), abs(b.evalf(Config.SAMPLE_PRECISION)))
        return bool(value <= rel_tol * scale)
    for point in positive_rational_samples(symbols, trials, seed):
        va = a.xreplace(point).evalf(Config.SAMPLE_PRECISION)
        vb = b.xreplace(point).evalf(Config.SAMPLE_PRECISION)
        if abs(va - vb) > rel_tol * max(1, abs(va), abs(vb)):
            return False
    return True


def _as_rows(M) -> List[List[sympy.Expr]]:
    if isinstance(M, sympy.MatrixBase):
        return [[sympy.sympify(v) for v in row] for row in M.tolist()]
    if isinstance(M, np.ndarray):
        if M.ndim != 2:
            raise DimensionError(f'Expected a matrix, got array of shape {M.shape}')
        return [[sympy.Float(float(v)) for v in row] for row in M.tolist()]
    return [[sympy.sympify(v) for v in row] for row in M]


def _as_vector(b) -> List[sympy.Expr]:
    if isinstance(b, sympy.MatrixBase):
        return [sympy.sympify(v) for v in list(b)]
    if isinstance(b, np.ndarray):
        return [sympy.Float(float(v)) for v in b.ravel().tolist()]
    return [sympy.sympify(v) for v in b]


def _collect(n: int, items: Iterable[Tuple[Exps, sympy.Expr]]) -> Dict[Exps, sympy.Expr]:
    acc: Dict[Exps, sympy.Expr] = {}
    for exps, c in items:
        if len(exps) != n:
            raise DimensionError(f'Monomial {exps} does not have {n} exponents')
        acc[exps] = acc.get(exps, sympy.Integer(0)) + c
    clean = {}
    for exps, c in acc.items():
        c = canonical_scalar(c)
        if c != 0:
            clean[exps] = c
    return clean


def grlex_key(exps: Exps):
    return (sum(exps), exps)


class Poly:
    """Polynomial in ``n`` mode variables with outcome-expression coefficients."""
    __slots__ = ('n', 'terms')

    def __init__(self, n: int, terms: Optional[Dict[Exps, object]]=None):
        if n < 0:
            raise DimensionError(f'Mode count must be non-negative, got {n}')
        self.n = n
        self.terms = _collect(n, ((tuple(e), sympy.sympify(c)) for e, c in (terms or {}).items()))

    @classmethod
    def zero(cls, n: int) -> 'Poly':
        return cls(n)

    @classmethod
    def constant(cls, n: int, c) -> 'Poly':
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n: int, i: int) -> 'Poly':
        exps = [0] * n
        exps[i] = 1
        return cls(n, {tuple(exps): 1})

    @classmethod
    def monomial(cls, exps: Sequence[int], c=1) -> 'Poly':
        return cls(len(exps), {tuple(exps): c})

    @classmethod
    def linear_form(cls, coeffs: Sequence, offset=0) -> 'Poly':
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            exps = [0] * n
            exps[i] = 1
            terms[tuple(exps)] = c
        terms[(0,) * n] = offset
        return cls(n, terms)

    @classmethod
    def from_expr(cls, expr, n: int) -> 'Poly':
        expr = sympy.sympify(expr)
        xs = x_symbols(n)
        if n == 0:
            return cls.constant(0, expr)
        try:
            as_poly = sympy.Poly(expr, *xs)
        except sympy.PolynomialError as e:
            raise ParseError(f'Not a polynomial in x1..x{n}: {expr}') from e
        return cls(n, {tuple(e): c for e, c in as_poly.as_dict().items()})

    def to_expr(self) -> sympy.Expr:
        xs = x_symbols(self.n)
        return sympy.Add(*[c * sympy.Mul(*[x ** e for x, e in zip(xs, exps)]) for exps, c in self.sorted_terms()])

    def sorted_terms(self) -> List[Tuple[Exps, sympy.Expr]]:
        return sorted(self.terms.items(), key=lambda item: grlex_key(item[0]), reverse=True)

    def coefficient(self, exps: Sequence[int]) -> sympy.Expr:
        return self.terms.get(tuple(exps), sympy.Integer(0))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max((sum(e) for e in self.terms))

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def homogeneous_part(self, k: int) -> 'Poly':
        return Poly(self.n, {e: c for e, c in self.terms.items() if sum(e) == k})

    def truncate_above(self, k: int) -> 'Poly':
        return Poly(self.n, {e: c for e, c in self.terms.items() if sum(e) <= k})

    def free_outcomes(self) -> set:
        symbols = set()
        for c in self.terms.values():
            symbols |= c.free_symbols
        return symbols

    def is_outcome_free(self) -> bool:
        return not self.free_outcomes()

    def _check_same(self, other: 'Poly'):
        if self.n != other.n:
            raise DimensionError(f'Mode count mismatch: {self.n} vs {other.n}')

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.constant(self.n, other)
        self._check_same(other)
        return Poly(self.n, dict(_merge(self.terms, other.terms, 1)))

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.constant(self.n, other)
        self._check_same(other)
        return Poly(self.n, dict(_merge(self.terms, other.terms, -1)))

    def __rsub__(self, other):
        return -self + other

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return self.scale(other)
        self._check_same(other)
        items = []
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                items.append((tuple((a + b for a, b in zip(e1, e2))), c1 * c2))
        result = Poly(self.n)
        result.terms = _collect(self.n, items)
        return result

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError(f'Polynomial powers must be non-negative integers, got {k}')
        result = Poly.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    __hash__ = None

    def scale(self, c) -> 'Poly':
        c = sympy.sympify(c)
        return Poly(self.n, {e: v * c for e, v in self.terms.items()})

    def diff(self, i: int) -> 'Poly':
        items = []
        for exps, c in self.terms.items():
            if exps[i] == 0:
                continue
            lowered = list(exps)
            lowered[i] -= 1
            items.append((tuple(lowered), c * exps[i]))
        result = Poly(self.n)
        result.terms = _collect(self.n, items)
        return result

    def grad(self) -> List['Poly']:
        return [self.diff(i) for i in range(self.n)]

    def directional(self, v: Sequence) -> 'Poly':
        """(v . grad) f"""
        v = _as_vector(v)
        if len(v) != self.n:
            raise DimensionError(f'Direction has {len(v)} entries, polynomial has {self.n} modes')
        result = Poly.zero(self.n)
        for i, vi in enumerate(v):
            if vi != 0:
                result = result + self.diff(i).scale(vi)
        return result

    def contract(self, v: Sequence, j: int) -> 'Poly':
        """Polynomial of the order-(k-j) tensor obtained by contracting ``j``
        indices of this homogeneous order-k polynomial's tensor with ``v``.

        Computed as ((k-j)!/k!) (v . grad)^j f.
        """
        k = self.degree()
        if self.is_zero():
            return Poly.zero(self.n)
        if not self.is_homogeneous():
            raise ValueError('contract requires a homogeneous polynomial')
        if j > k:
            raise ValueError(f'Cannot contract {j} indices of an order-{k} tensor')
        result = self
        for _ in range(j):
            result = result.directional(v)
        return result.scale(sympy.Rational(math.factorial(k - j), math.factorial(k)))

    def substitute_affine(self, M, b=None) -> 'Poly':
        """Return f(Mx + b); M has one row per mode of f."""
        rows = _as_rows(M)
        if len(rows) != self.n:
            raise DimensionError(f'Substitution matrix has {len(rows)} rows, polynomial has {self.n} modes')
        m = len(rows[0]) if rows else 0
        if any((len(r) != m for r in rows)):
            raise DimensionError('Substitution matrix rows have unequal length')
        offsets = _as_vector(b) if b is not None else [sympy.Integer(0)] * self.n
        if len(offsets) != self.n:
            raise DimensionError(f'Offset has {len(offsets)} entries, polynomial has {self.n} modes')
        forms = [Poly.linear_form(row, off) for row, off in zip(rows, offsets)]
        power_cache: Dict[Tuple[int, int], Poly] = {}

        def power(i: int, e: int) -> Poly:
            key = (i, e)
            if key not in power_cache:
                power_cache[key] = forms[i] ** e
            return power_cache[key]
        result = Poly.zero(m)
        for exps, c in self.sorted_terms():
            term = Poly.constant(m, c)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def direct_sum(self, other: 'Poly') -> 'Poly':
        n = self.n + other.n
        terms = {}
        for e, c in self.terms.items():
            terms[e + (0,) * other.n] = c
        for e, c in other.terms.items():
            key = (0,) * self.n + e
            terms[key] = terms.get(key, 0) + c
        return Poly(n, terms)

    def pad(self, n: int) -> 'Poly':
        if n < self.n:
            raise DimensionError(f'Cannot pad {self.n} modes down to {n}')
        return Poly(n, {e + (0,) * (n - self.n): c for e, c in self.terms.items()})

    def evaluate(self, x: Sequence, outcomes: Optional[Dict[sympy.Symbol, object]]=None):
        """Value at the mode point ``x`` with outcomes bound by ``outcomes``.

        Rational inputs give an exact sympy value; float inputs give a float.
        """
        if len(x) != self.n:
            raise DimensionError(f'Point has {len(x)} coordinates, polynomial has {self.n} modes')
        numeric = any((isinstance(v, float) for v in x))
        binding = {}
        if outcomes:
            fractional = set()
            for c in self.terms.values():
                fractional |= fractional_power_symbols(c)
            for sym, val in outcomes.items():
                val = sympy.sympify(val)
                if sym in fractional and (not val.is_positive):
                    raise InputError(f'Outcome {sym} = {val} is not positive but appears under a fractional power', 'positivity', {'symbol': str(sym)})
                binding[sym] = val
                numeric = numeric or isinstance(val, sympy.Float)
        total = sympy.Integer(0)
        xs = [sympy.sympify(v) for v in x]
        for exps, c in self.terms.items():
            mono = sympy.Integer(1)
            for v, e in zip(xs, exps):
                if e:
                    mono *= v ** e
            total += c.xreplace(binding) * mono
        if numeric:
            return float(sympy.N(total, Config.SAMPLE_PRECISION))
        return total

    def subs_outcomes(self, mapping: Dict[sympy.Symbol, object], precision: Optional[int]=None) -> 'Poly':
        mapping = {k: sympy.sympify(v) for k, v in mapping.items()}
        items = {}
        for e, c in self.terms.items():
            value = c.xreplace(mapping)
            if precision is not None:
                value = value.evalf(precision)
            items[e] = value
        return Poly(self.n, items)

    def equals(self, other: 'Poly', trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED) -> bool:
        """Semantic equality; sampled when coefficients carry fractional powers."""
        self._check_same(other)
        diff = self - other
        return all((scalars_equal(c, 0, trials, seed) for c in diff.terms.values()))

    def __repr__(self):
        return f'Poly({self.n}, {str(self)!r})'

    def __str__(self):
        if not self.terms:
            return '0'
        parts = []
        for exps, c in self.sorted_terms():
            mono = '*'.join((f'x{i + 1}' + (f'^{e}' if e > 1 else '') for i, e in enumerate(exps) if e))
            parts.append(_format_term(c, mono))
        text = ' + '.join(parts)
        return text.replace('+ -', '- ')


def _format_term(c: sympy.Expr, mono: str) -> str:
    if not mono:
        return sympy.sstr(c)
    if c == 1:
        return mono
    if c == -1:
        return f'-{mono}'
    if c.is_Rational:
        return f'{c}*{mono}'
    return f'({sympy.sstr(c)})*{mono}'


def _merge(a: Dict[Exps, sympy.Expr], b: Dict[Exps, sympy.Expr], sign: int):
    merged = dict(a)
    for e, c in b.items():
        merged[e] = merged.get(e, sympy.Integer(0)) + sign * c
    return merged.items()


def arith(a: Poly, b, op: str) -> Poly:
    """Polynomial arithmetic by operation name: ``add``, ``mul`` or ``scale``."""
    if op == 'add':
        return a + b
    if op == 'mul':
        return a * b
    if op == 'scale':
        return a.scale(b)
    raise InputError(f'Unknown polynomial operation: {op}', 'operation')


def multinomial(exps: Sequence[int]) -> int:
    result = math.factorial(sum(exps))
    for e in exps:
        result //= math.factorial(e)
    return result


@dataclass(frozen=True)
class SymTensor:
    """Symmetric tensor stored on canonical (sorted) index tuples."""
    order: int
    dim: int
    entries: Dict[Tuple[int, ...], sympy.Expr] = field(default_factory=dict)

    @classmethod
    def from_poly(cls, f: Poly, k: Optional[int]=None) -> 'SymTensor':
        if k is None:
            k = max(f.degree(), 0)
        part = f.homogeneous_part(k)
        entries = {}
        for exps, c in part.terms.items():
            index = tuple((i for i, e in enumerate(exps) for _ in range(e)))
            entries[index] = c / multinomial(exps)
        return cls(k, f.n, entries)

    def __getitem__(self, index: Sequence[int]) -> sympy.Expr:
        if len(index) != self.order:
            raise DimensionError(f'Order-{self.order} tensor indexed with {len(index)} indices')
        return self.entries.get(tuple(sorted(index)), sympy.Integer(0))

    def to_poly(self) -> Poly:
        terms = {}
        for index, v in self.entries.items():
            exps = [0] * self.dim
            for i in index:
                exps[i] += 1
            terms[tuple(exps)] = v * multinomial(exps)
        return Poly(self.dim, terms)


def parse_poly(text: str, n: Optional[int]=None) -> Poly:
    """Parse ``3/2*x1^2*x2 - x3^4`` style text; outcome symbols ``s1..`` are allowed."""
    if text is None or not text.strip():
        raise ParseError('Empty polynomial text')
    local: Dict[str, object] = dict(_ALLOWED_FUNCTIONS)
    max_index = 0
    for name in sorted(set(re.findall('[A-Za-z_][A-Za-z_0-9]*', text))):
        if name in local:
            continue
        match = _X_NAME.match(name)
        if match:
            index = int(match.group(1))
            if index == 0:
                raise ParseError('Mode variables are numbered from x1')
            max_index = max(max_index, index)
            local[name] = x_symbol(index - 1)
            continue
        if _P_NAME.match(name):
            raise ParseError(f'Momentum variable {name} is not allowed in an x-polynomial')
        if _S_NAME.match(name):
            local[name] = outcome_symbol(name)
            continue
        raise ParseError(f'Unknown name {name!r} in polynomial text')
    if n is None:
        n = max_index
    elif n < max_index:
        raise DimensionError(f'Polynomial uses x{max_index} but only {n} modes were declared')
    try:
        expr = parse_expr(text, local_dict=local, transformations=standard_transformations + (convert_xor, rationalize))
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ParseError(f'Cannot parse polynomial {text!r}: {e}') from e
    logger.debug(f'Parsed polynomial {text!r} on {n} modes')
    return Poly.from_expr(expr, n)


def parse_srepr(text: str) -> sympy.Expr:
    """Decode a stored ``srepr`` string.

    Only the constructors ``srepr`` emits for this compiler's scalars are
    accepted; attribute access, subscripts and any other name are rejected
    before anything is evaluated.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError(f'Stored expression must be a non-empty string, got {text!r}')
    try:
        tree = ast.parse(text, mode='eval')
    except SyntaxError as e:
        raise ParseError(f'Cannot parse stored expression {text!r}: {e}') from e
    for node in ast.walk(tree):
        if not isinstance(node, _SREPR_NODES):
            raise ParseError(f'Disallowed syntax {type(node).__name__} in stored expression {text!r}')
        if isinstance(node, ast.Name) and node.id not in _SREPR_NAMES:
            raise ParseError(f'Unknown name {node.id!r} in stored expression')
        if isinstance(node, ast.Call) and not isinstance(node.func, ast.Name):
            raise ParseError(f'Disallowed call in stored expression {text!r}')
        if isinstance(node, ast.Constant) and not isinstance(node.value, (bool, int, str)):
            raise ParseError(f'Disallowed literal {node.value!r} in stored expression')
    global_dict: Dict[str, object] = {'__builtins__': {}}
    global_dict.update(_SREPR_NAMES)
    try:
        return parse_expr(text, local_dict={}, global_dict=global_dict, transformations=())
    except (SyntaxError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ParseError(f'Cannot decode stored expression {text!r}: {e}') from e
