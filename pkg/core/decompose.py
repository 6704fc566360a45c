"""
Chow and Waring decompositions of homogeneous polynomials.

A Chow term is ``coefficient * prod_j (form_j . x)^(exp_j)``; a Waring term
is ``coefficient * (form . x)^N``. Forms are tuples of sympy expressions and
may depend on measurement outcomes; term coefficients never do.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from core.constants import Config
from core.errors import DecompositionError, InputError
from core.polyring import Exps, Poly, parse_srepr

logger = logging.getLogger(__name__)

Form = Tuple[sympy.Expr, ...]


@dataclass(frozen=True)
class Partition:
    parts: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.parts)

    def in_P(self, n: int, k: int) -> bool:
        return len(self.parts) == k and self.total == n and all((p >= 1 for p in self.parts))

    def in_Q(self, n: int, l: int) -> bool:
        return self.in_P(n, 2 * l + 1) and all((self.parts[2 * m - 1] == 1 for m in range(1, l + 1)))

    def ranges(self, offset: int=0) -> List[List[int]]:
        """Zero-based variable index ranges R_j covered by each part."""
        out = []
        start = offset
        for p in self.parts:
            out.append(list(range(start, start + p)))
            start += p
        return out

    def argmax(self) -> int:
        best = max(self.parts)
        return self.parts.index(best)


def _compositions(total: int, count: int) -> Iterable[Tuple[int, ...]]:
    if count == 0:
        if total == 0:
            yield ()
        return
    if count == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - count + 2):
        for rest in _compositions(total - first, count - 1):
            yield (first,) + rest


def q_partitions(n: int, l: int) -> List[Partition]:
    """Q(n, l): compositions of n into 2l+1 parts whose even-position parts are 1."""
    if l < 0 or n < 2 * l + 1:
        return []
    out = []
    for odd in _compositions(n - l, l + 1):
        parts = []
        for i, p in enumerate(odd):
            if i:
                parts.append(1)
            parts.append(p)
        out.append(Partition(tuple(parts)))
    return out


def unit_form(n: int, i: int) -> Form:
    return tuple((sympy.Integer(1) if j == i else sympy.Integer(0) for j in range(n)))


def form_poly(form: Form) -> Poly:
    return Poly.linear_form(form)


def form_text(form: Form) -> str:
    text = str(form_poly(form))
    return text if ' ' not in text else f'({text})'


def _outcome_free(expr) -> bool:
    return not sympy.sympify(expr).free_symbols


@dataclass
class ChowTerm:
    coefficient: sympy.Expr
    factors: List[Tuple[Form, int]]

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def order(self) -> int:
        return sum((e for _, e in self.factors))

    def exponents(self) -> Tuple[int, ...]:
        return tuple((e for _, e in self.factors))

    def to_poly(self) -> Poly:
        n = len(self.factors[0][0])
        result = Poly.constant(n, self.coefficient)
        for form, e in self.factors:
            result = result * form_poly(form) ** e
        return result

    def __str__(self):
        body = ''.join((form_text(f) + (f'^{e}' if e > 1 else '') for f, e in self.factors))
        if self.coefficient == 1:
            return body
        return f'{sympy.sstr(self.coefficient)}*{body}'


@dataclass
class ChowDecomp:
    n: int
    terms: List[ChowTerm] = field(default_factory=list)
    target: Optional[Poly] = None

    @property
    def crank(self) -> int:
        return len(self.terms)

    @property
    def brank(self) -> int:
        return sum((t.n_factors for t in self.terms))

    @property
    def order(self) -> int:
        return self.terms[0].order if self.terms else 0

    def expand(self) -> Poly:
        result = Poly.zero(self.n)
        for term in self.terms:
            result = result + term.to_poly()
        return result

    def verify(self, trials: int=Config.DEFAULT_TRIALS, seed: int=Config.DEFAULT_SEED) -> bool:
        if self.target is None:
            return True
        return self.expand().equals(self.target, trials, seed)

    def __str__(self):
        if not self.terms:
            return '0'
        return ' + '.join((str(t) for t in self.terms)).replace('+ -', '- ')


@dataclass
class WaringDecomp:
    n: int
    order: int
    terms: List[Tuple[sympy.Expr, Form]] = field(default_factory=list)
    target: Optional[Poly] = None

    @property
    def wrank(self) -> int:
        return len(self.terms)

    def expand(self) -> Poly:
        result = Poly.zero(self.n)
        for c, form in self.terms:
            result = result + (form_poly(form) ** self.order).scale(c)
        return result

    def verify(self) -> bool:
        if self.target is None:
            return True
        return self.expand().equals(self.target)

    def matrix(self) -> sympy.Matrix:
        return sympy.Matrix([list(form) for _, form in self.terms])

    def to_dict(self) -> dict:
        return {'n': self.n, 'order': self.order, 'terms': [{'coefficient': sympy.srepr(c), 'form': [sympy.srepr(v) for v in form]} for c, form in self.terms]}

    @classmethod
    def from_dict(cls, data: dict, target: Optional[Poly]=None) -> 'WaringDecomp':
        try:
            terms = [(parse_srepr(t['coefficient']), tuple((parse_srepr(v) for v in t['form']))) for t in data['terms']]
            return cls(int(data['n']), int(data['order']), terms, target)
        except (KeyError, TypeError, ValueError, sympy.SympifyError) as e:
            raise InputError(f'Malformed Waring decomposition: {e}', 'waring_file') from e

    def __str__(self):
        parts = []
        for c, form in self.terms:
            parts.append(f'{sympy.sstr(c)}*{form_text(form)}^{self.order}')
        return ' + '.join(parts).replace('+ -', '- ')


def _normalized(coefficient, form: Form) -> Tuple[sympy.Expr, Form]:
    """Pull the leading coefficient out of an outcome-free form."""
    if not all((_outcome_free(v) for v in form)):
        return (coefficient, form)
    lead = next((v for v in form if v != 0), None)
    if lead is None or lead == 1:
        return (coefficient, form)
    return (coefficient * lead, tuple((sympy.radsimp(v / lead) for v in form)))


def _checked(d, construction: str):
    if not d.verify():
        raise DecompositionError(f'{construction} decomposition does not expand to its target', {'construction': construction, 'decomposition': str(d)})
    return d


def _elementary_target(n: int, k: int) -> Poly:
    terms = {}
    for subset in itertools.combinations(range(n), k):
        terms[tuple((1 if i in subset else 0 for i in range(n)))] = 1
    return Poly(n, terms)


def _partition_families(n: int, k: int) -> List[Tuple[Partition, Optional[int]]]:
    """(partition, trailing variable) pairs for the elementary construction."""
    if k % 2 == 1:
        l = (k - 1) // 2
        return [(p, None) for p in q_partitions(n, l)]
    l = k // 2
    families = []
    for m in range(k, n + 1):
        for p in q_partitions(m - 1, l - 1):
            families.append((p, m - 1))
    return families


def chow_elementary(n: int, k: int) -> ChowDecomp:
    """Chow decomposition of the elementary symmetric polynomial e_k(x1..xn)."""
    if not 1 <= k <= n:
        raise InputError(f'Elementary polynomial needs 1 <= k <= n, got n={n}, k={k}', 'elementary')
    terms = []
    for partition, trailing in _partition_families(n, k):
        factors = []
        for R in partition.ranges():
            factors.append((tuple((sympy.Integer(1) if i in R else sympy.Integer(0) for i in range(n))), 1))
        if trailing is not None:
            factors.append((unit_form(n, trailing), 1))
        terms.append(ChowTerm(sympy.Integer(1), factors))
    return _checked(ChowDecomp(n, terms, _elementary_target(n, k)), 'elementary Chow')


def _subset_key(indices: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(indices))


def chow_elementary_weighted(n: int, k: int, a: Dict[Tuple[int, ...], object]) -> ChowDecomp:
    """Chow decomposition of sum_S a_S prod_{j in S} x_j.

    Every range except the largest one (ties to the smallest index) is
    expanded, so each term has exactly one non-monomial factor. ``a`` is keyed
    by sorted zero-based index tuples; forms whose coefficients all vanish are
    dropped.
    """
    if not 1 <= k <= n:
        raise InputError(f'Elementary polynomial needs 1 <= k <= n, got n={n}, k={k}', 'elementary')
    table = {_subset_key(S): sympy.sympify(v) for S, v in a.items()}
    target_terms = {}
    for subset in itertools.combinations(range(n), k):
        if subset not in table:
            raise InputError(f'Missing coefficient for subset {tuple((i + 1 for i in subset))}', 'missing_coefficient')
        target_terms[tuple((1 if i in subset else 0 for i in range(n)))] = table[subset]
    terms = []
    for partition, trailing in _partition_families(n, k):
        ranges = partition.ranges()
        pivot = partition.argmax()
        others = [R for j, R in enumerate(ranges) if j != pivot]
        for choice in itertools.product(*others):
            fixed = list(choice) + ([trailing] if trailing is not None else [])
            form = [sympy.Integer(0)] * n
            for m in ranges[pivot]:
                form[m] = table[_subset_key(fixed + [m])]
            if all((v == 0 for v in form)):
                continue
            coefficient, form_t = _normalized(sympy.Integer(1), tuple(form))
            factors = [(unit_form(n, i), 1) for i in sorted(fixed)]
            factors.insert(0, (form_t, 1))
            terms.append(ChowTerm(coefficient, factors))
    return _checked(ChowDecomp(n, terms, Poly(n, target_terms)), 'weighted Chow')


def _is_squarefree(f: Poly) -> bool:
    return all((max(e) <= 1 for e in f.terms))


def _divides(mu: Exps, exps: Exps) -> bool:
    return all((a <= b for a, b in zip(mu, exps)))


def _merge_factors(coefficient, mu: Exps, form: Form) -> Tuple[sympy.Expr, List[Tuple[Form, int]]]:
    n = len(mu)
    support = [i for i, v in enumerate(form) if v != 0]
    exps = list(mu)
    factors: List[Tuple[Form, int]] = []
    if len(support) == 1 and _outcome_free(form[support[0]]):
        v = support[0]
        coefficient = coefficient * form[v]
        exps[v] += 1
    else:
        coefficient, normalized = _normalized(coefficient, form)
        factors.append((normalized, 1))
    monomial_factors = [(unit_form(n, i), e) for i, e in enumerate(exps) if e]
    return (coefficient, monomial_factors + factors)


def chow_heuristic(f: Poly) -> ChowDecomp:
    """Chow decomposition of a homogeneous polynomial.

    Squarefree inputs use the weighted elementary construction. Other inputs
    are covered greedily by monomial * linear-form terms, choosing at each
    step the degree k-1 monomial that divides the most remaining monomials.
    """
    if f.is_zero():
        return ChowDecomp(f.n, [], f)
    if not f.is_homogeneous():
        raise DecompositionError('Chow decomposition needs a homogeneous polynomial', {'polynomial': str(f)})
    k = f.degree()
    if k == 0:
        raise DecompositionError('Cannot Chow-decompose a constant')
    if _is_squarefree(f) and k >= 1:
        table = {}
        for subset in itertools.combinations(range(f.n), k):
            table[subset] = f.coefficient(tuple((1 if i in subset else 0 for i in range(f.n))))
        values = set(table.values())
        if len(values) == 1 and _outcome_free(next(iter(values))):
            d = chow_elementary(f.n, k)
            c = next(iter(values))
            for term in d.terms:
                term.coefficient = c
            d.target = f
            return _checked(d, 'uniform Chow')
        d = chow_elementary_weighted(f.n, k, table)
        d.target = f
        return d
    remaining = dict(f.terms)
    terms = []
    while remaining:
        coverage: Dict[Exps, int] = {}
        for exps in remaining:
            for i, e in enumerate(exps):
                if e:
                    mu = tuple((v - 1 if j == i else v for j, v in enumerate(exps)))
                    coverage[mu] = coverage.get(mu, 0) + 1
        # most coverage, then fewest variables, then grlex-largest
        best = min(coverage, key=lambda mu: (-coverage[mu], sum((1 for v in mu if v)), tuple((-v for v in mu))))
        form = [sympy.Integer(0)] * f.n
        for exps in list(remaining):
            if _divides(best, exps):
                var = next((i for i in range(f.n) if exps[i] - best[i] == 1))
                form[var] = remaining.pop(exps)
        coefficient, factors = _merge_factors(sympy.Integer(1), best, tuple(form))
        terms.append(ChowTerm(coefficient, factors))
    logger.debug(f'Greedy Chow decomposition of order {k}: {len(terms)} terms')
    return _checked(ChowDecomp(f.n, terms, f), 'greedy Chow')


def closed_form_crank(n: int, k: int) -> int:
    """Term count of the elementary construction for e_k on n variables."""
    if k % 2 == 1:
        l = (k - 1) // 2
        return math.comb(n - l - 1, l)
    l = k // 2
    return math.comb(n - l, l)


def weighted_term_count(n: int, k: int) -> int:
    """Term count of the weighted construction with all coefficients nonzero."""
    count = 0
    for partition, _ in _partition_families(n, k):
        ranges = partition.ranges()
        pivot = partition.argmax()
        size = 1
        for j, R in enumerate(ranges):
            if j != pivot:
                size *= len(R)
        count += size
    return count


def rank_functions(d) -> Dict[str, int]:
    """crank/brank of a decomposition, or closed-form values for (n, k)."""
    if isinstance(d, ChowDecomp):
        result = {'crank': d.crank, 'brank': d.brank, 'order_times_crank': d.order * d.crank}
        return result
    n, k = d
    c = closed_form_crank(n, k)
    return {'crank': c, 'brank': k * c, 'closed_form': c}


def _signed_sum_terms(n: int, variables: Sequence[int]) -> List[Tuple[sympy.Expr, Form]]:
    count = len(variables)
    base = sympy.Rational(1, 2 ** (count - 1) * math.factorial(count))
    terms = []
    for signs in itertools.product((1, -1), repeat=count - 1):
        eps = (1,) + signs
        sign = math.prod(eps)
        form = [sympy.Integer(0)] * n
        for v, e in zip(variables, eps):
            form[v] = sympy.Integer(e)
        if sign < 0 and count % 2 == 1:
            form = [-v for v in form]
            sign = 1
        terms.append((base * sign, tuple(form)))
    return terms


def _node_terms(n: int, a: int, b: int, N: int) -> List[Tuple[sympy.Expr, Form]]:
    nodes = [sympy.Rational(2 * j - (N - 1), 2) for j in range(N)]
    terms = []
    for j, t in enumerate(nodes):
        denominator = N * math.prod((t - s for i, s in enumerate(nodes) if i != j))
        form = [sympy.Integer(0)] * n
        form[a] = sympy.Integer(1)
        form[b] = t
        terms.append((sympy.Integer(1) / denominator, tuple(form)))
    return terms


def waring_monomial(exps: Sequence[int], coefficient=1) -> WaringDecomp:
    """Real Waring decomposition of coefficient * x^exps.

    Supported patterns: a single power, a squarefree monomial and
    x_a * x_b^(N-1).
    """
    exps = tuple(exps)
    n = len(exps)
    N = sum(exps)
    coefficient = sympy.sympify(coefficient)
    support = [i for i, e in enumerate(exps) if e]
    target = Poly(n, {exps: coefficient})
    if len(support) == 1:
        terms = [(sympy.Integer(1), unit_form(n, support[0]))]
    elif all((exps[i] == 1 for i in support)):
        terms = _signed_sum_terms(n, support)
    elif len(support) == 2 and sorted((exps[i] for i in support))[0] == 1:
        a, b = support if exps[support[0]] == 1 else (support[1], support[0])
        terms = _node_terms(n, a, b, N)
    else:
        raise DecompositionError(f'No Waring decomposition known for monomial {exps}', {'exponents': list(exps)})
    terms = [(c * coefficient, form) for c, form in terms]
    return _checked(WaringDecomp(n, N, terms, target), 'Waring')


def _small_example_waring() -> WaringDecomp:
    beta = 1 / sympy.sqrt(6)
    half = sympy.Rational(1, 2)
    terms = [(half, (sympy.Integer(1), beta)), (half, (sympy.Integer(1), -beta)), (sympy.Rational(-1, 36), (sympy.Integer(0), sympy.Integer(1)))]
    target = Poly(2, {(2, 2): 1, (4, 0): 1})
    return _checked(WaringDecomp(2, 4, terms, target), 'Waring')


def waring_known(gate_id: str, N: Optional[int]=None, exps: Optional[Sequence[int]]=None) -> WaringDecomp:
    if gate_id == 'cubic-qnd':
        d = waring_monomial((1, 2))
    elif gate_id == 'toffoli':
        d = waring_monomial((1, 1, 1))
    elif gate_id == 'cphase':
        if N is None or N < 2:
            raise InputError('cphase needs N >= 2', 'gate')
        d = waring_monomial((1, N - 1))
    elif gate_id == 'cnz':
        if N is None or N < 2:
            raise InputError('cnz needs N >= 2', 'gate')
        d = waring_monomial((1,) * N)
    elif gate_id == 'small-example':
        d = _small_example_waring()
    elif gate_id == 'monomial' and exps is not None:
        d = waring_monomial(exps)
    else:
        raise DecompositionError(f'No Waring decomposition known for gate {gate_id!r}')
    return d


def extract_BMD(d: ChowDecomp) -> Tuple[Poly, sympy.Matrix]:
    """Split a Chow decomposition into an outcome-free block polynomial B and
    the stacked form matrix M with B(Mx) equal to the decomposed polynomial."""
    B = Poly.zero(0)
    rows = []
    for term in d.terms:
        if not _outcome_free(term.coefficient):
            raise DecompositionError('Chow term coefficient depends on outcomes', {'term': str(term)})
        block = Poly.monomial(term.exponents(), term.coefficient)
        B = B.direct_sum(block)
        rows.extend((list(form) for form, _ in term.factors))
    M = sympy.Matrix(rows) if rows else sympy.zeros(0, d.n)
    if not B.is_outcome_free():
        raise DecompositionError('Block polynomial depends on outcomes')
    return (B, M)


def term_layout(d: ChowDecomp) -> List[Tuple[int, int]]:
    """(offset, size) of every term's variable block inside B."""
    layout = []
    offset = 0
    for term in d.terms:
        layout.append((offset, term.n_factors))
        offset += term.n_factors
    return layout


def d_scaling(exps: Sequence[int], u: Sequence, reduced_order: int) -> sympy.Matrix:
    """diag(u_l / q) with q = (prod u_l^exps_l)^(1/reduced_order)."""
    if reduced_order < 1:
        raise InputError(f'Reduced order must be positive, got {reduced_order}', 'order')
    u = [sympy.sympify(v) for v in u]
    q = sympy.Mul(*[v ** e for v, e in zip(u, exps)]) ** sympy.Rational(1, reduced_order)
    return sympy.diag(*[v / q for v in u])
