from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import sympy

from core.constants import Config
from core.polyring import Poly, parse_srepr


def encode_expr(expr) -> str:
    return sympy.srepr(sympy.sympify(expr))


def decode_expr(text: str) -> sympy.Expr:
    return parse_srepr(text)


def encode_poly(f: Poly) -> Dict[str, Any]:
    return {'n': f.n, 'terms': [[list(exps), encode_expr(c)] for exps, c in f.sorted_terms()]}


def decode_poly(data: Dict[str, Any]) -> Poly:
    return Poly(int(data['n']), {tuple(exps): decode_expr(c) for exps, c in data['terms']})


def encode_matrix(M: sympy.Matrix) -> List[List[str]]:
    return [[encode_expr(v) for v in row] for row in M.tolist()]


def decode_matrix(rows: List[List[str]], cols: Optional[int]=None) -> sympy.Matrix:
    if not rows:
        return sympy.zeros(0, cols or 0)
    return sympy.Matrix([[decode_expr(v) for v in row] for row in rows])


def format_float(value: float) -> str:
    return format(float(value), f'.{Config.FLOAT_DIGITS}g')


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)
    duration_ms: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'passed': self.passed, 'residual': None if self.residual is None else format_float(self.residual), 'details': self.details}


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)
    seed: int = Config.DEFAULT_SEED
    trials: int = Config.DEFAULT_TRIALS
    tolerance: float = Config.DEFAULT_TOLERANCE
    flags: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all((c.passed for c in self.checks))

    @property
    def failed_checks(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, check: CheckResult):
        self.checks.append(check)

    def to_dict(self) -> Dict[str, Any]:
        return {'schema_version': Config.SCHEMA_VERSION, 'seed': self.seed, 'trials': self.trials, 'tolerance': format_float(self.tolerance), 'flags': self.flags, 'passed': self.passed, 'checks': [c.to_dict() for c in self.checks]}


@dataclass
class GateSpec:
    name: str
    n: int
    V: Poly
    params: Dict[str, Any] = field(default_factory=dict)

    @property
    def order(self) -> int:
        return max(self.V.degree(), 0)

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'n': self.n, 'params': self.params, 'polynomial': encode_poly(self.V), 'text': str(self.V)}

    @classmethod
    def from_circuit_dict(cls, data: Dict[str, Any]) -> 'GateSpec':
        return cls(name=data['name'], n=int(data['n']), V=decode_poly(data['polynomial']), params=data.get('params', {}))


@dataclass
class RootRecipe:
    """A fractional power taken while building a coupling recipe."""
    radicand: sympy.Expr
    order: int
    sign_indefinite: bool = False

    @classmethod
    def make(cls, radicand, order: int) -> 'RootRecipe':
        radicand = sympy.sympify(radicand)
        return cls(radicand, order, bool(radicand.free_symbols) and order % 2 == 0)

    def to_dict(self) -> Dict[str, Any]:
        return {'radicand': encode_expr(self.radicand), 'order': self.order, 'sign_indefinite': self.sign_indefinite}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RootRecipe':
        return cls(decode_expr(data['radicand']), int(data['order']), bool(data['sign_indefinite']))


@dataclass
class PlanStep:
    index: int
    f: Poly
    K: sympy.Matrix
    outcomes: List[sympy.Symbol]
    provenance: str
    roots: List[RootRecipe] = field(default_factory=list)
    ancilla_kind: str = 'nullifier'
    signs: List[int] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return self.f.n

    @property
    def sign_indefinite(self) -> bool:
        return any((r.sign_indefinite for r in self.roots))

    @property
    def dependencies(self) -> List[str]:
        return sorted((str(s) for s in self.K.free_symbols))


@dataclass
class Plan:
    strategy: str
    gate: GateSpec
    steps: List[PlanStep] = field(default_factory=list)
    sign_mode: str = 'assume-positive'
    formula_count: Optional[int] = None
    verified: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def dimensions(self) -> List[int]:
        return [s.dimension for s in self.steps]

    def step_modes(self, step: PlanStep) -> int:
        if self.sign_mode == 'duplicate' and step.sign_indefinite:
            return 2 * step.dimension
        return step.dimension

    @property
    def non_gaussian_count(self) -> int:
        return sum((self.step_modes(s) for s in self.steps))

    @property
    def gaussian_count(self) -> int:
        return self.gate.n

    def chain(self):
        from core.coupling import StarChain, StarStep
        return StarChain(self.gate.V, [StarStep(s.f, s.K, list(s.outcomes)) for s in self.steps])

    def summary(self) -> Dict[str, Any]:
        return {'gate': self.gate.name, 'strategy': self.strategy, 'sign_mode': self.sign_mode, 'steps': self.dimensions, 'non_gaussian': self.non_gaussian_count, 'gaussian': self.gaussian_count, 'formula_count': self.formula_count}


@dataclass
class AncillaSpec:
    """An offline ancilla: eigenstate of m(x', p'; f) with eigenvalue 0."""
    index: int
    step: int
    nullifier: Poly
    kind: str = 'nullifier'
    description: str = ''
    variant: str = 'primary'

    @property
    def modes(self) -> int:
        return self.nullifier.n

    def to_dict(self) -> Dict[str, Any]:
        return {'index': self.index, 'step': self.step, 'kind': self.kind, 'variant': self.variant, 'description': self.description, 'nullifier': encode_poly(self.nullifier)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'AncillaSpec':
        return cls(int(data['index']), int(data['step']), decode_poly(data['nullifier']), data['kind'], data.get('description', ''), data.get('variant', 'primary'))


@dataclass
class CouplingBlockSpec:
    """Generalized linear coupling K(s) between the input modes and one ancilla set."""
    step: int
    K: sympy.Matrix
    outcomes: List[sympy.Symbol]
    mode_wise: bool = False
    roots: List[RootRecipe] = field(default_factory=list)

    @property
    def depends_on(self) -> List[str]:
        return sorted((str(s) for s in self.K.free_symbols))

    def to_dict(self) -> Dict[str, Any]:
        return {'step': self.step, 'shape': [self.K.rows, self.K.cols], 'K': encode_matrix(self.K), 'outcomes': [encode_expr(s) for s in self.outcomes], 'depends_on': self.depends_on, 'mode_wise': self.mode_wise, 'roots': [r.to_dict() for r in self.roots]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CouplingBlockSpec':
        rows, cols = data['shape']
        K = decode_matrix(data['K'], cols)
        return cls(int(data['step']), K, [decode_expr(s) for s in data['outcomes']], bool(data.get('mode_wise', False)), [RootRecipe.from_dict(r) for r in data.get('roots', [])])


@dataclass
class FinalStage:
    """Adaptive homodyne stage measuring p + C(s) x on the input side."""
    kind: str = 'symmetric-homodyne'
    displacement_rule: str = 'D_p(m): add the measured m to p of the output modes'
    squeezing_factor: str = 'sqrt(2)'
    note: str = 'implements the gate up to constant squeezing S'

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind, 'displacement_rule': self.displacement_rule, 'squeezing_factor': self.squeezing_factor, 'note': self.note}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FinalStage':
        return cls(data['kind'], data['displacement_rule'], data['squeezing_factor'], data['note'])


@dataclass
class CircuitIR:
    gate: GateSpec
    strategy: str
    sign_mode: str = 'assume-positive'
    gaussian: List[AncillaSpec] = field(default_factory=list)
    ancillas: List[AncillaSpec] = field(default_factory=list)
    blocks: List[CouplingBlockSpec] = field(default_factory=list)
    final_stage: FinalStage = field(default_factory=FinalStage)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.gate.n

    @property
    def non_gaussian_count(self) -> int:
        return sum((a.modes for a in self.ancillas))

    @property
    def gaussian_count(self) -> int:
        return len(self.gaussian)

    def primary_ancilla(self, step: int) -> AncillaSpec:
        return next((a for a in self.ancillas if a.step == step and a.variant == 'primary'))

    def chain(self):
        from core.coupling import StarChain, StarStep
        return StarChain(self.gate.V, [StarStep(self.primary_ancilla(b.step).nullifier, b.K, list(b.outcomes)) for b in self.blocks])

    def feedforward_dag(self) -> Dict[int, List[int]]:
        """Block step -> earlier steps whose outcomes it reads."""
        owner = {str(sym): b.step for b in self.blocks for sym in b.outcomes}
        return {b.step: sorted({owner[name] for name in b.depends_on if name in owner}) for b in self.blocks}
