"""
Bodies of the command-line subcommands.

Each command takes the parsed argparse namespace, writes its human summary
to standard output and returns a process exit code. Library errors are left
to propagate; ``main`` maps them to exit codes.
"""

import json
import pathlib
from typing import Any, Dict, List, Optional, Tuple

from core.circuit import compile_gate, verify_circuit
from core.circuit_file import CircuitFile, report_path
from core.constants import Config
from core.decompose import WaringDecomp, chow_heuristic, rank_functions
from core.decorators import cli_command
from core.errors import CircuitFileError, CompilerError, DecompositionError, InputError
from core.models import CircuitIR, GateSpec
from core.polyring import parse_poly
from core.strategies import count_table, gate_preset, plan_adaptive, plan_gate, waring_for
from core.validators import InputValidator
from core.weyl import decompose_hamiltonian, expand, naive_nesting_depth, nesting_depth, parse_weyl, trotter_sequence
from ui.debug_logger import DebugManager
from ui.text_render import format_count_table, format_plan_summary, format_report, format_table, render_text

slog = DebugManager.create_logger(__name__)

EXAMPLE_PRESETS = (('cubic-qnd', None), ('toffoli', None), ('cphase', 4), ('cnz', 4), ('small-example', None))


def _check(result):
    ok, error = result
    if not ok:
        raise InputError(error, 'validation')


def _flags(args) -> Dict[str, Any]:
    keys = ('gate', 'poly', 'N', 'strategy', 'sign_mode', 'seed', 'trials', 'tolerance')
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _load_waring(path: Optional[str]) -> Optional[WaringDecomp]:
    if not path:
        return None
    try:
        data = json.loads(pathlib.Path(path).read_text(encoding='utf-8'))
    except Exception as e:
        raise CircuitFileError(f'Failed to read Waring decomposition file:\n{e}', 'read', {'path': path}) from e
    return WaringDecomp.from_dict(data)


def gate_from_args(args) -> GateSpec:
    _check(InputValidator.validate_gate(args.gate, args.N, args.poly))
    return gate_preset(args.gate, args.N, args.poly)


def _default_out(args) -> pathlib.Path:
    suffix = f'-N{args.N}' if args.N else ''
    return pathlib.Path(f'{args.gate}{suffix}-s{args.strategy}{Config.CIRCUIT_SUFFIX}')


def _write_report(circuit_file: pathlib.Path, command: str, args, report) -> pathlib.Path:
    path = report_path(circuit_file)
    CircuitFile.save_report(path, {'command': command, 'circuit': circuit_file.name, 'flags': _flags(args), 'report': report.to_dict()})
    return path


@cli_command('Compile failed')
def compile_command(args) -> int:
    _check(InputValidator.validate_strategy(args.strategy))
    _check(InputValidator.validate_sign_mode(args.sign_mode))
    _check(InputValidator.validate_sampling(args.trials, args.tolerance))
    g = gate_from_args(args)
    ir = compile_gate(g, args.strategy, args.sign_mode, _load_waring(args.waring), args.trials, args.seed, args.tolerance)
    out = pathlib.Path(args.out) if args.out else _default_out(args)
    CircuitFile.save_circuit(out, ir)
    report = verify_circuit(ir, args.trials, args.seed, args.tolerance)
    written = _write_report(out, 'compile', args, report)
    print(format_plan_summary(ir), end='')
    if args.render:
        print(render_text(ir), end='')
    print(format_report(report), end='')
    print(f'Circuit written to {out}; report written to {written}')
    return Config.EXIT_OK if report.passed else Config.EXIT_PLAN_ERROR


@cli_command('Verify failed')
def verify_command(args) -> int:
    _check(InputValidator.validate_sampling(args.trials, args.tolerance))
    path = pathlib.Path(args.circuit)
    ir = CircuitFile.load_circuit(path)
    report = verify_circuit(ir, args.trials, args.seed, args.tolerance)
    written = _write_report(path, 'verify', args, report)
    if args.render:
        print(render_text(ir), end='')
    print(format_report(report), end='')
    print(f'Report written to {written}')
    return Config.EXIT_OK if report.passed else Config.EXIT_PLAN_ERROR


def _count_row(g: GateSpec, strategy: str) -> List[Any]:
    try:
        plan = plan_gate(g, strategy)
    except DecompositionError as e:
        slog.debug(f'Strategy {strategy} not applicable to {g.name}: {e}')
        return [f'strategy {strategy}', None, None, None]
    return [f'strategy {strategy}', plan.non_gaussian_count, plan.gaussian_count, plan.formula_count]


@cli_command('Count failed')
def count_command(args) -> int:
    g = gate_from_args(args)
    if args.strategy:
        rows = [_count_row(g, args.strategy)]
    else:
        rows = [_count_row(g, key) for key in Config.STRATEGIES]
        adaptive = plan_adaptive(g)
        rows.append(['adaptive (reference)', adaptive.non_gaussian_count, adaptive.gaussian_count, adaptive.formula_count])
    print(f'Gate {g.name}: V = {g.V}')
    print(format_table(['plan', 'non-Gaussian', 'Gaussian', 'closed form'], rows), end='')
    return Config.EXIT_OK


@cli_command('Table failed')
def table_command(args) -> int:
    _check(InputValidator.validate_mode_count(args.n_min, 3))
    if args.n_max < args.n_min:
        raise InputError(f'Invalid N range {args.n_min}..{args.n_max}', 'n_range')
    table = count_table(range(args.n_min, args.n_max + 1), args.construct_upto)
    print(f'C^N Z mode counts, N = {args.n_min}..{args.n_max} (✓/✗: stored value equals the computed one)')
    print(format_count_table(table), end='')
    return Config.EXIT_OK


@cli_command('Decompose failed')
def decompose_command(args) -> int:
    if args.gate:
        g = gate_from_args(args)
    else:
        if not args.poly:
            raise InputError('decompose needs --gate or --poly', 'gate')
        V = parse_poly(args.poly)
        g = GateSpec('custom', max(V.n, 1), V.pad(max(V.n, 1)), {'poly': args.poly})
    if g.V.degree() < 1:
        print(f"Nothing to decompose: V = {g.V}")
        return Config.EXIT_OK
    top = g.V.homogeneous_part(g.V.degree())
    d = chow_heuristic(top)
    ranks = rank_functions(d)
    print(f'Top-order part: {top}')
    print(f"Chow decomposition ({ranks['crank']} terms, b-rank {ranks['brank']}):")
    print(f'  {d}')
    print(f'  expands exactly: {d.verify()}')
    try:
        w = waring_for(g)
    except DecompositionError as e:
        print(f'Waring decomposition: none known ({e})')
    else:
        print(f'Waring decomposition ({w.wrank} terms):')
        print(f'  {w}')
        print(f'  expands exactly: {w.verify()}')
    return Config.EXIT_OK


@cli_command('Hamiltonian decomposition failed')
def decompose_hamiltonian_command(args) -> int:
    H = parse_weyl(args.hamiltonian)
    tree = decompose_hamiltonian(H)
    print(f'H = {H}')
    print(f'  = {tree}')
    print(f'expands exactly: {expand(tree) == H}')
    print(f'nesting depth: {nesting_depth(tree)} (repeated cubic commutators: {naive_nesting_depth(H)})')
    if args.trotter_steps:
        tokens = trotter_sequence(H, args.time, args.trotter_steps)
        print(f'Trotter sequence ({len(tokens)} gates):')
        for token in tokens:
            print(f'  {token}')
    return Config.EXIT_OK


def _example_row(name: str, N: Optional[int], strategy: str, args, reports: List[str]) -> Tuple[Optional[int], bool]:
    g = gate_preset(name, N)
    try:
        ir: CircuitIR = compile_gate(g, strategy, 'assume-positive', None, args.trials, args.seed, args.tolerance)
    except DecompositionError:
        return (None, True)
    if not args.verify:
        return (ir.non_gaussian_count, True)
    report = verify_circuit(ir, args.trials, args.seed, args.tolerance)
    label = name if N is None else f'{name}({N})'
    reports.append(f"{label} strategy {strategy}: {'PASSED' if report.passed else 'FAILED'}")
    return (ir.non_gaussian_count, report.passed)


@cli_command('Examples failed')
def examples_command(args) -> int:
    failures = 0
    rows = []
    reports: List[str] = []
    for name, N in EXAMPLE_PRESETS:
        counts = []
        for key in Config.STRATEGIES:
            try:
                count, passed = _example_row(name, N, key, args, reports)
            except CompilerError as e:
                slog.warning(f'{name} strategy {key}: {e}')
                count, passed = (None, False)
            counts.append(count)
            failures += 0 if passed else 1
        rows.append([name if N is None else f'{name}(N={N})', gate_preset(name, N).n] + counts)
    print(format_table(['gate', 'squeezed', 'strategy 1', 'strategy 2', 'strategy 3'], rows), end='')
    for line in reports:
        print(line)
    return Config.EXIT_OK if failures == 0 else Config.EXIT_PLAN_ERROR


COMMANDS = {
    'compile': compile_command,
    'verify': verify_command,
    'count': count_command,
    'table': table_command,
    'decompose': decompose_command,
    'decompose-hamiltonian': decompose_hamiltonian_command,
    'examples': examples_command,
}
