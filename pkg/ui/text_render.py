"""
Plain-text views of circuits, plans, count tables and reports.

Diagrams use box-drawing characters and are laid out left to right in
execution order: half beamsplitter wrapper, coupling blocks K1..Km, final
adaptive homodyne stage.
"""

from typing import Any, Dict, List, Sequence

from core.models import CircuitIR, VerificationReport

CELL = 9
WIRE = '─'
ANCILLA_WIRE = '═'


def _box(label: str) -> str:
    inner = f'┤{label}├'
    pad = CELL - len(inner)
    left = pad // 2
    return WIRE * left + inner + WIRE * (pad - left)


def _wire(char: str=WIRE) -> str:
    return char * CELL


def _blank() -> str:
    return ' ' * CELL


def _columns(ir: CircuitIR) -> List[str]:
    return ['HBS'] + [f'K{b.step}' for b in ir.blocks] + ['H']


def render_text(ir: CircuitIR) -> str:
    columns = _columns(ir)
    labels: List[str] = []
    rows: List[List[str]] = []
    tails: List[str] = []
    for i in range(ir.n):
        labels.append(f'x{i + 1}')
        rows.append([_box(c) for c in columns])
        tails.append(f' m{i + 1}')
    for spec in ir.gaussian:
        labels.append(f'sq{spec.index + 1} |x=0>')
        rows.append([_box('HBS')] + [_wire() for _ in columns[1:]])
        tails.append(f' out{spec.index + 1}')
    for spec in ir.ancillas:
        position = 1 + [b.step for b in ir.blocks].index(spec.step)
        for mode in range(spec.modes):
            tag = '' if spec.variant == 'primary' else '-'
            labels.append(f'a{spec.step}.{mode + 1}{tag}')
            cells = [_blank() for _ in range(position)]
            cells.append(_box(columns[position]).replace(WIRE, ANCILLA_WIRE))
            cells.extend((_blank() for _ in columns[position + 1:]))
            rows.append(cells)
            tails.append(f' s{spec.step}_{mode + 1}' if spec.variant == 'primary' else ' (alternate)')
    width = max((len(label) for label in labels), default=0)
    title = f'{ir.gate.name} | strategy {ir.strategy} | {ir.sign_mode} | {ir.non_gaussian_count} non-Gaussian + {ir.gaussian_count} squeezed'
    lines = ['┌' + '─' * (len(title) + 2) + '┐', f'│ {title} │', '└' + '─' * (len(title) + 2) + '┘']
    for label, cells, tail in zip(labels, rows, tails):
        lines.append(f'{label:<{width}} ' + ''.join(cells).rstrip() + tail)
    lines.append('')
    lines.extend(_legend(ir))
    return '\n'.join(lines) + '\n'


def _legend(ir: CircuitIR) -> List[str]:
    lines = ['HBS: mode-wise half beamsplitters with the squeezed wrapper modes']
    for block in ir.blocks:
        deps = ', '.join(block.depends_on) or 'none'
        kind = 'mode-wise half beamsplitters' if block.mode_wise else f'{block.K.rows}x{block.K.cols} generalized coupling'
        lines.append(f'K{block.step}: {kind}; feedforward from {deps}')
    for spec in ir.ancillas:
        lines.append(f'ancilla {spec.step} ({spec.modes} modes, {spec.kind}, {spec.variant}): {spec.description}')
    stage = ir.final_stage
    lines.append(f'H: {stage.kind}, then {stage.displacement_rule}; {stage.note} (factor {stage.squeezing_factor})')
    return lines


def format_plan_summary(ir: CircuitIR) -> str:
    lines = [f'Gate {ir.gate.name}: V = {ir.gate.V}', f'Strategy {ir.strategy}, sign mode {ir.sign_mode}', f'Non-Gaussian ancilla modes: {ir.non_gaussian_count}', f'Gaussian (squeezed) modes: {ir.gaussian_count}']
    formula = ir.metadata.get('formula_count')
    if formula is not None:
        lines.append(f'Closed-form count: {formula}')
    for spec in ir.ancillas:
        lines.append(f'  step {spec.step} [{spec.modes} modes, {spec.variant}]: f = {spec.nullifier}')
    if 'sign_reference_count' in ir.metadata:
        lines.append(f"Single-mode sign reference count: {ir.metadata['sign_reference_count']}")
    return '\n'.join(lines) + '\n'


def _cell(value: Any) -> str:
    return '-' if value is None else str(value)


def format_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [[str(h) for h in headers]] + [[_cell(v) for v in row] for row in rows]
    widths = [max((len(r[i]) for r in cells)) for i in range(len(headers))]
    sep = '─┼─'.join(('─' * w for w in widths))
    out = [' │ '.join((c.ljust(w) for c, w in zip(cells[0], widths))), sep]
    for row in cells[1:]:
        out.append(' │ '.join((c.rjust(w) for c, w in zip(row, widths))))
    return '\n'.join(out) + '\n'


def format_count_table(table: Dict[str, Any]) -> str:
    headers = ['row'] + [f'N={n}' for n in table['N']]
    rows = []
    for key in sorted(table['computed']):
        rows.append([f'strategy {key}'] + table['computed'][key])
        stored = table['stored'].get(key, [])
        marks = table['matches'][key]['same_label']
        rows.append([f'  stored {key}'] + [f"{v}{'✓' if ok else '✗'}" if v is not None else None for v, ok in zip(stored, marks)])
        if any((v is not None for v in table['constructed'][key])):
            rows.append([f'  built {key}'] + table['constructed'][key])
    text = format_table(headers, rows)
    notes = []
    for key in sorted(table['matches']):
        label = table['matches'][key]['matches_stored_row']
        if label is not None and label != key:
            notes.append(f'strategy {key} counts match stored row {label}')
    return text + ''.join((n + '\n' for n in notes))


def format_report(report: VerificationReport) -> str:
    lines = [f'Verification: seed={report.seed} trials={report.trials} tolerance={report.tolerance:g}']
    for check in report.checks:
        mark = '✓' if check.passed else '✗'
        residual = '' if check.residual is None else f' (residual {check.residual:.3e})'
        lines.append(f'  {mark} {check.name}{residual}')
        if not check.passed and 'error' in check.details:
            lines.append(f"      {check.details['error']}")
    for key, value in sorted(report.flags.items()):
        if key not in ('gate', 'strategy', 'sign_mode'):
            lines.append(f'  note: {key}: {value}')
    lines.append('PASSED' if report.passed else f'FAILED ({len(report.failed_checks)} of {len(report.checks)} checks)')
    return '\n'.join(lines) + '\n'
