from core.models import CheckResult, VerificationReport
from core.strategies import count_table, gate_preset
from ui.text_render import format_count_table, format_plan_summary, format_report, format_table, render_text


def test_render_toffoli(toffoli_modewise):
    text = render_text(toffoli_modewise)
    lines = text.splitlines()
    assert lines[0].startswith('┌') and lines[2].startswith('└')
    assert 'toffoli | strategy 1 | assume-positive | 3 non-Gaussian + 3 squeezed' in lines[1]
    labels = [line.split(' ')[0] for line in lines[3:12]]
    assert labels == ['x1', 'x2', 'x3', 'sq1', 'sq2', 'sq3', 'a1.1', 'a1.2', 'a1.3']
    assert lines[3].endswith(' m1')
    assert '┤HBS├' in lines[3] and '┤K1├' in lines[3] and '┤H├' in lines[3]
    assert '═┤K1├═' in lines[9]
    assert 'K1: mode-wise half beamsplitters; feedforward from none' in lines


def test_render_marks_negated_ancillas(compile_preset):
    ir = compile_preset(gate_preset('custom', poly='x1^5'), '3', 'duplicate')
    text = render_text(ir)
    assert 'a2.1-' in text
    assert '(alternate)' in text
    assert 'sign-flipped copy' in text


def test_plan_summary(toffoli_modewise):
    summary = format_plan_summary(toffoli_modewise)
    assert 'Gate toffoli: V = x1*x2*x3' in summary
    assert 'Non-Gaussian ancilla modes: 3' in summary
    assert 'Gaussian (squeezed) modes: 3' in summary


def test_format_table():
    assert format_table(['a', 'bb'], [[1, None]]) == 'a │ bb\n──┼───\n1 │  -\n'


def test_count_table_notes_swapped_rows():
    text = format_count_table(count_table())
    assert 'strategy 1 counts match stored row 2' in text
    assert 'strategy 2 counts match stored row 1' in text
    assert '3936✗' in text
    assert '768✓' in text


def test_format_report():
    report = VerificationReport(
        checks=[CheckResult('mode accounting', True, 1e-12), CheckResult('wrapper transform', False, None, {'error': 'boom'})],
        flags={'gate': 'toffoli', 'resolve_error': 'negative radicand'},
    )
    assert format_report(report).splitlines() == [
        'Verification: seed=0 trials=20 tolerance=1e-08',
        '  ✓ mode accounting (residual 1.000e-12)',
        '  ✗ wrapper transform',
        '      boom',
        '  note: resolve_error: negative radicand',
        'FAILED (1 of 2 checks)',
    ]
    assert format_report(VerificationReport()).splitlines()[-1] == 'PASSED'
