import logging

import pytest

from core.constants import Config
from ui.debug_logger import CompilerDebugger, DebugContext, DebugLevel, DebugManager, DebugResponse, StructuredLogger


@pytest.fixture
def restore_debug_level():
    yield
    DebugManager.set_debug_level(DebugLevel.NORMAL)


def test_context_nesting_and_timing():
    slog = StructuredLogger('tests.context')
    with slog.context('Outer', gate='toffoli') as outer:
        with slog.context('Inner') as inner:
            assert inner.depth == 1
            assert inner.parent is outer
            assert inner.get_formatted_header() == '  ▶ tests.context::Inner'
    assert slog.context_stack == []
    assert outer.metadata['gate'] == 'toffoli'
    assert outer.metadata['elapsed_ms'] >= inner.metadata['elapsed_ms']


def test_context_is_popped_on_error():
    slog = StructuredLogger('tests.context')
    with pytest.raises(ValueError):
        with slog.context('Failing'):
            raise ValueError('boom')
    assert slog.context_stack == []


def test_debug_response_formatting():
    ctx = DebugContext('Verify', 'tests', depth=1)
    response = DebugResponse('degree reduction', True, 'residual 1.000e-12', duration_ms=2.5, context=ctx)
    assert response.to_formatted_string() == '  ✓ degree reduction (2.5ms) - residual 1.000e-12'
    assert DebugResponse('wrapper transform', False, '').to_formatted_string() == '✗ wrapper transform'
    assert response.to_dict()['success'] is True


def test_responses_are_buffered_and_logged(caplog):
    slog = StructuredLogger('tests.buffer')
    with caplog.at_level(logging.INFO, logger='tests.buffer'):
        slog.debug_response('mode accounting', True)
        slog.debug_response('theorem 1 residual', False, 'residual 1.0e-02')
    assert slog.get_buffer() == '✓ mode accounting\n✗ theorem 1 residual - residual 1.0e-02'
    assert [r.levelname for r in caplog.records] == ['INFO', 'ERROR']


def test_buffer_keeps_only_recent_responses():
    slog = StructuredLogger('tests.bounded', DebugLevel.OFF, buffer_size=2)
    for name in ('mode accounting', 'degree reduction', 'wrapper transform'):
        slog.debug_response(name, True)
    assert slog.get_buffer() == '✓ degree reduction\n✓ wrapper transform'
    assert StructuredLogger('tests.default')._log_buffer.maxlen == Config.LOG_BUFFER_LINES


def test_errors_only_level_hides_successes(caplog):
    slog = StructuredLogger('tests.quiet', DebugLevel.ERRORS_ONLY)
    with caplog.at_level(logging.INFO, logger='tests.quiet'):
        slog.debug_response('mode accounting', True)
        slog.debug_response('degree reduction', False)
    assert [r.levelname for r in caplog.records] == ['ERROR']


def test_compiler_debugger_statistics():
    debugger = CompilerDebugger()
    debugger.log_plan_start('cnz', '1', 4)
    debugger.log_plan_step(1, 4, 'identity')
    debugger.log_plan_step(2, 6, 'chow')
    done = debugger.log_plan_done(10, 10)
    assert done.message == '10 non-Gaussian ancilla modes'
    assert debugger.log_plan_done(10, 12).message == '10 non-Gaussian ancilla modes (closed form 12)'
    debugger.log_check('mode accounting', True, 0.0)
    debugger.log_check('degree reduction', False, 0.5)
    debugger.log_feedforward(1, 4)
    assert not debugger.log_verification(1, 2).success
    summary = debugger.get_summary()
    assert summary['plan'] == {'gate': 'cnz', 'strategy': '1', 'steps': 2, 'modes': 10}
    assert summary['checks'] == {'passed': 1, 'failed': 1}
    assert summary['feedforward'] == {'resolutions': 1}


def test_log_error():
    response = CompilerDebugger().log_error('Resolve', ValueError('bad outcome'))
    assert not response.success
    assert response.details == {'error_type': 'ValueError', 'error_message': 'bad outcome'}


def test_manager_propagates_level(restore_debug_level):
    slog = DebugManager.create_logger('tests.manager')
    DebugManager.set_debug_level(DebugLevel.TRACE)
    assert slog.debug_level is DebugLevel.TRACE
    assert DebugManager.get_debug_level() is DebugLevel.TRACE
    assert DebugManager.get_compiler_debugger().logger.debug_level is DebugLevel.TRACE
    assert DebugManager() is DebugManager()
