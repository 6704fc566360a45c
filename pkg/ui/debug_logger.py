"""
Structured logging for the compiler.

Provides operation context tracking and check-by-check debug responses so
planner steps and verification runs read as a nested trace.
"""

import json
import logging
import time
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Deque, Dict, List, Optional

from core.constants import Config


class DebugLevel(Enum):
    """Debug verbosity levels."""
    OFF = 0
    ERRORS_ONLY = 1
    NORMAL = 2
    VERBOSE = 3
    TRACE = 4


@dataclass
class DebugContext:
    """Context information for a traced operation."""
    operation: str
    module: str
    start_time: datetime = field(default_factory=datetime.now)
    metadata: Dict[str, Any] = field(default_factory=dict)
    depth: int = 0
    parent: Optional['DebugContext'] = None

    def add_metadata(self, key: str, value: Any):
        self.metadata[key] = value

    def get_formatted_header(self) -> str:
        indent = '  ' * self.depth
        return f'{indent}▶ {self.module}::{self.operation}'


@dataclass
class DebugResponse:
    """Outcome of one traced operation or check."""
    operation: str
    success: bool
    message: str
    details: Dict[str, Any] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=datetime.now)
    duration_ms: float = 0.0
    context: Optional[DebugContext] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'operation': self.operation, 'success': self.success, 'message': self.message, 'details': self.details, 'duration_ms': self.duration_ms}

    def to_formatted_string(self) -> str:
        status = '✓' if self.success else '✗'
        indent = '  ' * (self.context.depth if self.context else 0)
        result = f'{indent}{status} {self.operation}'
        if self.duration_ms > 0:
            result += f' ({self.duration_ms:.1f}ms)'
        if self.message:
            result += f' - {self.message}'
        return result


class StructuredLogger:
    """Logger with a context stack and a bounded buffer of formatted responses."""

    def __init__(self, name: str, debug_level: DebugLevel=DebugLevel.NORMAL, buffer_size: int=Config.LOG_BUFFER_LINES):
        self.logger = logging.getLogger(name)
        self.debug_level = debug_level
        self.context_stack: List[DebugContext] = []
        self._log_buffer: Deque[str] = deque(maxlen=buffer_size)

    def set_debug_level(self, level: DebugLevel):
        self.debug_level = level

    @contextmanager
    def context(self, operation: str, module: str=None, **metadata):
        """Track a nested operation; the context's elapsed time is kept in ``metadata['elapsed_ms']``."""
        if module is None:
            module = self.logger.name
        ctx = DebugContext(operation=operation, module=module, depth=len(self.context_stack), parent=self.context_stack[-1] if self.context_stack else None)
        for key, value in metadata.items():
            ctx.add_metadata(key, value)
        self.context_stack.append(ctx)
        started = time.perf_counter()
        try:
            if self.debug_level.value >= DebugLevel.VERBOSE.value:
                self.logger.debug(ctx.get_formatted_header())
            yield ctx
        finally:
            ctx.add_metadata('elapsed_ms', (time.perf_counter() - started) * 1000.0)
            self.context_stack.pop()

    def debug_response(self, operation: str, success: bool, message: str='', duration_ms: float=0.0, **details) -> DebugResponse:
        ctx = self.context_stack[-1] if self.context_stack else None
        response = DebugResponse(operation=operation, success=success, message=message, details=details, duration_ms=duration_ms, context=ctx)
        formatted = response.to_formatted_string()
        self._log_buffer.append(formatted)
        if self.debug_level.value >= DebugLevel.NORMAL.value:
            if success:
                self.logger.info(formatted)
            else:
                self.logger.error(formatted)
        elif not success and self.debug_level.value >= DebugLevel.ERRORS_ONLY.value:
            self.logger.error(formatted)
        if self.debug_level.value >= DebugLevel.VERBOSE.value and details:
            self.logger.debug(f'  Details: {json.dumps(details, default=str, indent=2)}')
        return response

    def trace(self, message: str, **kwargs):
        if self.debug_level.value >= DebugLevel.TRACE.value:
            ctx_prefix = f'[{self.context_stack[-1].operation}] ' if self.context_stack else ''
            self.logger.debug(f'{ctx_prefix}{message}')
            if kwargs:
                self.logger.debug(f'  Data: {json.dumps(kwargs, default=str, indent=2)}')

    def debug(self, message: str, **kwargs):
        if self.debug_level.value >= DebugLevel.VERBOSE.value:
            ctx_prefix = f'[{self.context_stack[-1].operation}] ' if self.context_stack else ''
            self.logger.debug(f'{ctx_prefix}{message}')

    def info(self, message: str, **kwargs):
        self.logger.info(message)
        if kwargs and self.debug_level.value >= DebugLevel.VERBOSE.value:
            self.logger.debug(f'  Data: {json.dumps(kwargs, default=str)}')

    def warning(self, message: str, **kwargs):
        self.logger.warning(message)

    def error(self, message: str, **kwargs):
        self.logger.error(message)
        if kwargs:
            self.logger.error(f'  Error Details: {json.dumps(kwargs, default=str)}')

    def get_buffer(self) -> str:
        """The most recent formatted responses, oldest first."""
        return '\n'.join(self._log_buffer)


class CompilerDebugger:
    """Planner and verification tracing with per-session statistics."""

    def __init__(self, debug_level: DebugLevel=DebugLevel.NORMAL):
        self.logger = StructuredLogger('compiler.debug', debug_level)
        self.plan_stats: Dict[str, Any] = {}
        self.check_stats = {'passed': 0, 'failed': 0}
        self.feedforward_stats = {'resolutions': 0}

    def log_plan_start(self, gate: str, strategy: str, order: int):
        with self.logger.context('Plan', 'Planner', gate=gate, strategy=strategy):
            self.logger.debug(f'Planning {gate} (order {order}) with strategy {strategy}')
        self.plan_stats = {'gate': gate, 'strategy': strategy, 'steps': 0, 'modes': 0}

    def log_plan_step(self, step: int, dimension: int, provenance: str):
        self.plan_stats['steps'] = self.plan_stats.get('steps', 0) + 1
        self.plan_stats['modes'] = self.plan_stats.get('modes', 0) + dimension
        self.logger.trace(f'Step {step}: {dimension} ancilla modes ({provenance})')

    def log_plan_done(self, total: int, formula: Optional[int]=None) -> DebugResponse:
        message = f'{total} non-Gaussian ancilla modes'
        if formula is not None and formula != total:
            message += f' (closed form {formula})'
        return self.logger.debug_response('Plan Complete', True, message, **self.plan_stats)

    def log_check(self, name: str, passed: bool, residual: Optional[float]=None, duration_ms: float=0.0) -> DebugResponse:
        self.check_stats['passed' if passed else 'failed'] += 1
        message = '' if residual is None else f'residual {residual:.3e}'
        return self.logger.debug_response(name, passed, message, duration_ms=duration_ms)

    def log_verification(self, passed: int, total: int) -> DebugResponse:
        return self.logger.debug_response('Verification', passed == total, f'{passed}/{total} checks passed', passed=passed, total=total)

    def log_feedforward(self, step: int, outcomes: int):
        self.feedforward_stats['resolutions'] += 1
        self.logger.trace(f'Resolved block {step} from {outcomes} outcomes')

    def log_error(self, operation: str, error: Exception) -> DebugResponse:
        return self.logger.debug_response(operation, False, f'Error: {type(error).__name__}', error_type=type(error).__name__, error_message=str(error))

    def get_summary(self) -> Dict[str, Any]:
        return {'plan': self.plan_stats, 'checks': dict(self.check_stats), 'feedforward': dict(self.feedforward_stats)}


class DebugManager:
    """Process-wide debug level and logger factory."""
    _instance = None
    _debug_level = DebugLevel.NORMAL
    _loggers: List[StructuredLogger] = []

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    @classmethod
    def set_debug_level(cls, level: DebugLevel):
        cls._debug_level = level
        for slog in cls._loggers:
            slog.set_debug_level(level)

    @classmethod
    def get_debug_level(cls) -> DebugLevel:
        return cls._debug_level

    @classmethod
    def get_compiler_debugger(cls) -> CompilerDebugger:
        return CompilerDebugger(cls._debug_level)

    @classmethod
    def create_logger(cls, name: str) -> StructuredLogger:
        slog = StructuredLogger(name, cls._debug_level)
        cls._loggers.append(slog)
        return slog
