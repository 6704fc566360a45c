import logging
import time
from functools import wraps
from typing import Any, Callable

logger = logging.getLogger(__name__)


def safe_method(error_message: str='Operation failed', log_prefix: str='[CORE]', return_value: Any=None, reraise: bool=False) -> Callable:

    def decorator(func: Callable) -> Callable:

        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                logger.error(f'{log_prefix} {error_message}: {e}')
                if reraise:
                    raise
                return return_value
        return wrapper
    return decorator


def safe_check(name: str) -> Callable:
    """Turn a verification check into a report entry.

    The wrapped function returns ``(passed, residual, details)``; the wrapper
    returns a ``CheckResult`` and converts unexpected exceptions into a failed
    entry carrying the error text.
    """

    def decorator(func: Callable) -> Callable:

        @wraps(func)
        def wrapper(*args, **kwargs):
            from core.models import CheckResult
            start = time.perf_counter()
            try:
                passed, residual, details = func(*args, **kwargs)
            except Exception as e:
                logger.error(f'[CHECK] {name} raised: {e}', exc_info=True)
                return CheckResult(name=name, passed=False, residual=None, details={'error': str(e), 'error_type': type(e).__name__}, duration_ms=(time.perf_counter() - start) * 1000)
            return CheckResult(name=name, passed=bool(passed), residual=residual, details=details or {}, duration_ms=(time.perf_counter() - start) * 1000)
        return wrapper
    return decorator


def cli_command(error_message: str='Command failed') -> Callable:
    return safe_method(error_message, '[CLI]', None, True)
