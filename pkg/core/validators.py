from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from core.constants import Config
from core.linalg import is_orthogonal, is_unitary


class InputValidator:

    @staticmethod
    def validate_gate(name: Any, N: Optional[int]=None, poly: Optional[str]=None) -> Tuple[bool, Optional[str]]:
        if not name or not isinstance(name, str):
            return (False, 'Gate name must be a non-empty string')
        if name not in Config.PRESET_GATES:
            return (False, f"Unknown gate {name!r}; choose from {', '.join(Config.PRESET_GATES)}")
        if name in Config.PARAMETRIC_GATES and (N is None or N < 2):
            return (False, f'Gate {name} needs --N >= 2')
        if name == 'custom' and (poly is None or not poly.strip()):
            return (False, 'Custom gate needs --poly')
        return (True, None)

    @staticmethod
    def validate_strategy(strategy: Any) -> Tuple[bool, Optional[str]]:
        if strategy not in Config.STRATEGIES:
            return (False, f"Unknown strategy {strategy!r}; choose from {', '.join(Config.STRATEGIES)}")
        return (True, None)

    @staticmethod
    def validate_sign_mode(mode: Any) -> Tuple[bool, Optional[str]]:
        if mode not in Config.SIGN_MODES:
            return (False, f"Unknown sign mode {mode!r}; choose from {', '.join(Config.SIGN_MODES)}")
        return (True, None)

    @staticmethod
    def validate_mode_count(n: Any, minimum: int=1) -> Tuple[bool, Optional[str]]:
        if isinstance(n, bool) or not isinstance(n, int):
            return (False, f'Mode count must be an integer, got {type(n).__name__}')
        if n < minimum:
            return (False, f'Mode count must be at least {minimum}, got {n}')
        return (True, None)

    @staticmethod
    def validate_sampling(trials: Any, tolerance: Any) -> Tuple[bool, Optional[str]]:
        if not isinstance(trials, int) or trials < 1:
            return (False, f'Trial count must be a positive integer, got {trials!r}')
        if not isinstance(tolerance, (int, float)) or not tolerance > 0:
            return (False, f'Tolerance must be positive, got {tolerance!r}')
        return (True, None)

    @staticmethod
    def validate_outcomes(outcomes: Sequence[Sequence[float]], shape: Sequence[int], positive: bool=True) -> Tuple[bool, Optional[str]]:
        if len(outcomes) != len(shape):
            return (False, f'Expected {len(shape)} outcome vectors, got {len(outcomes)}')
        for step, (values, size) in enumerate(zip(outcomes, shape), start=1):
            if len(values) != size:
                return (False, f'Step {step} expects {size} outcomes, got {len(values)}')
            if not all((np.isfinite(v) for v in values)):
                return (False, f'Step {step} has non-finite outcomes')
            if positive and any((v <= 0 for v in values)):
                return (False, f'Step {step} has non-positive outcomes in assume-positive mode')
        return (True, None)


class MatrixValidator:

    @staticmethod
    def validate_symmetric(A: Any) -> Tuple[bool, Optional[str]]:
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            return (False, f'Expected a square matrix, got shape {A.shape}')
        asym = float(np.max(np.abs(A - A.T), initial=0.0))
        if asym > Config.SYMMETRY_TOL * max(1.0, float(np.max(np.abs(A), initial=0.0))):
            return (False, f'Matrix is not symmetric (asymmetry {asym:.3e})')
        return (True, None)

    @staticmethod
    def validate_orthogonal(O: Any) -> Tuple[bool, Optional[str]]:
        if not is_orthogonal(np.asarray(O, dtype=float)):
            return (False, 'Matrix is not orthogonal')
        return (True, None)

    @staticmethod
    def validate_unitary(U: Any) -> Tuple[bool, Optional[str]]:
        if not is_unitary(np.asarray(U, dtype=complex)):
            return (False, 'Matrix is not unitary')
        return (True, None)

    @staticmethod
    def get_validation_summary(M: Any) -> Dict[str, Any]:
        arr = np.asarray(M)
        summary: Dict[str, Any] = {'shape': list(arr.shape), 'dtype': str(arr.dtype), 'is_square': arr.ndim == 2 and arr.shape[0] == arr.shape[1]}
        if summary['is_square']:
            summary['is_symmetric'] = MatrixValidator.validate_symmetric(arr.real)[0] if not np.iscomplexobj(arr) else False
            summary['is_orthogonal'] = MatrixValidator.validate_orthogonal(arr.real)[0] if not np.iscomplexobj(arr) else False
            summary['is_unitary'] = MatrixValidator.validate_unitary(arr)[0]
            summary['max_abs'] = float(np.max(np.abs(arr), initial=0.0))
        return summary
