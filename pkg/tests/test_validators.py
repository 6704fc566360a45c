import numpy as np
import pytest
from scipy.stats import ortho_group, unitary_group

from core.validators import InputValidator, MatrixValidator


@pytest.mark.parametrize('name, N, poly, ok', [
    ('toffoli', None, None, True),
    ('cnz', 4, None, True),
    ('cnz', None, None, False),
    ('cphase', 1, None, False),
    ('custom', None, 'x1^3', True),
    ('custom', None, '  ', False),
    ('teleport', None, None, False),
    ('', None, None, False),
    (None, None, None, False),
])
def test_validate_gate(name, N, poly, ok):
    valid, error = InputValidator.validate_gate(name, N, poly)
    assert valid == ok
    assert (error is None) == ok


def test_validate_strategy_and_sign_mode():
    assert InputValidator.validate_strategy('2') == (True, None)
    valid, error = InputValidator.validate_strategy(2)
    assert not valid and 'Unknown strategy' in error
    assert InputValidator.validate_sign_mode('duplicate') == (True, None)
    assert not InputValidator.validate_sign_mode('ignore')[0]


@pytest.mark.parametrize('n, ok', [(3, True), (0, False), (True, False), (2.0, False)])
def test_validate_mode_count(n, ok):
    assert InputValidator.validate_mode_count(n)[0] == ok


@pytest.mark.parametrize('trials, tolerance, ok', [(20, 1e-8, True), (0, 1e-8, False), (5, 0.0, False), (5, 'a', False)])
def test_validate_sampling(trials, tolerance, ok):
    assert InputValidator.validate_sampling(trials, tolerance)[0] == ok


def test_validate_outcomes():
    assert InputValidator.validate_outcomes([[1.0, 2.0], [0.5]], [2, 1]) == (True, None)
    assert InputValidator.validate_outcomes([[1.0]], [2, 1])[1] == 'Expected 2 outcome vectors, got 1'
    assert InputValidator.validate_outcomes([[1.0]], [2])[1] == 'Step 1 expects 2 outcomes, got 1'
    assert not InputValidator.validate_outcomes([[float('nan')]], [1])[0]
    assert not InputValidator.validate_outcomes([[-1.0]], [1])[0]
    assert InputValidator.validate_outcomes([[-1.0]], [1], positive=False)[0]


def test_matrix_validators(rng):
    A = rng.normal(size=(3, 3))
    assert MatrixValidator.validate_symmetric(A + A.T)[0]
    assert not MatrixValidator.validate_symmetric(A)[0]
    assert not MatrixValidator.validate_symmetric(np.ones((2, 3)))[0]
    assert MatrixValidator.validate_orthogonal(ortho_group.rvs(3, random_state=1))[0]
    assert not MatrixValidator.validate_orthogonal(A)[0]
    assert MatrixValidator.validate_unitary(unitary_group.rvs(3, random_state=1))[0]
    assert not MatrixValidator.validate_unitary(A)[0]


def test_validation_summary():
    summary = MatrixValidator.get_validation_summary(np.eye(2))
    assert summary['shape'] == [2, 2]
    assert summary['is_symmetric'] and summary['is_orthogonal'] and summary['is_unitary']
    assert summary['max_abs'] == 1.0
    assert MatrixValidator.get_validation_summary(np.ones((2, 3)))['is_square'] is False
