import pathlib
import sys

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.circuit import build_circuit
from core.strategies import gate_preset, plan_gate, sign_mode, verify_plan


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def presets():
    return {
        'cubic-qnd': gate_preset('cubic-qnd'),
        'toffoli': gate_preset('toffoli'),
        'small-example': gate_preset('small-example'),
        'cphase4': gate_preset('cphase', 4),
        'cnz4': gate_preset('cnz', 4),
    }


def _compile(gate, strategy, mode='assume-positive'):
    plan = plan_gate(gate, strategy)
    ok, residual = verify_plan(plan, trials=5, seed=0)
    assert ok, residual
    return build_circuit(sign_mode(plan, mode))


@pytest.fixture
def compile_preset():
    return _compile


@pytest.fixture(scope='session')
def toffoli_modewise():
    return _compile(gate_preset('toffoli'), '1')


@pytest.fixture(scope='session')
def cubic_qnd_modewise():
    return _compile(gate_preset('cubic-qnd'), '1')


@pytest.fixture
def circuit_path(tmp_path):
    return tmp_path / 'gate.circuit.json'
