import json
import pathlib

import pytest
import sympy

from core.circuit import verify_circuit
from core.circuit_file import CircuitFile, circuit_from_dict, circuit_to_dict, dumps, report_path
from core.constants import Config
from core.decompose import WaringDecomp
from core.errors import CircuitFileError, InputError, ParseError, SchemaVersionError
from core.models import decode_expr, encode_expr


def test_save_and_load_circuit(toffoli_modewise, circuit_path):
    CircuitFile.save_circuit(circuit_path, toffoli_modewise)
    text = circuit_path.read_text(encoding='utf-8')
    assert text.endswith('\n')
    assert json.loads(text)['schema_version'] == Config.SCHEMA_VERSION
    loaded = CircuitFile.load_circuit(circuit_path)
    assert loaded.gate.V == toffoli_modewise.gate.V
    assert loaded.non_gaussian_count == 3
    assert loaded.blocks[0].K == toffoli_modewise.blocks[0].K
    assert loaded.blocks[0].outcomes == toffoli_modewise.blocks[0].outcomes
    assert loaded.metadata == toffoli_modewise.metadata
    assert loaded.final_stage == toffoli_modewise.final_stage


def test_loaded_circuit_still_verifies(cubic_qnd_modewise, circuit_path):
    CircuitFile.save_circuit(circuit_path, cubic_qnd_modewise)
    report = verify_circuit(CircuitFile.load_circuit(circuit_path), trials=3)
    assert report.passed


def test_output_is_stable(toffoli_modewise):
    assert dumps(circuit_to_dict(toffoli_modewise)) == dumps(circuit_to_dict(toffoli_modewise))


def test_schema_version_mismatch(toffoli_modewise, circuit_path):
    data = circuit_to_dict(toffoli_modewise)
    data['schema_version'] = '0.9'
    with pytest.raises(SchemaVersionError) as info:
        circuit_from_dict(data)
    assert info.value.details == {'found': '0.9', 'expected': Config.SCHEMA_VERSION}
    circuit_path.write_text(dumps(data), encoding='utf-8')
    with pytest.raises(SchemaVersionError):
        CircuitFile.load_circuit(circuit_path)


def test_missing_file(tmp_path):
    with pytest.raises(CircuitFileError) as info:
        CircuitFile.load_circuit(tmp_path / 'absent.circuit.json')
    assert info.value.error_type == 'read'
    assert info.value.exit_code == 4


@pytest.mark.parametrize('text', ['[1, 2]', '{"schema_version": "1.0"}'])
def test_malformed_file(circuit_path, text):
    circuit_path.write_text(text, encoding='utf-8')
    with pytest.raises(CircuitFileError) as info:
        CircuitFile.load_circuit(circuit_path)
    assert info.value.error_type == 'malformed'


def test_unwritable_destination(toffoli_modewise, tmp_path):
    with pytest.raises(CircuitFileError) as info:
        CircuitFile.save_circuit(tmp_path / 'missing' / 'gate.circuit.json', toffoli_modewise)
    assert info.value.error_type == 'write'


def test_report_path():
    assert report_path('out/gate.circuit.json') == pathlib.Path('out/gate.report.json')
    assert report_path('gate.json') == pathlib.Path('gate.report.json')


def test_save_report(tmp_path):
    path = tmp_path / 'gate.report.json'
    CircuitFile.save_report(path, {'passed': True, 'checks': []})
    assert json.loads(path.read_text(encoding='utf-8')) == {'checks': [], 'passed': True}


def _shell_payload(marker):
    return f"__import__('os').system('touch {marker}')"


@pytest.mark.parametrize('template', [
    '{payload}',
    'Integer(1).__class__.__base__',
    'Symbol(\'s1\', positive=True)[0]',
    'Add(Integer(1), {payload})',
    'lambda: 1',
    'Float(1.5)',
])
def test_decode_rejects_code(tmp_path, template):
    marker = tmp_path / 'marker'
    with pytest.raises(ParseError):
        decode_expr(template.format(payload=_shell_payload(marker)))
    assert not marker.exists()


def test_decode_accepts_stored_scalars():
    s = sympy.Symbol('s1_2', positive=True)
    for value in [sympy.Integer(-3), sympy.Rational(3, 2), sympy.sqrt(2) * s ** sympy.Rational(1, 3) - sympy.I, sympy.Float(0.25)]:
        assert decode_expr(encode_expr(value)) == value


def test_load_circuit_rejects_code(toffoli_modewise, circuit_path, tmp_path):
    marker = tmp_path / 'marker'
    data = circuit_to_dict(toffoli_modewise)
    data['gate']['polynomial']['terms'][0][1] = _shell_payload(marker)
    circuit_path.write_text(dumps(data), encoding='utf-8')
    with pytest.raises(CircuitFileError) as info:
        CircuitFile.load_circuit(circuit_path)
    assert info.value.error_type == 'malformed'
    assert not marker.exists()


def test_waring_file_rejects_code(tmp_path):
    marker = tmp_path / 'marker'
    data = {'n': 1, 'order': 3, 'terms': [{'coefficient': _shell_payload(marker), 'form': ['Integer(1)']}]}
    with pytest.raises(InputError):
        WaringDecomp.from_dict(data)
    assert not marker.exists()
