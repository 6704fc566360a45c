import json
import pathlib
from typing import Any, Dict, Union

from core.constants import Config
from core.errors import CircuitFileError, SchemaVersionError
from core.models import AncillaSpec, CircuitIR, CouplingBlockSpec, FinalStage, GateSpec

PathLike = Union[str, pathlib.Path]


def circuit_to_dict(ir: CircuitIR) -> Dict[str, Any]:
    return {
        'schema_version': Config.SCHEMA_VERSION,
        'gate': ir.gate.to_dict(),
        'strategy': ir.strategy,
        'sign_mode': ir.sign_mode,
        'n': ir.n,
        'gaussian': [a.to_dict() for a in ir.gaussian],
        'ancillas': [a.to_dict() for a in ir.ancillas],
        'blocks': [b.to_dict() for b in ir.blocks],
        'final_stage': ir.final_stage.to_dict(),
        'metadata': ir.metadata,
    }


def circuit_from_dict(data: Dict[str, Any]) -> CircuitIR:
    found = data.get('schema_version')
    if found != Config.SCHEMA_VERSION:
        raise SchemaVersionError(str(found), Config.SCHEMA_VERSION)
    return CircuitIR(
        gate=GateSpec.from_circuit_dict(data['gate']),
        strategy=data['strategy'],
        sign_mode=data['sign_mode'],
        gaussian=[AncillaSpec.from_dict(a) for a in data['gaussian']],
        ancillas=[AncillaSpec.from_dict(a) for a in data['ancillas']],
        blocks=[CouplingBlockSpec.from_dict(b) for b in data['blocks']],
        final_stage=FinalStage.from_dict(data['final_stage']),
        metadata=data.get('metadata', {}),
    )


def dumps(data: Dict[str, Any]) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def report_path(circuit_path: PathLike) -> pathlib.Path:
    """``<stem>.report.json`` beside the circuit file."""
    path = pathlib.Path(circuit_path)
    name = path.name
    if name.endswith(Config.CIRCUIT_SUFFIX):
        name = name[:-len(Config.CIRCUIT_SUFFIX)]
    else:
        name = path.stem
    return path.with_name(name + Config.REPORT_SUFFIX)


class CircuitFile:

    @staticmethod
    def save_circuit(filepath: PathLike, ir: CircuitIR):
        try:
            pathlib.Path(filepath).write_text(dumps(circuit_to_dict(ir)), encoding='utf-8')
        except Exception as e:
            raise CircuitFileError(f'Failed to save circuit file:\n{e}', 'write', {'path': str(filepath)}) from e

    @staticmethod
    def load_circuit(filepath: PathLike) -> CircuitIR:
        try:
            data = json.loads(pathlib.Path(filepath).read_text(encoding='utf-8'))
        except Exception as e:
            raise CircuitFileError(f'Failed to load circuit file:\n\n{e}', 'read', {'path': str(filepath)}) from e
        if not isinstance(data, dict):
            raise CircuitFileError(f'Circuit file {filepath} does not hold a JSON object', 'malformed')
        try:
            return circuit_from_dict(data)
        except SchemaVersionError:
            raise
        except Exception as e:
            raise CircuitFileError(f'Malformed circuit file:\n\n{e}', 'malformed', {'path': str(filepath)}) from e

    @staticmethod
    def save_report(filepath: PathLike, report: Dict[str, Any]):
        try:
            pathlib.Path(filepath).write_text(dumps(report), encoding='utf-8')
        except Exception as e:
            raise CircuitFileError(f'Failed to save report file:\n{e}', 'write', {'path': str(filepath)}) from e
