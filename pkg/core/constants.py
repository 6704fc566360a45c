import os
import pathlib


def _get_global_cache_dir():
    app_name = 'CVGateCompiler'
    try:
        if os.name == 'nt':
            appdata = os.environ.get('APPDATA')
            if appdata:
                cache_base = pathlib.Path(appdata)
            else:
                cache_base = pathlib.Path.home() / 'AppData' / 'Roaming'
        elif os.name == 'posix':
            xdg_cache = os.environ.get('XDG_CACHE_HOME')
            if xdg_cache:
                cache_base = pathlib.Path(xdg_cache)
            else:
                cache_base = pathlib.Path.home() / '.cache'
        else:
            cache_base = pathlib.Path.home()
        cache_base = cache_base.resolve()
        return cache_base / f'{app_name}_cache'
    except Exception as e:
        print(f'Warning: Failed to determine cache directory: {e}')
        return pathlib.Path.home() / f'{app_name}_cache'


class Config:
    APP_NAME = 'CVGateCompiler'
    APP_VERSION = '1.0'
    APP_CACHE_DIR = _get_global_cache_dir()
    LOG_DIR = APP_CACHE_DIR / 'logs'
    LOG_FILE_NAME = 'cv_gate_compiler.log'

    SCHEMA_VERSION = '1.0'
    CIRCUIT_SUFFIX = '.circuit.json'
    REPORT_SUFFIX = '.report.json'
    FLOAT_DIGITS = 17

    # verification sampling
    DEFAULT_SEED = 0
    DEFAULT_TRIALS = 20
    DEFAULT_TOLERANCE = 1e-8
    PLAN_CHECK_TRIALS = 3
    RESOLVE_ATTEMPTS = 32
    SAMPLE_PRECISION = 30
    SAMPLE_NUMERATOR_MAX = 48
    SAMPLE_DENOMINATOR_MAX = 12

    # numeric tolerances
    SCALAR_REL_TOL = 1e-12
    ORTHO_TOL = 1e-10
    SYMMETRY_TOL = 1e-12
    UNITARY_OFO_TOL = 1e-9
    CHAIN_AGREEMENT_TOL = 1e-9
    THEOREM1_TOL = 1e-10
    FEEDFORWARD_LIMIT = 1e12
    DEGENERACY_TOL = 1e-8

    LOG_BUFFER_LINES = 500

    # workers
    MAX_MEMORY_MB = 2048
    SAMPLE_WORKERS = 4

    PRESET_GATES = ('cubic-qnd', 'toffoli', 'cphase', 'cnz', 'small-example', 'custom')
    PARAMETRIC_GATES = ('cphase', 'cnz')
    STRATEGIES = ('1', '2', '3')
    SIGN_MODES = ('assume-positive', 'duplicate')

    # stored comparison rows for C^N Z, N = 3..8
    TABLE_N_RANGE = (3, 4, 5, 6, 7, 8)
    STORED_TABLE = {
        '1': (3, 8, 27, 114, 639, 3936),
        '2': (3, 10, 29, 67, 155, 333),
        '3': (4, 16, 48, 128, 320, 768),
    }

    EXIT_OK = 0
    EXIT_INPUT_ERROR = 2
    EXIT_PLAN_ERROR = 3
    EXIT_IO_ERROR = 4


def get_log_dir() -> pathlib.Path:
    try:
        Config.LOG_DIR.mkdir(parents=True, exist_ok=True)
        return Config.LOG_DIR
    except OSError as e:
        print(f'Warning: Failed to create log directory {Config.LOG_DIR}: {e}')
        fallback = pathlib.Path.cwd() / 'logs'
        fallback.mkdir(exist_ok=True)
        return fallback


def get_log_file() -> pathlib.Path:
    return get_log_dir() / Config.LOG_FILE_NAME
