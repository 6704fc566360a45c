import argparse
import logging
import sys
import warnings

from core.constants import Config, get_log_file
from core.errors import CompilerError
from ui.debug_logger import DebugLevel, DebugManager


def setup_logging(debug: bool=False):
    try:
        log_file = get_log_file()
        logging.basicConfig(level=logging.DEBUG if debug else logging.INFO, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s', handlers=[logging.FileHandler(log_file, encoding='utf-8'), logging.StreamHandler(sys.stderr)])
        logging.captureWarnings(True)
        warnings.simplefilter('default', RuntimeWarning)
        return logging.getLogger(__name__)
    except Exception as e:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
        logger = logging.getLogger(__name__)
        logger.warning(f'Failed to setup advanced logging: {e}')
        return logger


def _add_gate_options(parser: argparse.ArgumentParser, required: bool=True):
    parser.add_argument('--gate', choices=Config.PRESET_GATES, required=required, help='Preset gate, or "custom" with --poly')
    parser.add_argument('--poly', help='Gate polynomial in x1, x2, ... (custom gate)')
    parser.add_argument('--N', type=int, help='Order parameter of cphase / mode count of cnz')


def _add_sampling_options(parser: argparse.ArgumentParser):
    parser.add_argument('--seed', type=int, default=Config.DEFAULT_SEED, help=f'Sampling seed (default {Config.DEFAULT_SEED})')
    parser.add_argument('--trials', type=int, default=Config.DEFAULT_TRIALS, help=f'Sampled outcome points (default {Config.DEFAULT_TRIALS})')
    parser.add_argument('--tolerance', type=float, default=Config.DEFAULT_TOLERANCE, help=f'Relative residual tolerance (default {Config.DEFAULT_TOLERANCE:g})')


def parse_arguments(argv=None):
    parser = argparse.ArgumentParser(description='CV Gate Compiler - measurement-based circuits for quadrature gates', formatter_class=argparse.RawDescriptionHelpFormatter, epilog='\nExamples:\n  %(prog)s compile --gate toffoli --strategy 3       # Waring plan, 4 cubic-phase ancillas\n  %(prog)s compile --gate custom --poly "0"          # wrapper-only circuit\n  %(prog)s compile --gate small-example --strategy 2 --render\n  %(prog)s verify --circuit toffoli-s3.circuit.json  # re-run every check\n  %(prog)s table                                     # C^N Z mode counts, N = 3..8\n  %(prog)s decompose-hamiltonian --hamiltonian "x1*p1 + p1*x1"\n        ')
    parser.add_argument('--version', action='version', version=f'{Config.APP_NAME} v{Config.APP_VERSION}')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('compile', help='Plan, verify and write a circuit file')
    _add_gate_options(p)
    p.add_argument('--strategy', choices=Config.STRATEGIES, default='1', help='Order-reduction strategy')
    p.add_argument('--sign-mode', dest='sign_mode', choices=Config.SIGN_MODES, default='assume-positive', help='Outcome sign handling')
    p.add_argument('--waring', metavar='FILE', help='JSON Waring decomposition for strategy 3')
    p.add_argument('--out', metavar='FILE', help='Circuit file to write')
    p.add_argument('--render', action='store_true', help='Print the circuit diagram')
    _add_sampling_options(p)

    p = sub.add_parser('verify', help='Verify an existing circuit file')
    p.add_argument('--circuit', metavar='FILE', required=True, help='Circuit file to check')
    p.add_argument('--render', action='store_true', help='Print the circuit diagram')
    _add_sampling_options(p)

    p = sub.add_parser('count', help='Mode counts of every strategy for one gate')
    _add_gate_options(p)
    p.add_argument('--strategy', choices=Config.STRATEGIES, help='Only count this strategy')

    p = sub.add_parser('table', help='C^N Z mode counts beside the stored comparison rows')
    p.add_argument('--n-min', dest='n_min', type=int, default=Config.TABLE_N_RANGE[0])
    p.add_argument('--n-max', dest='n_max', type=int, default=Config.TABLE_N_RANGE[-1])
    p.add_argument('--construct-upto', dest='construct_upto', type=int, default=0, help='Also build the plans for N up to this value')

    p = sub.add_parser('decompose', help='Chow and Waring decompositions of a gate polynomial')
    _add_gate_options(p, required=False)

    p = sub.add_parser('decompose-hamiltonian', help='Quadrature-bracket form of a Hermitian Hamiltonian')
    p.add_argument('--hamiltonian', required=True, help='Operator text in x1.., p1.. (I is the imaginary unit)')
    p.add_argument('--trotter-steps', dest='trotter_steps', type=int, default=0, help='Also print a Trotter sequence with this many steps')
    p.add_argument('--time', default='1', help='Evolution time for the Trotter sequence (rational)')

    p = sub.add_parser('examples', help='Mode counts of every preset under every strategy')
    p.add_argument('--verify', action='store_true', help='Run circuit verification for each preset')
    _add_sampling_options(p)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    logger = None
    try:
        args = parse_arguments(argv)
        logger = setup_logging(args.debug)
        if args.debug:
            DebugManager.set_debug_level(DebugLevel.VERBOSE)
            logger.debug('Debug logging enabled.')
        from core.commands import COMMANDS
        return COMMANDS[args.command](args)
    except CompilerError as e:
        (logger or logging.getLogger(__name__)).error(f'{type(e).__name__}: {e}')
        print(f'Error: {e}', file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        return 130
    except Exception as e:
        (logger or logging.getLogger(__name__)).critical(f'Unexpected error: {e}', exc_info=True)
        print(f'Unexpected error: {e}', file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
