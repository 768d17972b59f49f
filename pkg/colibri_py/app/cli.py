"""Command line interface to the colibri-py pipeline simulator."""
import sys
import logging
import argparse
from typing import List
from typing import Optional

from colibri_py.scenario import MAX_SEED
from colibri_py.scenario import load_scenario
from colibri_py.app.run import run_scenario
from colibri_py.app.tables import TABLES
from colibri_py.app.tables import write_table
from colibri_py.app.render import render_trace


def _seed(value: str) -> int:
    """Parse a 64-bit unsigned seed."""
    seed = int(value, 0)
    if not 0 <= seed <= MAX_SEED:
        raise argparse.ArgumentTypeError('seed must lie in [0, 2**64), got {}'.format(value))
    return seed


def _get_args(argv: Optional[List[str]] = None):
    """Parse arguments from the command line and return them."""
    parser = argparse.ArgumentParser(prog='colibri_py', description=__doc__)
    # add the arguments controlling diagnostics
    parser.add_argument('--verbose', '-v',
        action='count',
        default=0,
        help='Log stage boundaries (-v) or per-frame detail (-vv).',
    )
    parser.add_argument('--quiet', '-q',
        action='store_true',
        help='Hide progress bars.',
    )
    commands = parser.add_subparsers(dest='command', required=True)
    # add the command running a scenario end to end
    run = commands.add_parser('run', help='Simulate a scenario and write its trace.')
    run.add_argument('scenario',
        type=str,
        help='The path to the scenario file.',
    )
    run.add_argument('--out', '-o',
        type=str,
        default='out',
        help='The directory receiving the trace files.',
    )
    run.add_argument('--seed', '-s',
        type=_seed,
        default=None,
        help='A seed overriding the scenario seed.',
    )
    # add the command printing a table of the default model
    table = commands.add_parser('table', help='Print a table of the default model as CSV.')
    table.add_argument('table_id',
        type=str,
        choices=list(TABLES),
        help='The table to print.',
    )
    # add the command rendering a stored frame
    render = commands.add_parser('render', help='Render a frame of a trace to a PPM image.')
    render.add_argument('trace',
        type=str,
        help='The run directory holding the trace.',
    )
    render.add_argument('index',
        type=int,
        help='The position of the frame in the run.',
    )
    render.add_argument('--out', '-o',
        type=str,
        default=None,
        help='The image to write.',
    )
    return parser.parse_args(argv)


def _error(error: BaseException) -> None:
    """Print an error as a single line on stderr."""
    message = ' '.join(str(error).split())
    print('error: {}: {}'.format(type(error).__name__, message), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """The main entry point for the command line interface."""
    # get arguments from the command line
    args = _get_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        if args.command == 'run':
            scenario = load_scenario(args.scenario, seed=args.seed)
            run_scenario(scenario, args.out, quiet=args.quiet)
        elif args.command == 'table':
            write_table(sys.stdout, args.table_id)
        else:
            render_trace(args.trace, args.index, args.out)
    except IndexError as error:
        _error(error)
        return 2
    except (ValueError, OSError) as error:
        _error(error)
        return 1
    return 0


# explicitly define the outward facing API of this module
__all__ = [main.__name__]
