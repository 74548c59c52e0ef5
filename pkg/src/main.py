"""
Main entry point for the attachable-objects toolkit.

Subcommands:
    bench  run one benchmark row
    suite  run the six-row memory model suite
    load   load a book script and print its trace
    fuzz   check the memory models against the oracle

Exit codes: 0 success, 1 semantic or verification failure, 2 usage error.
"""

import argparse
import logging
import sys
from pathlib import Path

from src.bench import SuiteConfig, WorkloadSpec, format_reports, run_benchmark, run_suite, suite_specs
from src.book_loader import BookLoader
from src.config import ConfigManager
from src.errors import AttachError, ConfigError, InvalidParamsError, InvalidWorkloadError
from src.fuzz import FuzzConfig, run_fuzz
from src.memory_models import MEMORY_KINDS

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def configure_logging(settings, verbose=False):
    """
    Configure logging. Logs go to stderr; stdout carries reports and traces.

    Args:
        settings: Dictionary from ConfigManager.get_logging_settings()
        verbose: Force DEBUG level
    """
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.get('log_file'):
        handlers.append(logging.FileHandler(settings['log_file']))
    level = logging.DEBUG if verbose else getattr(logging, settings.get('level', 'INFO'))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def _int(text):
    """Integer argument accepting 0x/0o/0b prefixes."""
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer: {text!r}") from None


def _add_params(parser):
    group = parser.add_argument_group('model params', 'memory model parameters (override config)')
    group.add_argument('--addr-bits', type=_int, default=None, help='symmetric address width')
    group.add_argument('--page-bits', type=_int, default=None, help='symmetric page size, log2')
    group.add_argument('--level-bits', type=_int, default=None, help='symmetric radix bits per level')
    group.add_argument('--flat-len', type=_int, default=None, help='asymmetric flat region length')


def build_parser():
    parser = argparse.ArgumentParser(
        description='Attachable abstract objects: registry, book loader and memory model benchmarks')
    parser.add_argument('--config', type=str, default=None,
                        help='Path to config file (default: config.ini in project root, if present)')
    parser.add_argument('--verbose', action='store_true', help='Enable debug logging')
    subparsers = parser.add_subparsers(dest='command', required=True)

    bench = subparsers.add_parser('bench', help='Run one benchmark row')
    bench.add_argument('--model', choices=MEMORY_KINDS, default='symmetric')
    bench.add_argument('--base', type=str, default='low',
                       help="'low' (0), 'high' (configured high base) or an address")
    bench.add_argument('--range', dest='range_len', type=_int, default=None)
    bench.add_argument('--writes', type=_int, default=None)
    bench.add_argument('--value', type=_int, default=None)
    bench.add_argument('--seed', type=_int, default=None)
    bench.add_argument('--repeats', type=_int, default=None)
    bench.add_argument('--no-warmup', action='store_true')
    bench.add_argument('--format', choices=('table', 'csv', 'json'), default='table')
    _add_params(bench)
    bench.set_defaults(handler=cmd_bench)

    suite = subparsers.add_parser('suite', help='Run the six-row suite')
    suite.add_argument('--range', dest='range_len', type=_int, default=None)
    suite.add_argument('--high-base', type=_int, default=None)
    suite.add_argument('--writes', type=_int, default=None)
    suite.add_argument('--seed', type=_int, default=None)
    suite.add_argument('--repeats', type=_int, default=None)
    suite.add_argument('--no-warmup', action='store_true')
    suite.add_argument('--parallel', action='store_true', help='Run each row on its own thread')
    suite.add_argument('--format', choices=('table', 'csv', 'json'), default='table')
    _add_params(suite)
    suite.set_defaults(handler=cmd_suite)

    load = subparsers.add_parser('load', help='Load a book and print its trace')
    load.add_argument('book', type=str)
    load.add_argument('--invoke', action='append', default=[], metavar='FNAME',
                      help='Invoke a function after loading (repeatable)')
    load.set_defaults(handler=cmd_load)

    fuzz = subparsers.add_parser('fuzz', help='Check memory models against the oracle')
    fuzz.add_argument('--ops', type=_int, default=None)
    fuzz.add_argument('--seed', type=_int, default=None)
    fuzz.add_argument('--high-pool', type=_int, default=None)
    _add_params(fuzz)
    fuzz.set_defaults(handler=cmd_fuzz)
    return parser


def _pick(flag_value, configured):
    return configured if flag_value is None else flag_value


def _model_params(args, config, flat_len_default=None):
    params = config.get_model_params()
    if flat_len_default is not None:
        params['flat_len'] = flat_len_default
    return {
        'addr_bits': _pick(args.addr_bits, params['addr_bits']),
        'page_bits': _pick(args.page_bits, params['page_bits']),
        'level_bits': _pick(args.level_bits, params['level_bits']),
        'flat_len': _pick(args.flat_len, params['flat_len']),
    }


def _usage_error(message):
    print(f"usage error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _emit(text):
    sys.stdout.write(text if text.endswith('\n') else text + '\n')


def cmd_bench(args, config):
    """Run one benchmark row; exit 0 iff verified."""
    workload = config.get_workload_settings()
    bench_settings = config.get_bench_settings()

    # Resolve the base: low, high or a literal address
    if args.base == 'low':
        label, base = 'low', 0
    elif args.base == 'high':
        label, base = 'high', workload['high_base']
    else:
        try:
            label, base = 'custom', _int(args.base)
        except argparse.ArgumentTypeError as e:
            return _usage_error(str(e))

    # Command-line flags override config values
    spec = WorkloadSpec(
        label=label,
        model_kind=args.model,
        n_writes=_pick(args.writes, workload['writes']),
        base_addr=base,
        range_len=_pick(args.range_len, workload['range_len']),
        value=_pick(args.value, workload['value']),
        seed=_pick(args.seed, workload['seed']),
        **_model_params(args, config),
    )

    # Bad workloads are usage errors, not failures
    repeats = _pick(args.repeats, bench_settings['repeats'])
    try:
        spec.validate()
        if repeats < 1:
            raise InvalidWorkloadError(f"repeats must be at least 1, got {repeats}")
    except (InvalidWorkloadError, InvalidParamsError) as e:
        return _usage_error(e.message)

    # Run, print, and fail on a verification mismatch
    report = run_benchmark(spec, repeats=repeats,
                           warmup=bench_settings['warmup'] and not args.no_warmup)
    _emit(format_reports([report], args.format))
    return EXIT_OK if report.verified else EXIT_FAILURE


def cmd_suite(args, config):
    """Run the six-row suite; exit 0 iff every row verified."""
    workload = config.get_workload_settings()
    bench_settings = config.get_bench_settings()
    suite_config = SuiteConfig(
        n_writes=_pick(args.writes, workload['writes']),
        range_len=_pick(args.range_len, workload['range_len']),
        high_base=_pick(args.high_base, workload['high_base']),
        value=workload['value'],
        seed=_pick(args.seed, workload['seed']),
        repeats=_pick(args.repeats, bench_settings['repeats']),
        warmup=bench_settings['warmup'] and not args.no_warmup,
        parallel=bench_settings['parallel'] or args.parallel,
        **_model_params(args, config),
    )
    if suite_config.repeats < 1:
        return _usage_error(f"repeats must be at least 1, got {suite_config.repeats}")
    try:
        for spec in suite_specs(suite_config):
            spec.validate()
    except (InvalidWorkloadError, InvalidParamsError) as e:
        return _usage_error(e.message)

    reports = run_suite(suite_config)
    _emit(format_reports(reports, args.format))
    return EXIT_OK if all(report.verified for report in reports) else EXIT_FAILURE


def cmd_load(args, config):
    """Load a book, print its trace lines; exit 1 on load errors."""
    book = Path(args.book)
    if not book.is_file():
        return _usage_error(f"book not found: {book}")

    loader = BookLoader(root=book.parent)
    try:
        loader.load(book.name)
        for fname in args.invoke:
            loader.invoke(fname)
    except AttachError as e:
        logger.error(f"Load failed: {e}")
        print(str(e), file=sys.stderr)
        return EXIT_FAILURE

    for line in loader.trace_lines():
        _emit(line)
    return EXIT_OK


def cmd_fuzz(args, config, factories=None):
    """Fuzz the memory models against the oracle; exit 0 iff no divergence."""
    settings = config.get_fuzz_settings()
    fuzz_config = FuzzConfig(
        ops=_pick(args.ops, settings['ops']),
        seed=_pick(args.seed, settings['seed']),
        high_pool=_pick(args.high_pool, settings['high_pool']),
        **_model_params(args, config, flat_len_default=settings['flat_len']),
    )
    try:
        fuzz_config.validate()
    except InvalidParamsError as e:
        return _usage_error(e.message)

    result = run_fuzz(fuzz_config, factories)
    _emit(result.report())
    return EXIT_OK if result.ok else EXIT_FAILURE


def main(argv=None):
    """Main entry point for the application."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        config = ConfigManager(args.config)
    except (FileNotFoundError, ConfigError) as e:
        return _usage_error(str(e))
    configure_logging(config.get_logging_settings(), args.verbose)

    try:
        return args.handler(args, config)
    except AttachError as e:
        logger.error(str(e))
        return EXIT_FAILURE
    except Exception as e:
        logger.exception(f"Unexpected error: {str(e)}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
