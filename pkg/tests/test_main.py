"""
Tests for the command-line entry point.
"""

import json
from pathlib import Path

from src.bench import parse_csv
from src.config import ConfigManager
from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, build_parser, cmd_fuzz, main
from src.memory_models import OracleMemory

BOOKS = Path(__file__).parent.parent / 'books'

SMALL_RUN = ['--writes', '200', '--repeats', '1', '--no-warmup']


def test_bench_json(capsys):
    """bench prints one JSON report and exits 0 when verified."""
    code = main(['bench', '--model', 'asymmetric', '--base', 'high', '--format', 'json'] + SMALL_RUN)
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['verified'] is True
    assert report['spec']['model_kind'] == 'asymmetric'
    assert report['spec']['base_addr'] == 6 * (1 << 24)
    assert report['footprint_bytes'] == (1 << 24) + 32 * report['distinct_addresses']


def test_bench_custom_base(capsys):
    """--base also takes a literal address."""
    code = main(['bench', '--base', '0x100000', '--range', '4096', '--format', 'json'] + SMALL_RUN)
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report['spec']['label'] == 'custom'
    assert report['spec']['base_addr'] == 0x100000


def test_bench_rejects_zero_range(capsys):
    """A zero range is a usage error."""
    assert main(['bench', '--range', '0'] + SMALL_RUN) == EXIT_USAGE
    assert 'range_len' in capsys.readouterr().err


def test_bench_rejects_bad_base(capsys):
    """A base that is neither low, high nor a number is a usage error."""
    assert main(['bench', '--base', 'middle'] + SMALL_RUN) == EXIT_USAGE


def test_unknown_command():
    """argparse errors map to the usage exit code."""
    assert main(['frobnicate']) == EXIT_USAGE


def test_suite_csv(capsys):
    """suite --format csv prints a header and six rows."""
    code = main(['suite', '--format', 'csv'] + SMALL_RUN)
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert len(out.strip().splitlines()) == 7
    reports = parse_csv(out)
    assert [(r.spec.model_kind, r.spec.label) for r in reports] == [
        ('symmetric', 'low'), ('symmetric', 'high'),
        ('asymmetric', 'low'), ('asymmetric', 'high'),
        ('attached', 'low'), ('attached', 'high'),
    ]
    assert all(r.verified for r in reports)


def test_suite_table(capsys):
    """The default format is the table."""
    assert main(['suite'] + SMALL_RUN) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith('Memory')


def test_load_attached_book(capsys):
    """Loading the attached set traces f to the implementation."""
    assert main(['load', str(BOOKS / 'st_attached.book')]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ['f -> p{impl}$c']


def test_load_naive_book(capsys):
    """Loading the naive set traces f to the cached binding."""
    assert main(['load', str(BOOKS / 'st_naive.book')]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ['f -> p$c']


def test_load_with_invoke(capsys):
    """--invoke appends a trace line per call."""
    code = main(['load', str(BOOKS / 'b_st.book'), '--invoke', 'f', '--invoke', 'f'])
    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ['f -> p$c', 'f -> p$c']


def test_load_misordered_book(capsys):
    """A late attach fails the load with book and line on stderr."""
    assert main(['load', str(BOOKS / 'st_misordered.book')]) == EXIT_FAILURE
    captured = capsys.readouterr()
    assert captured.out == ''
    assert 'st_misordered.book:4: StAlreadyDefinedError' in captured.err


def test_load_unknown_function(capsys):
    """Invoking an unknown function is a load failure."""
    assert main(['load', str(BOOKS / 'b_st.book'), '--invoke', 'g']) == EXIT_FAILURE
    assert 'UnknownFunctionError' in capsys.readouterr().err


def test_load_missing_book(capsys):
    """A missing book path is a usage error."""
    assert main(['load', str(BOOKS / 'nowhere.book')]) == EXIT_USAGE


def test_missing_config(capsys):
    """An explicit config path that does not exist is a usage error."""
    assert main(['--config', 'nonexistent_file.ini', 'load', str(BOOKS / 'b_st.book')]) == EXIT_USAGE
    assert 'Config file not found' in capsys.readouterr().err


def test_fuzz_passes(capsys):
    """fuzz exits 0 when the models agree with the oracle."""
    assert main(['fuzz', '--ops', '3000', '--seed', '5']) == EXIT_OK
    assert capsys.readouterr().out.startswith('OK: 3000 ops')


class LossyMemory(OracleMemory):
    """Forgets writes of odd values."""

    def write_byte(self, addr, value):
        if value % 2 == 0:
            super().write_byte(addr, value)


def test_fuzz_reports_divergence(capsys):
    """A broken model fails the fuzz run with a reproduction."""
    args = build_parser().parse_args(['fuzz', '--ops', '5000', '--seed', '3'])
    code = cmd_fuzz(args, ConfigManager(), {'lossy': LossyMemory})
    assert code == EXIT_FAILURE
    out = capsys.readouterr().out
    assert out.startswith('DIVERGENCE:')
    assert 'reproduce with: fuzz --ops' in out
    assert '--seed 3' in out


def test_fuzz_zero_ops(capsys):
    """fuzz with no ops passes vacuously."""
    assert main(['fuzz', '--ops', '0']) == EXIT_OK


def test_setup_script_smoke_commands(capsys, monkeypatch):
    """Every toolkit command setup.sh runs exits 0 from the repository root."""
    root = BOOKS.parent
    monkeypatch.chdir(root)
    commands = [line.split()[3:] for line in (root / 'setup.sh').read_text().splitlines()
                if line.startswith('python -m src.main ')]
    assert [c[0] for c in commands] == ['suite', 'load']
    for command in commands:
        assert main(command) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == 'f -> p{impl}$c'
