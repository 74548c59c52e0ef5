"""
Tests for the config manager module.
"""

import os
import tempfile

import pytest

from src.config import ConfigManager
from src.errors import ConfigError


def write_config(text):
    temp_file = tempfile.NamedTemporaryFile(mode='w', suffix='.ini', delete=False)
    temp_file.write(text)
    temp_file.close()
    return temp_file.name


def test_config_load():
    """Test loading a valid configuration file."""
    path = write_config("""
[workload]
writes = 500
range_len = 0x1000
high_base = 0x6000000
seed = 7

[models]
flat_len = 65536

[bench]
repeats = 1
warmup = false
parallel = yes

[fuzz]
ops = 2000
fuzz_flat_len = 4096

[logging]
level = debug
log_file = bench.log
""")
    try:
        config = ConfigManager(path)
        workload = config.get_workload_settings()
        models = config.get_model_params()
        bench = config.get_bench_settings()
        fuzz = config.get_fuzz_settings()
        logging_settings = config.get_logging_settings()

        assert workload == {'writes': 500, 'range_len': 0x1000, 'high_base': 0x6000000,
                            'value': 1, 'seed': 7}
        assert models == {'addr_bits': 32, 'page_bits': 12, 'level_bits': 10, 'flat_len': 65536}
        assert bench == {'repeats': 1, 'warmup': False, 'parallel': True}
        assert fuzz == {'ops': 2000, 'seed': 1, 'flat_len': 4096, 'high_pool': 1024}
        assert logging_settings == {'level': 'DEBUG', 'log_file': 'bench.log'}
    finally:
        os.unlink(path)


def test_empty_config_uses_defaults():
    """An empty config file leaves the desk-scale defaults in place."""
    path = write_config('')
    try:
        config = ConfigManager(path)
        workload = config.get_workload_settings()
        assert workload['writes'] == 20000
        assert workload['range_len'] == 1 << 24
        assert workload['high_base'] == 6 * (1 << 24)
        assert workload['seed'] == 0x5EED
        assert config.get_model_params()['flat_len'] == 1 << 24
        assert config.get_bench_settings() == {'repeats': 3, 'warmup': True, 'parallel': False}
        assert config.get_logging_settings() == {'level': 'INFO', 'log_file': None}
    finally:
        os.unlink(path)


def test_missing_config():
    """Test behavior when an explicit config file is missing."""
    with pytest.raises(FileNotFoundError):
        ConfigManager('nonexistent_file.ini')


@pytest.mark.parametrize('text', [
    "[workload]\nwrites = lots\n",
    "[models]\naddr_bits = -1\n",
    "[bench]\nwarmup = sometimes\n",
    "[logging]\nlevel = LOUD\n",
    "not an ini file\n",
])
def test_invalid_settings(text):
    """Test behavior with invalid settings."""
    path = write_config(text)
    try:
        with pytest.raises(ConfigError):
            ConfigManager(path)
    finally:
        os.unlink(path)


def test_config_error_is_value_error():
    """ConfigError stays catchable as ValueError."""
    path = write_config("[fuzz]\nops = many\n")
    try:
        with pytest.raises(ValueError):
            ConfigManager(path)
    finally:
        os.unlink(path)
