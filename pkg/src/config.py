"""
Configuration manager for the attachable-objects toolkit.
Handles loading and validation of workload, model, bench, fuzz and logging settings.
"""

import configparser
import logging
from pathlib import Path

from src.errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS = {
    'workload': {
        'writes': '20000',
        'range_len': str(1 << 24),
        'high_base': str(6 * (1 << 24)),
        'value': '1',
        'seed': str(0x5EED),
    },
    'models': {
        'addr_bits': '32',
        'page_bits': '12',
        'level_bits': '10',
        'flat_len': str(1 << 24),
    },
    'bench': {
        'repeats': '3',
        'warmup': 'true',
        'parallel': 'false',
    },
    'fuzz': {
        'ops': '100000',
        'seed': '1',
        'fuzz_flat_len': str(1 << 16),
        'high_pool': '1024',
    },
    'logging': {
        'level': 'INFO',
        'log_file': '',
    },
}

INT_SETTINGS = {
    'workload': ['writes', 'range_len', 'high_base', 'value', 'seed'],
    'models': ['addr_bits', 'page_bits', 'level_bits', 'flat_len'],
    'bench': ['repeats'],
    'fuzz': ['ops', 'seed', 'fuzz_flat_len', 'high_pool'],
}

BOOL_SETTINGS = {
    'bench': ['warmup', 'parallel'],
}

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


class ConfigManager:
    """Manages configuration for benchmark, fuzz and load runs."""

    def __init__(self, config_path=None):
        """
        Initialize the config manager.

        Args:
            config_path: Path to the config file. If None, uses 'config.ini' in the
                project root when it exists and built-in defaults otherwise.
        """
        self.config = configparser.ConfigParser()
        self.config.read_dict(DEFAULTS)

        if config_path is None:
            self.config_path = Path(__file__).parent.parent / 'config.ini'
            self.explicit = False
        else:
            self.config_path = Path(config_path)
            self.explicit = True

        self._load_config()

    def _load_config(self):
        """Load the configuration file, if any, over the defaults."""
        if not self.config_path.exists():
            if self.explicit:
                logger.error(f"Config file not found: {self.config_path}")
                raise FileNotFoundError(f"Config file not found: {self.config_path}. "
                                        f"Copy config.example.ini to get started.")
            logger.debug(f"No config file at {self.config_path}, using defaults")
        else:
            try:
                self.config.read(self.config_path)
            except configparser.Error as e:
                raise ConfigError(f"Cannot parse {self.config_path}: {e}") from None
            logger.debug(f"Loaded config from {self.config_path}")
        self._validate_config()

    def _validate_config(self):
        """Validate that every known setting has a usable value."""
        for section, keys in INT_SETTINGS.items():
            for key in keys:
                try:
                    value = int(self.config[section][key], 0)
                except ValueError:
                    raise ConfigError(f"Setting [{section}] {key} must be a number.") from None
                if value < 0:
                    raise ConfigError(f"Setting [{section}] {key} must not be negative.")

        for section, keys in BOOL_SETTINGS.items():
            for key in keys:
                try:
                    self.config.getboolean(section, key)
                except ValueError:
                    raise ConfigError(f"Setting [{section}] {key} must be true or false.") from None

        level = self.config['logging']['level'].upper()
        if level not in LOG_LEVELS:
            raise ConfigError(f"Setting [logging] level must be one of {', '.join(LOG_LEVELS)}.")

    def _int(self, section, key):
        return int(self.config[section][key], 0)

    def get_workload_settings(self):
        """
        Get workload settings.

        Returns:
            dict: writes, range_len, high_base, value and seed.
        """
        return {key: self._int('workload', key) for key in INT_SETTINGS['workload']}

    def get_model_params(self):
        """
        Get memory model parameters.

        Returns:
            dict: addr_bits, page_bits, level_bits and flat_len.
        """
        return {key: self._int('models', key) for key in INT_SETTINGS['models']}

    def get_bench_settings(self):
        """
        Get benchmark harness settings.

        Returns:
            dict: repeats, warmup and parallel.
        """
        return {
            'repeats': self._int('bench', 'repeats'),
            'warmup': self.config.getboolean('bench', 'warmup'),
            'parallel': self.config.getboolean('bench', 'parallel'),
        }

    def get_fuzz_settings(self):
        """
        Get fuzzing settings.

        Returns:
            dict: ops, seed, flat_len and high_pool.
        """
        return {
            'ops': self._int('fuzz', 'ops'),
            'seed': self._int('fuzz', 'seed'),
            'flat_len': self._int('fuzz', 'fuzz_flat_len'),
            'high_pool': self._int('fuzz', 'high_pool'),
        }

    def get_logging_settings(self):
        """
        Get logging settings.

        Returns:
            dict: level name and log_file (None when unset).
        """
        log_file = self.config['logging']['log_file'].strip()
        return {
            'level': self.config['logging']['level'].upper(),
            'log_file': log_file or None,
        }
