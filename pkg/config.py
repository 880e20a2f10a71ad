import logging
import os

from dotenv import load_dotenv

basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, '.env'))

logger = logging.getLogger(__name__)


class Config:
    """Process-level configuration read from the environment."""

    LOG_LEVEL = os.environ.get('WEDGEFLOW_LOG_LEVEL', 'INFO').upper()
    # Unset means no file handler; logs only go to stderr.
    LOG_DIR = os.environ.get('WEDGEFLOW_LOG_DIR') or None

    OUT_DIR = os.environ.get('WEDGEFLOW_OUT_DIR') or os.path.join(basedir, 'out')
    DEFAULT_SEED = int(os.environ.get('WEDGEFLOW_SEED', '0'))
    WORKERS = int(os.environ.get('WEDGEFLOW_WORKERS', '1'))

    # Run guards
    MAX_EVENTS = int(os.environ.get('WEDGEFLOW_MAX_EVENTS', '200000'))
    TV_BOUND = float(os.environ.get('WEDGEFLOW_TV_BOUND', '0.2'))

    # Oracle self-test tolerance (cmd_oracle)
    ORACLE_TOLERANCE = float(os.environ.get('WEDGEFLOW_ORACLE_TOLERANCE', '1e-8'))

    @classmethod
    def validate_config(cls):
        """Validate critical configuration"""
        errors = []

        if cls.LOG_LEVEL not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            errors.append(f"WEDGEFLOW_LOG_LEVEL {cls.LOG_LEVEL!r} is not a logging level")
        if cls.WORKERS < 1:
            errors.append("WEDGEFLOW_WORKERS must be at least 1")
        if cls.MAX_EVENTS < 1:
            errors.append("WEDGEFLOW_MAX_EVENTS must be positive")
        if cls.TV_BOUND <= 0:
            errors.append("WEDGEFLOW_TV_BOUND must be positive")
        if cls.ORACLE_TOLERANCE <= 0:
            errors.append("WEDGEFLOW_ORACLE_TOLERANCE must be positive")

        return errors


class DevelopmentConfig(Config):
    LOG_LEVEL = os.environ.get('WEDGEFLOW_LOG_LEVEL', 'DEBUG').upper()


class TestingConfig(Config):
    LOG_LEVEL = 'WARNING'
    LOG_DIR = None
    WORKERS = 1
    MAX_EVENTS = 20000


class ProductionConfig(Config):
    pass


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': ProductionConfig,
}


def get_config(name=None):
    """Return the config class selected by ``name`` or ``WEDGEFLOW_ENV``."""
    name = name or os.environ.get('WEDGEFLOW_ENV', 'default')
    config_class = config.get(name, config['default'])
    for error in config_class.validate_config():
        logger.warning("Configuration problem: %s", error)
    return config_class
