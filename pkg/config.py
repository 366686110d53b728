import os
from dotenv import load_dotenv

load_dotenv()


def _env_int(name, default):
    value = os.getenv(name)
    if value is None or value.strip() == '':
        return default
    return int(value)


class Config:
    """Base configuration"""
    THREADS = _env_int('FBLSC_THREADS', os.cpu_count() or 1)
    LOG_LEVEL = os.getenv('FBLSC_LOG_LEVEL', 'WARNING')
    SEED = _env_int('FBLSC_SEED', 20240101)

    # Alternating minimisation
    BA_MAX_ITER = 100_000
    BA_TOL = 1e-10
    LAMBDA_CAP = 1e4

    # Enumeration budgets
    TYPE_BUDGET = 10_000_000
    LATTICE_BUDGET = 1_000_000
    GW_EVAL_BUDGET = 400
    SSCC_GRID = 512
    DIRECT_CODEBOOK_LIMIT = 4096


class DevelopmentConfig(Config):
    LOG_LEVEL = os.getenv('FBLSC_LOG_LEVEL', 'INFO')


class TestingConfig(Config):
    THREADS = 2
    SEED = 12345
    GW_EVAL_BUDGET = 200


class ProductionConfig(Config):
    LOG_LEVEL = os.getenv('FBLSC_LOG_LEVEL', 'WARNING')


config = {
    'development': DevelopmentConfig,
    'testing': TestingConfig,
    'production': ProductionConfig,
    'default': ProductionConfig,
}
