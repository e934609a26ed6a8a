import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional

from dotenv import load_dotenv

from src.errors import ConfigError
from src.model import ModelParams, example_params, validate_params

LOG_FORMAT = '[%(levelname)s] %(asctime)s - %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'

logger = logging.getLogger(__name__)

# Load environment variables
env_path = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), '.env')
load_dotenv(env_path)


def _as_int(name: str, raw, default: int) -> int:
    if isinstance(raw, int):
        return raw
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None


class Config:
    OUTPUT_DIR = os.getenv('OUTPUT_DIR', 'output')
    THREADS = os.getenv('THREADS', '')
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
    LOG_FILE = os.getenv('LOG_FILE', '')

    @classmethod
    def validate(cls):
        """Validate environment configuration"""
        cls.THREADS = _as_int('THREADS', cls.THREADS, os.cpu_count() or 1)
        if cls.THREADS < 1:
            logger.error(f"THREADS: {cls.THREADS}")
            raise ConfigError(f"THREADS must be at least 1, got {cls.THREADS}")
        if cls.LOG_LEVEL not in logging._nameToLevel:
            logger.error(f"LOG_LEVEL: {cls.LOG_LEVEL}")
            raise ConfigError(f"Unknown LOG_LEVEL {cls.LOG_LEVEL!r}")
        if not cls.OUTPUT_DIR:
            raise ConfigError("OUTPUT_DIR must not be empty")


def configure_logging(verbose: bool = False):
    """Configure root logging from the environment settings"""
    handlers = [logging.StreamHandler()]
    if Config.LOG_FILE:
        handlers.append(logging.FileHandler(Config.LOG_FILE, encoding='utf-8'))
    logging.basicConfig(
        format=LOG_FORMAT,
        datefmt=LOG_DATEFMT,
        level=logging.DEBUG if verbose else Config.LOG_LEVEL,
        handlers=handlers,
    )


FLOAT_KEYS = ('E_g', 'E_w', 'V', 'dV', 'W', 'd_eps', 'band_center', 'hbar', 't_max')
INT_KEYS = ('N', 't_steps')
DEFAULT_T_MAX = 8000.0
DEFAULT_T_STEPS = 4000


@dataclass(frozen=True)
class RunConfig:
    """Validated model parameters plus the time grid of a run"""
    params: ModelParams
    t_max: float = DEFAULT_T_MAX
    t_steps: int = DEFAULT_T_STEPS

    def with_params(self, **fields) -> 'RunConfig':
        return RunConfig(self.params.with_updates(**fields), self.t_max, self.t_steps)


def _parse_value(key: str, raw: str, line_no: int):
    if key in INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"Line {line_no}: {key} must be an integer, got {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"Line {line_no}: {key} must be a number, got {raw!r}") from None


def parse_run_config(text: str, source: str = '<string>') -> RunConfig:
    """Parse ``key = value`` lines; '#' starts a comment, missing keys take defaults"""
    values: Dict[str, object] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}, line {line_no}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split('=', 1))
        if key not in FLOAT_KEYS and key not in INT_KEYS:
            raise ConfigError(f"{source}, line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}, line {line_no}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, line_no)

    t_max = values.pop('t_max', DEFAULT_T_MAX)
    t_steps = values.pop('t_steps', DEFAULT_T_STEPS)
    params = ModelParams(**values)
    return build_run_config(params, t_max, t_steps, source)


def build_run_config(params: ModelParams, t_max: float = DEFAULT_T_MAX, t_steps: int = DEFAULT_T_STEPS,
                     source: str = '<preset>') -> RunConfig:
    """Check the parameter invariants and the time grid"""
    violations = validate_params(params)
    if not t_max > 0:
        violations.append(f"t_max must be positive, got {t_max!r}")
    if t_steps < 2:
        violations.append(f"t_steps must be at least 2, got {t_steps}")
    if violations:
        raise ConfigError(f"{source}: " + "; ".join(violations))
    return RunConfig(params, float(t_max), int(t_steps))


def load_run_config(path: str) -> RunConfig:
    """Read a run configuration file"""
    try:
        with open(path, encoding='utf-8') as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    config = parse_run_config(text, source=path)
    logger.info(f"Loaded run configuration from {path}")
    return config


def example_run_config(example: int, t_max: Optional[float] = None, t_steps: Optional[int] = None) -> RunConfig:
    try:
        params = example_params(example)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return build_run_config(params, t_max or DEFAULT_T_MAX, t_steps or DEFAULT_T_STEPS, f"example {example}")
