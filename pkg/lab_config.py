"""
Configuration for the B-free approximation lab
Reads .env, an optional JSON config file and BFREE_LAB_* environment overrides
"""

import os
import json
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Dict, Any

from dotenv import load_dotenv

from lab_errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "bfree_lab.json"

# env var -> (config field, parser)
ENV_OVERRIDES = {
    "BFREE_LAB_THREADS": ("threads", int),
    "BFREE_LAB_PRECISION": ("precision", int),
    "BFREE_LAB_DIGIT_BUDGET": ("digit_budget", int),
}


@dataclass(frozen=True)
class LabConfig:
    """Run-wide knobs shared by the library and the CLI"""
    threads: int = os.cpu_count() or 1
    precision: int = 50
    digit_budget: int = 10 ** 6
    inline_digits: int = 10 ** 4
    order_iteration_cap: int = 10 ** 7
    support_scan_bound: int = 10 ** 6
    scan_limit: int = 2000
    default_format: str = "json"

    def __post_init__(self):
        for name in ("threads", "precision", "digit_budget", "inline_digits",
                     "order_iteration_cap", "support_scan_bound", "scan_limit"):
            if getattr(self, name) < 1:
                raise DomainError(f"config value {name} must be >= 1, got {getattr(self, name)}")
        if self.default_format not in ("json", "csv"):
            raise DomainError(f"default_format must be json or csv, got {self.default_format!r}")


def _read_config_file(config_file: Path) -> Dict[str, Any]:
    """Load a JSON config file, rejecting keys LabConfig does not know"""
    with open(config_file, "r", encoding="utf-8") as f:
        data = json.load(f)

    if not isinstance(data, dict):
        raise DomainError(f"{config_file} must hold a JSON object")

    known = {f.name for f in fields(LabConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise DomainError(f"unknown config keys in {config_file}: {', '.join(unknown)}")
    return data


def load_config(path: Optional[str] = None) -> LabConfig:
    """
    Build the effective configuration

    Args:
        path: Explicit JSON config file; falls back to $BFREE_LAB_CONFIG, then
            bfree_lab.json in the working directory if present

    Returns:
        A frozen LabConfig
    """
    load_dotenv()

    values: Dict[str, Any] = {}
    config_path = path or os.getenv("BFREE_LAB_CONFIG")
    if config_path:
        config_file = Path(config_path)
        if not config_file.exists():
            raise DomainError(f"config file not found: {config_file}")
        values.update(_read_config_file(config_file))
    elif Path(DEFAULT_CONFIG_FILE).exists():
        values.update(_read_config_file(Path(DEFAULT_CONFIG_FILE)))

    for env_name, (field_name, parse) in ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw is None or not raw.strip():
            continue
        try:
            values[field_name] = parse(raw.strip())
        except ValueError:
            raise DomainError(f"{env_name} must be an integer, got {raw!r}")
        logger.debug("config override %s=%s from %s", field_name, values[field_name], env_name)

    return replace(LabConfig(), **values)
