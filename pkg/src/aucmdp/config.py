"""Plain-text experiment configuration: ``key = value`` lines, ``#``
comments, unknown keys rejected."""

from __future__ import annotations

from .harness import METHODS, Scenario
from .priors import PriorConfig


class ConfigError(Exception):
    pass


_KNOWN_KEYS = (
    "N",
    "M",
    "D",
    "pathway_length",
    "tau",
    "method",
    "seed",
    "trials",
    "repeats",
    "uct_timeout_ms",
)
_REQUIRED_KEYS = ("N", "M", "D", "pathway_length")


def parse_config_text(text: str, source: str = "<config>") -> Scenario:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}")

    def intval(key: str, default=None) -> int:
        if key not in raw:
            return default
        try:
            return int(raw[key])
        except ValueError:
            raise ConfigError(f"{source}: key {key!r} must be an integer, got {raw[key]!r}")

    tau = None
    if "tau" in raw and raw["tau"] != "10N":
        tau = intval("tau")

    method = raw.get("method", "aucmdp-regiter")
    if method not in METHODS:
        raise ConfigError(f"{source}: unknown method {method!r}; expected one of {METHODS}")

    timeout = 1000.0
    if "uct_timeout_ms" in raw:
        try:
            timeout = float(raw["uct_timeout_ms"])
        except ValueError:
            raise ConfigError(f"{source}: key 'uct_timeout_ms' must be a number")

    try:
        prior = PriorConfig(
            n_agents=intval("N"),
            n_resources=intval("M"),
            n_conditions=intval("D"),
            pathway_length=intval("pathway_length"),
        )
        return Scenario(
            prior=prior,
            method=method,
            tau=tau,
            trials=intval("trials", 1),
            repeats=intval("repeats", 1),
            seed=intval("seed", 0),
            uct_timeout_ms=timeout,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> Scenario:
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))
