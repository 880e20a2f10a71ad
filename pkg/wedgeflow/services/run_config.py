"""Flat ``section.key = value`` run configuration text.

    # comment
    gas.gamma = 1.4
    inflow.row = -1, 2.4, 0.42, 1, 1.4      (repeatable)
    boundary.vertex = 0, 0                  (repeatable)
    tracking.eps = 0.01

See docs/config_format.md for every key.
"""

import logging
from pathlib import Path

from marshmallow import ValidationError

from wedgeflow.errors import ConfigError
from wedgeflow.models import RunConfig
from wedgeflow.utils.validators import RunConfigSchema

logger = logging.getLogger(__name__)

SECTIONS = ("gas", "inflow", "boundary", "tracking", "functionals", "sampling")
REPEATED = {("inflow", "row"), ("boundary", "vertex")}


def parse_sections(text: str) -> dict:
    """Raw section dict; repeated table keys become lists."""
    sections = {name: {} for name in SECTIONS}
    errors = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.setdefault(f"line {lineno}", []).append(f"expected 'section.key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            errors.setdefault(f"line {lineno}", []).append(f"key {key!r} has no section prefix")
            continue
        section, name = key.split(".", 1)
        if section not in sections:
            errors.setdefault(f"line {lineno}", []).append(
                f"unknown section {section!r} (expected one of {', '.join(SECTIONS)})")
            continue
        if (section, name) in REPEATED:
            sections[section].setdefault(name, []).append(value)
        elif name in sections[section]:
            errors.setdefault(key, []).append(f"repeated key on line {lineno}")
        else:
            sections[section][name] = None if value.lower() in ("", "none") else value
    if errors:
        raise ConfigError(errors)
    return sections


def parse_config(text: str, defaults: dict | None = None) -> RunConfig:
    """Validated RunConfig from configuration text.

    ``defaults`` maps section -> {key: value} used where the text sets nothing
    (process-level settings such as the seed).
    """
    sections = parse_sections(text)
    for section, values in (defaults or {}).items():
        for key, value in values.items():
            sections.setdefault(section, {}).setdefault(key, value)
    try:
        cfg = RunConfigSchema().load(sections)
    except ValidationError as exc:
        raise ConfigError(exc.messages) from exc
    logger.debug("parsed config: eps=%g, %d inflow rows, %d vertices", cfg.tracking.eps, len(cfg.inflow.rows),
                 len(cfg.vertices))
    return cfg


def load_config(path, defaults: dict | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError({"path": [f"cannot read {path}: {exc.strerror}"]}) from exc
    return parse_config(text, defaults)


def _num(x) -> str:
    if isinstance(x, bool):
        raise TypeError("booleans are not configuration numbers")
    if isinstance(x, int):
        return str(x)
    return f"{x:.17g}"


def _row(values) -> str:
    return ", ".join(_num(v) for v in values)


def serialize_section(name: str, struct) -> list[str]:
    """``name.field = value`` lines for every field of a config struct that is set."""
    lines = []
    for field in struct.__struct_fields__:
        value = getattr(struct, field)
        if value is None:
            continue
        if isinstance(value, tuple):
            if not value:
                continue
            lines.append(f"{name}.{field} = {_row(value)}")
        else:
            lines.append(f"{name}.{field} = {_num(value)}")
    return lines


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text of ``cfg``; parse_config(serialize_config(cfg)) == cfg."""
    lines = ["# wedgeflow run configuration", ""]
    lines += serialize_section("gas", cfg.gas)
    lines.append("")
    lines.append(f"inflow.mode = {cfg.inflow.mode}")
    lines += [f"inflow.row = {_row(r)}" for r in cfg.inflow.rows]
    lines.append("")
    lines += [f"boundary.vertex = {_row(v)}" for v in cfg.vertices]
    lines.append("")
    lines += serialize_section("tracking", cfg.tracking)
    lines.append("")
    lines += serialize_section("functionals", cfg.functionals)
    sampling = serialize_section("sampling", cfg.sampling)
    if cfg.sampling.x or cfg.sampling.ny:
        lines.append("")
        lines += sampling
    return "\n".join(lines) + "\n"
