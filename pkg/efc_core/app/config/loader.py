"""
Чтение плоского конфига контура.

Формат: строки `ключ = значение`, ключи с точками (`pid.kp`), допускаются
заголовки `[секция]` (префикс для последующих ключей) и комментарии `#`.
Значение через запятую задаёт вектор по каналам. Итоговый вложенный словарь
проверяется моделью LoopConfig; неизвестный ключ считается ошибкой.
"""
from __future__ import annotations

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError

from efc_core.app.models.dto import LoopConfig
from efc_core.app.models.errors import ConfigurationError

logger = logging.getLogger(__name__)


def parse_value(raw: str) -> Any:
    raw = raw.strip()
    if "," in raw:
        return [parse_value(part) for part in raw.split(",")]
    lowered = raw.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _assign(tree: Dict[str, Any], key: str, value: Any, *, replace: bool) -> None:
    parts = key.split(".")
    if not all(parts):
        raise ConfigurationError(f"malformed key {key!r}", key=key)
    node = tree
    for i, part in enumerate(parts[:-1]):
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"{key}: '{'.'.join(parts[:i + 1])}' already holds a value", key=key)
        node = child
    leaf = parts[-1]
    if isinstance(node.get(leaf), dict):
        raise ConfigurationError(f"{key}: is a section, not a value", key=key)
    if leaf in node and not replace:
        raise ConfigurationError(f"duplicate key {key!r}", key=key)
    node[leaf] = value


def _split(line: str, where: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigurationError(f"{where}: expected 'key = value', got {line!r}")
    key, value = (s.strip() for s in line.split("=", 1))
    if not key:
        raise ConfigurationError(f"{where}: missing key")
    if not value:
        raise ConfigurationError(f"{key}: empty value", key=key)
    return key, value


def parse_tree(text: str, *, source: str = "<config>") -> Dict[str, Any]:
    tree: Dict[str, Any] = {}
    prefix = ""
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            prefix = f"{section}." if section else ""
            continue
        key, value = _split(line, f"{source}:{lineno}")
        _assign(tree, prefix + key, parse_value(value), replace=False)
    return tree


def apply_overrides(tree: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Переопределения `k=v` из командной строки побеждают значения из файла."""
    for item in overrides:
        key, value = _split(item, "override")
        _assign(tree, key, parse_value(value), replace=True)
        logger.info("[CONFIG] Override %s = %s", key, value)
    return tree


def build_config(tree: Dict[str, Any]) -> LoopConfig:
    try:
        return LoopConfig.model_validate(tree)
    except ValidationError as exc:
        err = exc.errors()[0]
        key = ".".join(str(part) for part in err["loc"]) or "<root>"
        raise ConfigurationError(f"{key}: {err['msg']}", key=key) from exc


def parse_text(text: str, overrides: Sequence[str] = (), *, source: str = "<config>") -> LoopConfig:
    return build_config(apply_overrides(parse_tree(text, source=source), overrides))


def parse_config(path: str | Path, overrides: Sequence[str] = ()) -> LoopConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    config = parse_text(text, overrides, source=str(path))
    logger.info("[CONFIG] Loaded %s (mode=%s, dt=%g, n_steps=%d)", path, config.mode.value, config.dt, config.n_steps)
    return config


def _format_value(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


def _flatten(data: Dict[str, Any], prefix: str = "") -> List[str]:
    lines: List[str] = []
    for key, value in data.items():
        full = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(_flatten(value, f"{full}."))
        elif value is None:
            lines.append(f"# {full} =")
        else:
            lines.append(f"{full} = {_format_value(value)}")
    return lines


def format_defaults(config: Optional[LoopConfig] = None) -> str:
    """Полный конфиг в плоском формате; None-поля выводятся закомментированными."""
    config = config or LoopConfig()
    data = config.model_dump()
    lines = ["# efc-loop configuration"]
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append("")
            lines.extend(_flatten(value, f"{key}."))
        else:
            lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
