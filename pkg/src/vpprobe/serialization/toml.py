"""
TOML serialization for solver configurations.

Read support: built-in via tomllib
Write support: requires tomli-w (optional dependency)
"""

import tomllib
from collections.abc import Mapping
from typing import Any, cast

try:
    import tomli_w

    HAS_TOML_WRITE = True
except ImportError:
    HAS_TOML_WRITE = False

type TomlDict = dict[str, Any]


def flatten(data: Mapping[str, Any], /, prefix: str = "") -> TomlDict:
    """
    Collapse nested tables into dotted keys.

    Examples:
        >>> flatten({"physics": {"r_b": 2.0}, "grid.x_nodes": 101})
        {'physics.r_b': 2.0, 'grid.x_nodes': 101}
    """
    flat: TomlDict = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


def nest(data: Mapping[str, Any], /) -> TomlDict:
    """Inverse of flatten for one level of sections."""
    nested: TomlDict = {}
    for key, value in data.items():
        section, _, name = key.partition(".")
        if name:
            nested.setdefault(section, {})[name] = value
        else:
            nested[section] = value
    return nested


class TOMLSerializer:
    """TOML serializer with read (built-in) and optional write support."""

    def serialize(self, values: Mapping[str, Any], /) -> str:
        """
        Write dotted settings as one table per section.

        None values are omitted since TOML has no null.

        Raises:
            ImportError: If tomli-w is not installed.
        """
        if not HAS_TOML_WRITE:
            raise ImportError(
                "TOML writing requires 'tomli-w' package.\n"
                "Install with: pip install vpprobe[toml]"
            )
        present = {k: v for k, v in values.items() if v is not None}
        return cast(str, tomli_w.dumps(nest(present)))

    def deserialize(self, data: str | bytes, /) -> TomlDict:
        """Parse TOML into a flat mapping of dotted keys."""
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return flatten(tomllib.loads(data))


def parse_value(raw: str, /) -> Any:
    """
    Interpret a command-line override with TOML value syntax, falling back to a bare string.

    Examples:
        >>> parse_value("-1.5"), parse_value("[0.0, -1.0]"), parse_value("box")
        (-1.5, [0.0, -1.0], 'box')
    """
    try:
        return tomllib.loads(f"value = {raw}")["value"]
    except tomllib.TOMLDecodeError:
        return raw
