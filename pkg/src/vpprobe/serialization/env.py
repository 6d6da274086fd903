"""Environment variable loading for solver configurations."""

import os
import types
from typing import Any, Union, get_args, get_origin

type Schema = dict[str, tuple[Any, Any]]

THREADS_VARIABLE = "VPPROBE_THREADS"


class ENVLoader:
    """Load settings from variables named PREFIX + SECTION__KEY."""

    @staticmethod
    def variable_name(prefix: str, setting: str) -> str:
        """
        Examples:
            >>> ENVLoader.variable_name("VPPROBE_", "physics.r_b")
            'VPPROBE_PHYSICS__R_B'
        """
        return f"{prefix}{setting.upper().replace('.', '__')}"

    @staticmethod
    def load(prefix: str, /, *, schema: Schema) -> dict[str, Any]:
        """
        Only settings with a matching variable are returned; defaults are not filled in.

        Raises:
            ValueError: If a value cannot be converted to its setting type.
        """
        lookup = {key.upper(): value for key, value in os.environ.items()}
        result = {}
        for name, (setting_type, _default) in schema.items():
            raw = lookup.get(ENVLoader.variable_name(prefix, name).upper())
            if raw is not None:
                result[name] = ENVLoader._convert_type(raw, setting_type, name)
        return result

    @staticmethod
    def _convert_type(value: str, target_type: Any, name: str) -> Any:
        origin = get_origin(target_type)
        if origin is Union or origin is types.UnionType:
            if value.strip().lower() in ("none", "null", ""):
                return None
            target_type = next(a for a in get_args(target_type) if a is not type(None))
            origin = get_origin(target_type)

        if target_type is bool:
            return value.strip().lower() in ("true", "1", "yes", "on")

        try:
            if origin is list:
                (item_type,) = get_args(target_type)
                return [item_type(item) for item in value.split(",") if item.strip()]
            return target_type(value)
        except (ValueError, TypeError) as e:
            type_name = getattr(target_type, "__name__", str(target_type))
            raise ValueError(
                f"Cannot convert environment variable for '{name}' value '{value}' to {type_name}: {e}"
            ) from e


def thread_count(default: int = 1) -> int:
    """
    Worker count for sweeps from VPPROBE_THREADS.

    Raises:
        ValueError: If the variable is set to something other than a positive integer.
    """
    raw = os.environ.get(THREADS_VARIABLE, "").strip()
    if not raw:
        return default
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_VARIABLE} must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ValueError(f"{THREADS_VARIABLE} must be a positive integer, got {raw!r}")
    return count
