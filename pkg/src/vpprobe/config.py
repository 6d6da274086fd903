"""
SolverConfig - typed, validated settings for probe solves.

Every setting is declared once in SCHEMA with its type, default and validator.
Assignments are type-checked (Optional and list aware) and validated; errors
carry the dotted setting name.
"""

from __future__ import annotations

import copy as _copy
import types
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union, get_args, get_origin

from . import validators as v
from .distributions import FAMILIES, BoundaryDistribution, NormReport, from_settings, norm_report
from .kinetics import Species
from .quadrature import QuadratureSpec
from .validators import Validator

ENV_PREFIX = "VPPROBE_"


@dataclass(frozen=True)
class Setting:
    """Declaration of one configuration entry."""

    name: str
    setting_type: Any
    default: Any
    validator: Validator | None = None
    doc: str = ""

    @property
    def section(self) -> str:
        return self.name.partition(".")[0]

    @property
    def type_name(self) -> str:
        return getattr(self.setting_type, "__name__", str(self.setting_type))


def _species_settings(section: str) -> list[Setting]:
    return [
        Setting(f"{section}.family", str, "box", v.one_of(*FAMILIES), "boundary distribution family"),
        Setting(f"{section}.amplitude", float, 1.0, v.all_of(v.finite(), v.non_negative())),
        Setting(f"{section}.temperature", float, 1.0, v.all_of(v.finite(), v.positive())),
        Setting(f"{section}.drift", float, 0.0, v.finite(), "half-Maxwellian mean radial velocity"),
        Setting(f"{section}.w_width", float, 1.0, v.all_of(v.finite(), v.positive())),
        Setting(f"{section}.l_half_width", float, 1.0, v.all_of(v.finite(), v.positive())),
        Setting(f"{section}.w_max", float | None, None, v.optional(v.all_of(v.finite(), v.positive()))),
        Setting(f"{section}.l_max", float | None, None, v.optional(v.all_of(v.finite(), v.positive()))),
        Setting(f"{section}.table", str | None, None, v.optional(v.file_extension(".csv"))),
        Setting(f"{section}.tail_tolerance", float, 1e-12, v.between(0.0, 1.0, inclusive=False)),
    ]


SCHEMA: dict[str, Setting] = {
    s.name: s
    for s in [
        Setting("physics.r_b", float, 2.0, v.all_of(v.finite(), v.greater_than(1.0)), "outer radius"),
        Setting("physics.phi_p", float, 0.0, v.finite(), "probe potential"),
        Setting("physics.debye_length", float, 1.0, v.all_of(v.finite(), v.positive())),
        Setting("physics.mass_ratio", float, 1.0 / 1836.0, v.all_of(v.positive(), v.range(max_val=1.0))),
        *_species_settings("ions"),
        *_species_settings("electrons"),
        Setting("grid.x_nodes", int, 201, v.range(min_val=3), "uniform nodes on x ∈ [0, 1]"),
        Setting("quadrature.l_panels", int, 8, v.range(min_val=1)),
        Setting("quadrature.l_order", int, 16, v.range(min_val=1)),
        Setting("quadrature.w_panels", int, 2, v.range(min_val=1)),
        Setting("quadrature.w_order", int, 16, v.range(min_val=1)),
        Setting("quadrature.sup_points", int, 2001, v.range(min_val=2)),
        Setting("quadrature.barrier_nodes", int, 257, v.range(min_val=2)),
        Setting("quadrature.gamma", float, 0.5, v.between(0.0, 1.0, inclusive=False)),
        Setting("quadrature.substitution", bool, True),
        Setting("solver.tol_outer", float, 1e-9, v.positive()),
        Setting("solver.tol_inner", float, 1e-10, v.positive()),
        Setting("solver.quad_tol", float, 1e-12, v.positive()),
        Setting("solver.consistency_tol", float, 1e-6, v.positive()),
        Setting("solver.max_outer", int, 50, v.range(min_val=1)),
        Setting("solver.max_inner", int, 200, v.range(min_val=1)),
        Setting("solver.relaxation", float, 1.0, v.all_of(v.positive(), v.range(max_val=1.0))),
        Setting("solver.derivative_step", float, 1e-7, v.positive()),
        Setting("run.seed", int, 0, v.non_negative()),
        Setting("run.output_dir", str, "out", v.non_empty()),
        Setting("sweep.phi_p", list[float], [], v.finite_items(), "probe potentials of a sweep"),
        Setting("sweep.warm_start", bool, False),
    ]
}

SECTIONS: tuple[str, ...] = tuple(dict.fromkeys(s.section for s in SCHEMA.values()))


class SectionView:
    """Attribute access to one section: config.physics.r_b."""

    __slots__ = ("_config", "_section")

    def __init__(self, config: SolverConfig, section: str) -> None:
        object.__setattr__(self, "_config", config)
        object.__setattr__(self, "_section", section)

    def __getattr__(self, key: str) -> Any:
        try:
            return self._config[f"{self._section}.{key}"]
        except KeyError:
            raise AttributeError(f"section '{self._section}' has no setting '{key}'") from None

    def __setattr__(self, key: str, value: Any) -> None:
        name = f"{self._section}.{key}"
        if name not in SCHEMA:
            raise AttributeError(f"section '{self._section}' has no setting '{key}'")
        self._config[name] = value

    def to_dict(self) -> dict[str, Any]:
        """Settings of this section keyed by their short name."""
        prefix = f"{self._section}."
        return {k.removeprefix(prefix): val for k, val in self._config.items() if k.startswith(prefix)}

    def __repr__(self) -> str:
        return f"<SolverConfig section '{self._section}'>"


class SolverConfig:
    """
    Type-safe settings for one solve or sweep.

    Examples:
        >>> config = SolverConfig({"physics": {"phi_p": -1.0}})
        >>> config.physics.phi_p
        -1.0
        >>> config["grid.x_nodes"] = 101
        >>> config.grid.x_nodes
        101
    """

    _values: dict[str, Any]
    _frozen: bool

    _MAX_STRING_LENGTH: int = 40
    _MAX_COLLECTION_ITEMS: int = 5

    def __init__(self, values: Mapping[str, Any] | None = None, /) -> None:
        object.__setattr__(self, "_values", {n: _copy.copy(s.default) for n, s in SCHEMA.items()})
        object.__setattr__(self, "_frozen", False)
        if values:
            self.update(values)

    # ========================================================================
    # VALUE MANAGEMENT
    # ========================================================================

    def update(self, values: Mapping[str, Any], /) -> None:
        """
        Set several settings from flat dotted keys or nested sections.

        Raises:
            KeyError: For unknown settings.
            TypeError: If a value has the wrong type.
            ValueError: If a value fails its validator.
        """
        from .serialization.toml import flatten

        for name, value in flatten(values).items():
            self._set_setting(name, value)

    def get(self, name: str, default: Any = None) -> Any:
        return self._values.get(name, default)

    def keys(self) -> Iterator[str]:
        return iter(SCHEMA)

    def items(self) -> Iterator[tuple[str, Any]]:
        return ((name, self._values[name]) for name in SCHEMA)

    def copy(self) -> SolverConfig:
        """Unfrozen copy with the current values."""
        return SolverConfig(self._values)

    def reset(self) -> None:
        """
        Restore every default.

        Raises:
            AttributeError: If the configuration is frozen.
        """
        if self._frozen:
            raise AttributeError("Cannot reset frozen SolverConfig")
        for name, setting in SCHEMA.items():
            self._values[name] = _copy.copy(setting.default)

    def freeze(self) -> None:
        object.__setattr__(self, "_frozen", True)

    def unfreeze(self) -> None:
        object.__setattr__(self, "_frozen", False)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def show(self) -> None:
        """Print all settings in a table."""
        print("Solver settings:")
        print("-" * 64)
        for name in sorted(SCHEMA):
            formatted = self._format_value_for_display(self._values[name])
            print(f"{name:<28} = {formatted:<22} {SCHEMA[name].type_name}")
        print("-" * 64)

    # ========================================================================
    # SERIALIZATION
    # ========================================================================

    def to_dict(self, /, *, nested: bool = False) -> dict[str, Any]:
        """Current values keyed by dotted name, or grouped by section."""
        from .serialization.toml import nest

        flat = {name: _copy.copy(value) for name, value in self.items()}
        return nest(flat) if nested else flat

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], /) -> SolverConfig:
        return cls(data)

    def to_json(self, file_path: str | Path | None = None, /, *, indent: int | None = 2) -> str | None:
        """JSON of the nested settings; written to file_path when given."""
        from .serialization.json import JSONSerializer

        text = JSONSerializer().serialize(self.to_dict(nested=True), indent=indent)
        if file_path:
            Path(file_path).write_text(text, encoding="utf-8")
            return None
        return text

    @classmethod
    def from_json(cls, source: str | Path, /) -> SolverConfig:
        """Load from a JSON file path or a JSON string."""
        from .serialization.json import JSONSerializer

        return cls(JSONSerializer().deserialize(_read_source(source)))

    def to_toml(self, file_path: str | Path | None = None, /) -> str | None:
        """
        TOML with one table per section.

        Requires: pip install vpprobe[toml]
        """
        from .serialization.toml import TOMLSerializer

        text = TOMLSerializer().serialize(self.to_dict())
        if file_path:
            Path(file_path).write_text(text, encoding="utf-8")
            return None
        return text

    @classmethod
    def from_toml(cls, source: str | Path, /) -> SolverConfig:
        """
        Load from a TOML file path or a TOML string.

        Raises:
            KeyError: For settings not in SCHEMA.
        """
        from .serialization.toml import TOMLSerializer

        return cls(TOMLSerializer().deserialize(_read_source(source)))

    def load_env(self, prefix: str = ENV_PREFIX, /) -> None:
        """Apply VPPROBE_<SECTION>__<KEY> variables that are set."""
        from .serialization.env import ENVLoader

        schema = {name: (s.setting_type, s.default) for name, s in SCHEMA.items()}
        for name, value in ENVLoader.load(prefix, schema=schema).items():
            self._set_setting(name, value)

    def apply_overrides(self, assignments: Iterable[str], /) -> None:
        """
        Apply "key=value" strings; values use TOML syntax.

        Raises:
            ValueError: If an assignment has no '='.
        """
        from .serialization.toml import parse_value

        for item in assignments:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ValueError(f"override must look like key=value, got {item!r}")
            self._set_setting(key.strip(), parse_value(raw.strip()))

    # ========================================================================
    # DOMAIN OBJECTS
    # ========================================================================

    def distribution(self, species: Species | str) -> BoundaryDistribution:
        """Boundary distribution of the ion or electron section."""
        section = "ions" if Species.parse(species) is Species.ION else "electrons"
        return from_settings(getattr(self, section).to_dict())

    def distributions(self) -> tuple[BoundaryDistribution, BoundaryDistribution]:
        return self.distribution(Species.ION), self.distribution(Species.ELECTRON)

    def quadrature_spec(self, *distributions: BoundaryDistribution) -> QuadratureSpec:
        """Quadrature layout covering the given (default: both) distributions."""
        q = self.quadrature.to_dict()
        return QuadratureSpec.covering(
            *(distributions or self.distributions()),
            l_panels=q["l_panels"],
            l_order=q["l_order"],
            w_panels=q["w_panels"],
            w_order=q["w_order"],
            sup_points=q["sup_points"],
            barrier_nodes=q["barrier_nodes"],
            substitution=q["substitution"],
        )

    def validate(self) -> dict[str, NormReport]:
        """
        Cross-field checks and the integrability gates of both distributions.

        Returns:
            Norm reports keyed by "ions" and "electrons".

        Raises:
            ValueError: If a distribution cannot be built or fails a gate.
        """
        for section in ("ions", "electrons"):
            if self[f"{section}.family"] == "tabulated":
                missing = [k for k in ("table", "w_max", "l_max") if self[f"{section}.{k}"] is None]
                if missing:
                    raise ValueError(f"{section}: tabulated family needs {', '.join(missing)}")
        f_i, f_e = self.distributions()
        quad = self.quadrature_spec(f_i, f_e)
        gamma = self["quadrature.gamma"]
        return {"ions": norm_report(f_i, quad, gamma), "electrons": norm_report(f_e, quad, gamma)}

    # ========================================================================
    # INTERNAL HELPERS
    # ========================================================================

    def _set_setting(self, name: str, value: Any) -> None:
        if self._frozen:
            raise AttributeError("Cannot modify frozen SolverConfig")
        if name not in SCHEMA:
            raise KeyError(f"unknown setting '{name}'")
        setting = SCHEMA[name]
        value = self._coerce(setting, value)
        self._validate_type(name, value, setting.setting_type)
        if setting.validator is not None:
            try:
                setting.validator(value)
            except (ValueError, TypeError) as e:
                raise ValueError(f"Setting '{name}': {e}") from e
        self._values[name] = value

    @staticmethod
    def _coerce(setting: Setting, value: Any) -> Any:
        # TOML and JSON write 2 for 2.0
        accepts_float = setting.setting_type is float or float in get_args(setting.setting_type)
        if accepts_float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if get_origin(setting.setting_type) is list and isinstance(value, (list, tuple)):
            return [float(x) if isinstance(x, int) and not isinstance(x, bool) else x for x in value]
        return value

    @staticmethod
    def _validate_type(name: str, value: Any, expected_type: Any) -> None:
        origin = get_origin(expected_type)
        if origin is Union or origin is types.UnionType:
            args = get_args(expected_type)
            if value is None and type(None) in args:
                return
            for arg in args:
                if arg is not type(None) and _matches(value, arg):
                    return
            names = ", ".join(getattr(a, "__name__", str(a)) for a in args if a is not type(None))
            raise TypeError(f"Setting '{name}': expected one of ({names}), got {type(value).__name__}")

        if not _matches(value, expected_type):
            expected_name = getattr(expected_type, "__name__", str(expected_type))
            raise TypeError(f"Setting '{name}': expected {expected_name}, got {type(value).__name__}")

    def _format_value_for_display(self, value: Any) -> str:
        if isinstance(value, str):
            if len(value) > self._MAX_STRING_LENGTH:
                return f"'{value[: self._MAX_STRING_LENGTH - 3]}...'"
            return f"'{value}'"
        if isinstance(value, list):
            head = ", ".join(str(x) for x in value[: self._MAX_COLLECTION_ITEMS])
            return f"[{head}, ...]" if len(value) > self._MAX_COLLECTION_ITEMS else f"[{head}]"
        return str(value)

    # ========================================================================
    # SPECIAL METHODS
    # ========================================================================

    def __contains__(self, name: str) -> bool:
        return name in SCHEMA

    def __getattr__(self, name: str) -> SectionView:
        if name.startswith("_"):
            return object.__getattribute__(self, name)  # type: ignore[no-any-return]
        if name in SECTIONS:
            return SectionView(self, name)
        raise AttributeError(f"SolverConfig has no section '{name}'")

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError(f"assign settings through a section or by key, e.g. config['{name}.<key>']")

    def __getitem__(self, name: str) -> Any:
        if name not in SCHEMA:
            raise KeyError(name)
        return self._values[name]

    def __setitem__(self, name: str, value: Any) -> None:
        self._set_setting(name, value)

    def __iter__(self) -> Iterator[str]:
        return iter(SCHEMA)

    def __len__(self) -> int:
        return len(SCHEMA)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SolverConfig):
            return NotImplemented
        return self._values == other._values

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        changed = [n for n in SCHEMA if self._values[n] != SCHEMA[n].default]
        return f"<SolverConfig, {len(changed)} settings changed>"


def _matches(value: Any, expected: Any) -> bool:
    origin = get_origin(expected)
    if origin is list:
        (item_type,) = get_args(expected)
        return isinstance(value, list) and all(_matches(x, item_type) for x in value)
    if expected is int or expected is float:
        # bool is an int subclass but never a valid number setting
        return isinstance(value, expected) and not isinstance(value, bool)
    return isinstance(value, expected)


def _read_source(source: str | Path) -> str:
    path = Path(source)
    try:
        if isinstance(source, Path) or (len(str(source)) < 255 and path.is_file()):
            return path.read_text(encoding="utf-8")
    except OSError:
        pass
    return str(source)

