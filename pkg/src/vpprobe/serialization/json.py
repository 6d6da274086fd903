"""JSON output for solve reports and configurations."""

import json
import math
from collections.abc import Mapping
from typing import Any, cast

import numpy as np

type JsonDict = dict[str, Any]


class JSONSerializer:
    """Deterministic JSON: sorted keys, shortest round-trip floats, no NaN literals."""

    def serialize(self, data: Mapping[str, Any], /, *, indent: int | None = 2) -> str:
        """
        Serialize a mapping, converting numpy values and non-finite floats.

        Examples:
            >>> JSONSerializer().serialize({"b": np.float64(1.5), "a": math.inf}, indent=None)
            '{"a": "inf", "b": 1.5}'
        """
        prepared = self._prepare_data(data)
        return json.dumps(prepared, indent=indent, sort_keys=True, ensure_ascii=False, allow_nan=False)

    def deserialize(self, data: str, /) -> JsonDict:
        return cast(JsonDict, json.loads(data))

    def _prepare_data(self, value: Any) -> Any:
        if isinstance(value, Mapping):
            return {str(k): self._prepare_data(v) for k, v in value.items()}
        if isinstance(value, np.ndarray):
            return [self._prepare_data(v) for v in value.tolist()]
        if isinstance(value, (list, tuple)):
            return [self._prepare_data(v) for v in value]
        if isinstance(value, np.generic):
            value = value.item()
        if isinstance(value, float) and not math.isfinite(value):
            return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return value
