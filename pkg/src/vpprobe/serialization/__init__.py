"""
Serialization for solver configurations and outputs.

TOML (read built-in, write optional), deterministic JSON reports,
environment variables and CSV tables.
"""

from .csv import read_table, write_table
from .env import ENVLoader, thread_count
from .json import JSONSerializer
from .toml import TOMLSerializer, flatten, nest, parse_value

__all__ = [
    "ENVLoader",
    "JSONSerializer",
    "TOMLSerializer",
    "flatten",
    "nest",
    "parse_value",
    "read_table",
    "thread_count",
    "write_table",
]
