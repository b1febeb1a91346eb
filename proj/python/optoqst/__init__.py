# Copyright 2026 The optoqst Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the optoqst simulator.

The heavy lifting lives in the compiled ``optoqst._core`` module; this package
adds JSON decoding of results and a small ``Result`` record.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import _core
from ._core import (
    ConfigError,
    ConvergenceError,
    DimensionLimitError,
    Error,
    InstabilityError,
    InvalidArgument,
    polariton_frequencies,
    pst_profile,
    stability_bound,
    symplectic_oracle,
)

__version__ = _core.__version__

EXIT_OK, EXIT_PHYSICS, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3


@dataclass
class Result:
    exit_code: int
    summary: str
    columns: list[str]
    rows: list[list[float | str]]
    metadata: dict | None
    files: list[Path] = field(default_factory=list)

    def column(self, name: str) -> list[float | str]:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]


def schema() -> dict:
    """The experiment config schema bundled with the library."""
    return json.loads(_core.experiment_schema())


def validate_config(config: dict) -> list[str]:
    """Schema violations of ``config``; empty when valid."""
    return list(_core.validate_config(json.dumps(config)))


def run(command: str, config: str | Path, out_dir: str | Path = ".", *, threads: int = 1,
        force_dim: bool = False, gnuplot_script: bool = False, write_files: bool = True) -> Result:
    """Run ``check``, ``simulate``, ``sweep`` or ``bidirectional`` on a config file."""
    d = _core.run_command(command, str(config), str(out_dir), threads, force_dim, gnuplot_script, write_files)
    return Result(d["exit_code"], d["summary"], list(d["columns"]), [list(r) for r in d["rows"]],
                  json.loads(d["metadata_json"]), [Path(f) for f in d["files"]])


__all__ = [
    "ConfigError", "ConvergenceError", "DimensionLimitError", "Error", "InstabilityError", "InvalidArgument",
    "Result", "polariton_frequencies", "pst_profile", "run", "schema", "stability_bound", "symplectic_oracle",
    "validate_config", "EXIT_OK", "EXIT_PHYSICS", "EXIT_CONFIG", "EXIT_CONVERGENCE",
]
