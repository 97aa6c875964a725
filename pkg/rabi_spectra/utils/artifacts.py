# Copyright 2025 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import logging
import re
import struct
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel

from rabi_spectra.errors import ContractViolation, SpecError
from rabi_spectra.fock_ops import TruncatedOperator
from rabi_spectra.utils import typing as result_types
from rabi_spectra.utils.typing import BasisDescriptor

# Result models whose JSON schemas are shipped with the artifacts.
SCHEMA_MODELS: tuple[type[BaseModel], ...] = (
    result_types.ModelSpec,
    result_types.OverlapResult,
    result_types.LaguerreZeroSet,
    result_types.AvoidanceSequence,
    result_types.FirstOrderSplit,
    result_types.QuasimodeForm,
    result_types.QuasimodeExpansion,
    result_types.QuasimodeResidual,
    result_types.QuasimodeIntervals,
    result_types.Spectrum,
    result_types.IntervalReport,
    result_types.WeylPrediction,
    result_types.SymbolSample,
    result_types.SmgesReport,
    result_types.CountingTable,
)

MATRIX_HEADER_FORMAT = "<Q"
# Commas inside [...] belong to a list value.
_TOP_LEVEL_COMMA = re.compile(r",(?![^\[]*\])")


def parse_overrides(overrides: str | None) -> dict[str, Any]:
    """Parse configuration overrides from a comma-separated KEY=VALUE string.

    Values are read as YAML scalars or flow lists, so "eps=0.02" gives a float
    and "lambdas=[10.5, 15.5]" a list.

    Args:
        overrides: Comma-separated list of overrides in KEY=VALUE format

    Returns:
        Dictionary of overrides with keys stripped of whitespace
    """
    parsed: dict[str, Any] = {}
    if overrides:
        for pair in _TOP_LEVEL_COMMA.split(overrides):
            if "=" in pair:
                key, value = pair.split("=", 1)
                parsed[key.strip()] = yaml.safe_load(value.strip())
            else:
                logging.warning(f"Skipping malformed override pair: {pair}")
    return parsed


def load_config(path: str | Path) -> dict[str, Any]:
    """Reads a flat YAML mapping of RunConfig fields."""
    with open(path) as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, Mapping):
        raise SpecError(f"Config file {path} must hold a mapping, got {type(data).__name__}")
    return dict(data)


def render_json(payload: Mapping[str, Any]) -> str:
    """Sorted keys, two-space indent and a trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str] | None = None) -> str:
    frame = pd.DataFrame(list(rows), columns=list(columns) if columns else None)
    return frame.to_csv(index=False, lineterminator="\n")


def write_text(path: str | Path, text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logging.info(f"Wrote {target}")
    return target


def write_json(path: str | Path, payload: Mapping[str, Any]) -> Path:
    return write_text(path, render_json(payload))


def write_csv(
    path: str | Path,
    rows: Sequence[Mapping[str, Any]],
    columns: Sequence[str] | None = None,
) -> Path:
    return write_text(path, render_csv(rows, columns))


def write_schemas(directory: str | Path) -> list[Path]:
    """Writes one <Model>.schema.json per result model.

    Args:
        directory: Target directory, created if missing

    Returns:
        The written paths in model order
    """
    target = Path(directory)
    return [
        write_json(
            target / f"{model.__name__}.schema.json",
            model.model_json_schema(mode="serialization"),
        )
        for model in SCHEMA_MODELS
    ]


def dump_matrix(op: TruncatedOperator, path: str | Path) -> Path:
    """Binary dump: header length, JSON header, row-major little-endian float64.

    The header records the basis descriptor and the matrix shape.
    """
    header = json.dumps(
        {"basis": op.basis.model_dump(), "shape": list(op.matrix.shape)},
        sort_keys=True,
    ).encode()
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "wb") as f:
        f.write(struct.pack(MATRIX_HEADER_FORMAT, len(header)))
        f.write(header)
        f.write(np.ascontiguousarray(op.matrix, dtype="<f8").tobytes())
    return target


def load_matrix(path: str | Path) -> TruncatedOperator:
    with open(path, "rb") as f:
        (length,) = struct.unpack(MATRIX_HEADER_FORMAT, f.read(struct.calcsize(MATRIX_HEADER_FORMAT)))
        header = json.loads(f.read(length))
        payload = f.read()
    shape = tuple(header["shape"])
    expected = int(np.prod(shape)) * 8
    if len(payload) != expected:
        raise ContractViolation(
            f"Matrix payload of {len(payload)} bytes does not match shape {shape}",
            path=str(path),
        )
    matrix = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(float)
    return TruncatedOperator(
        basis=BasisDescriptor.model_validate(header["basis"]), matrix=matrix
    )
