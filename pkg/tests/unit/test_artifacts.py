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
from pathlib import Path

import numpy as np
import pytest

from rabi_spectra.errors import ContractViolation, SpecError
from rabi_spectra.fock_ops import build
from rabi_spectra.utils.artifacts import (
    SCHEMA_MODELS,
    dump_matrix,
    load_config,
    load_matrix,
    parse_overrides,
    render_csv,
    render_json,
    write_csv,
    write_schemas,
)
from rabi_spectra.utils.typing import ModelSpec


def test_parse_overrides(caplog: pytest.LogCaptureFixture) -> None:
    """Scalars and flow lists are parsed as YAML, malformed pairs skipped."""
    with caplog.at_level(logging.WARNING):
        parsed = parse_overrides("eps=0.02, family=QR,lambdas=[10.5, 15.5],bogus")
    assert parsed == {"eps": 0.02, "family": "QR", "lambdas": [10.5, 15.5]}
    assert "bogus" in caplog.text
    assert parse_overrides(None) == {}
    assert parse_overrides("") == {}


def test_load_config(tmp_path: Path) -> None:
    """Only YAML mappings are accepted."""
    good = tmp_path / "run.yaml"
    good.write_text("alpha: 1.5\ncutoff: 80\n")
    assert load_config(good) == {"alpha": 1.5, "cutoff": 80}

    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert load_config(empty) == {}

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(SpecError):
        load_config(listing)


def test_render_json_is_canonical() -> None:
    """Sorted keys and a single trailing newline."""
    text = render_json({"b": 1, "a": [1.5, 2]})
    assert text == '{\n  "a": [\n    1.5,\n    2\n  ],\n  "b": 1\n}\n'


def test_render_csv_uses_lf() -> None:
    """Rows render with a header and LF line endings."""
    text = render_csv([{"N": 0, "value": 1.5}, {"N": 1, "value": -0.25}])
    assert text == "N,value\n0,1.5\n1,-0.25\n"
    assert "\r" not in text


def test_matrix_dump_restores_operator(tmp_path: Path) -> None:
    """The binary dump keeps the basis and every matrix bit."""
    op = build(ModelSpec.qr(alpha=0.8, gamma1=1.0, gamma2=-1.0, eps=0.1, cutoff=12))
    path = dump_matrix(op, tmp_path / "qr.bin")
    restored = load_matrix(path)
    assert restored.basis == op.basis
    assert np.array_equal(restored.matrix, op.matrix)


def test_truncated_matrix_dump_is_rejected(tmp_path: Path) -> None:
    """A payload shorter than the header shape raises ContractViolation."""
    op = build(ModelSpec.qr(alpha=0.8, gamma1=1.0, gamma2=-1.0, eps=0.1, cutoff=4))
    path = dump_matrix(op, tmp_path / "qr.bin")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ContractViolation):
        load_matrix(path)


def test_write_schemas(tmp_path: Path) -> None:
    """One JSON schema per result model."""
    paths = write_schemas(tmp_path / "schemas")
    assert len(paths) == len(SCHEMA_MODELS)
    names = {path.name for path in paths}
    assert "Spectrum.schema.json" in names
    schema = json.loads((tmp_path / "schemas" / "CountingTable.schema.json").read_text())
    assert schema["title"] == "CountingTable"


SHIPPED_SCHEMAS = Path(__file__).resolve().parents[2] / "schemas"


def test_shipped_schemas_match_models(tmp_path: Path) -> None:
    """schemas/ holds exactly what write_schemas generates for the current models."""
    generated = {path.name: path for path in write_schemas(tmp_path)}
    shipped = {path.name: path for path in SHIPPED_SCHEMAS.glob("*.schema.json")}
    assert sorted(shipped) == sorted(generated), "schemas/ is out of step with SCHEMA_MODELS"
    for name, path in generated.items():
        assert json.loads(shipped[name].read_text()) == json.loads(path.read_text()), (
            f"{name} differs from the model; regenerate with `rabi-spectra --out schemas schema`"
        )


def test_write_csv_keeps_column_order(tmp_path: Path) -> None:
    """Explicit columns fix the header order and missing parents are created."""
    path = write_csv(
        tmp_path / "tables" / "counts.csv",
        [{"count": 2, "N": 0}, {"count": 2, "N": 1}],
        columns=["N", "count"],
    )
    assert path.read_bytes() == b"N,count\n0,2\n1,2\n"
