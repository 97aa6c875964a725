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
from typing import Any

import pytest
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor

from rabi_spectra.utils.tracing import SERVICE_NAME, LoggingSpanExporter, configure_tracing


def _records(caplog: pytest.LogCaptureFixture, name: str) -> list[dict[str, Any]]:
    return [json.loads(r.getMessage()) for r in caplog.records if r.name == name]


def test_spans_are_logged_as_json(caplog: pytest.LogCaptureFixture) -> None:
    """Finished spans become one labelled JSON record each."""
    logger = logging.getLogger("tests.spans")
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(LoggingSpanExporter(logger=logger)))
    tracer = provider.get_tracer(__name__)

    with caplog.at_level(logging.INFO, logger="tests.spans"):
        with tracer.start_as_current_span("eigen_spectrum") as span:
            span.set_attribute("dimension", 402)

    (record,) = _records(caplog, "tests.spans")
    assert record["name"] == "eigen_spectrum"
    assert record["attributes"] == {"dimension": 402}
    assert record["labels"]["service_name"] == SERVICE_NAME
    assert len(record["trace_id"]) > 0


def test_large_attributes_are_summarised(caplog: pytest.LogCaptureFixture) -> None:
    """Attribute payloads above the limit are replaced by their keys and size."""
    logger = logging.getLogger("tests.spans.large")
    exporter = LoggingSpanExporter(logger=logger, max_attribute_bytes=64)
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(exporter))
    tracer = provider.get_tracer(__name__)

    with caplog.at_level(logging.INFO):
        with tracer.start_as_current_span("empirical_counting") as span:
            span.set_attribute("lambdas", [float(i) for i in range(50)])
            span.set_attribute("dimension", 11163)

    (record,) = _records(caplog, "tests.spans.large")
    assert record["attributes"]["truncated_keys"] == ["dimension", "lambdas"]
    assert record["attributes"]["payload_bytes"] > 64


def test_disabled_tracing_installs_nothing() -> None:
    """configure_tracing(False) leaves the global provider alone."""
    assert configure_tracing(enabled=False) is None
