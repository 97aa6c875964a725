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
from collections.abc import Sequence
from typing import Any

from opentelemetry import trace
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import ReadableSpan, TracerProvider
from opentelemetry.sdk.trace.export import (
    SimpleSpanProcessor,
    SpanExporter,
    SpanExportResult,
)

SERVICE_NAME = "rabi-spectra"
# Attribute payloads above this size are replaced by a summary.
MAX_ATTRIBUTE_BYTES = 16 * 1024


class LoggingSpanExporter(SpanExporter):
    """
    A span exporter that writes each finished span as one JSON log record.

    Spans around eigensolves and inertia counts carry the matrix dimension,
    cutoffs and spectral parameters, which makes slow runs easy to attribute
    from the log alone.
    """

    def __init__(
        self,
        logger: logging.Logger | None = None,
        debug: bool = False,
        max_attribute_bytes: int = MAX_ATTRIBUTE_BYTES,
    ) -> None:
        """
        Initialize the exporter.

        :param logger: Logger receiving the span records
        :param debug: Also print the span dictionaries
        :param max_attribute_bytes: Size above which attributes are summarised
        """
        self.logger = logger or logging.getLogger(__name__)
        self.debug = debug
        self.max_attribute_bytes = max_attribute_bytes

    def export(self, spans: Sequence[ReadableSpan]) -> SpanExportResult:
        """
        Export the spans to the log.

        :param spans: A sequence of spans to export
        :return: The result of the export operation
        """
        for span in spans:
            span_context = span.get_span_context()
            span_dict = json.loads(span.to_json())
            span_dict["trace_id"] = format(span_context.trace_id, "x")
            span_dict["span_id"] = format(span_context.span_id, "x")
            span_dict["labels"] = {
                "type": "spectral_telemetry",
                "service_name": SERVICE_NAME,
            }
            span_dict = self._process_large_attributes(span_dict)

            if self.debug:
                print(span_dict)

            self.logger.info(json.dumps(span_dict, sort_keys=True))
        return SpanExportResult.SUCCESS

    def shutdown(self) -> None:
        return None

    def _process_large_attributes(self, span_dict: dict[str, Any]) -> dict[str, Any]:
        """
        Replace oversized attribute payloads by their key list and size.

        :param span_dict: The span data dictionary
        :return: The updated span dictionary
        """
        attributes = span_dict.get("attributes") or {}
        size = len(json.dumps(attributes).encode())
        if size > self.max_attribute_bytes:
            span_dict["attributes"] = {
                "truncated_keys": sorted(attributes),
                "payload_bytes": size,
            }
            logging.info(
                f"Span attributes of {size} bytes exceed {self.max_attribute_bytes}, "
                "logging a summary instead"
            )
        return span_dict


def configure_tracing(enabled: bool = True, debug: bool = False) -> TracerProvider | None:
    """Installs a tracer provider that logs spans through LoggingSpanExporter.

    Args:
        enabled: When False nothing is installed and spans stay no-ops.
        debug: Passed to the exporter.

    Returns:
        The installed provider, or None.
    """
    if not enabled:
        return None
    provider = TracerProvider(resource=Resource.create({"service.name": SERVICE_NAME}))
    provider.add_span_processor(SimpleSpanProcessor(LoggingSpanExporter(debug=debug)))
    trace.set_tracer_provider(provider)
    return provider


def get_tracer(name: str) -> trace.Tracer:
    return trace.get_tracer(name)
