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
"""Error types raised by the spectral toolkit.

Every error carries a distinct process exit code so that the command line can
report failures in a machine-readable way.
"""

from typing import Any

# click reports usage errors (unknown command, bad flag, bad config key) with 2.
USAGE_EXIT_CODE = 2


class RabiSpectraError(Exception):
    """Base class for all toolkit errors."""

    code: int = 1
    kind: str = "RabiSpectraError"

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        """Machine-readable form written by the command line on failure."""
        payload: dict[str, Any] = {
            "kind": self.kind,
            "code": self.code,
            "message": self.message,
        }
        if self.context:
            payload["context"] = self.context
        return payload


class SpecError(RabiSpectraError):
    """A model specification violates its family's invariants."""

    code = 3
    kind = "SpecError"


class DegenerateInput(RabiSpectraError):
    """The avoidance sequence was started at (numerically) a Laguerre zero."""

    code = 4
    kind = "DegenerateInput"


class InsufficientNodes(RabiSpectraError):
    """Gauss-Hermite rule too small to integrate the requested polynomial exactly."""

    code = 5
    kind = "InsufficientNodes"


class CoverageError(RabiSpectraError):
    """Interval counting asked for eigenvalues beyond the converged range."""

    code = 6
    kind = "CoverageError"

    def __init__(self, message: str, first_uncovered: int, **context: Any) -> None:
        super().__init__(message, first_uncovered=first_uncovered, **context)
        self.first_uncovered = first_uncovered


class PrecisionError(RabiSpectraError):
    """Polynomial degree above the supported precision cap."""

    code = 7
    kind = "PrecisionError"


class NumericError(RabiSpectraError):
    """An eigen iteration or factorization did not converge."""

    code = 8
    kind = "NumericError"


class ContractViolation(RabiSpectraError):
    """An operation received input outside its contract (e.g. non-symmetric)."""

    code = 9
    kind = "ContractViolation"


class DomainError(RabiSpectraError):
    """Argument outside the domain of an operation."""

    code = 10
    kind = "DomainError"


ERROR_TYPES: tuple[type[RabiSpectraError], ...] = (
    SpecError,
    DegenerateInput,
    InsufficientNodes,
    CoverageError,
    PrecisionError,
    NumericError,
    ContractViolation,
    DomainError,
)

EXIT_CODES: dict[str, int] = {
    "usage": USAGE_EXIT_CODE,
    **{error_type.kind: error_type.code for error_type in ERROR_TYPES},
}
