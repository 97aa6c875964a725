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

import math

import pytest

from rabi_spectra.utils.typing import RabiParameters

# Couplings whose calibrated Laguerre argument 2 alpha^2 is a zero of L_1 and L_2.
ALPHA_L1_ZERO = math.sqrt(0.5)
ALPHA_L2_ZERO = math.sqrt((2.0 - math.sqrt(2.0)) / 2.0)


@pytest.fixture
def symmetric_params() -> RabiParameters:
    """Symmetric two-level couplings, alpha = 1, gamma = (1, -1)."""
    return RabiParameters(alpha=1.0, gamma1=1.0, gamma2=-1.0)


@pytest.fixture(params=[(1, ALPHA_L1_ZERO), (2, ALPHA_L2_ZERO)], ids=["L1", "L2"])
def degenerate_level(request: pytest.FixtureRequest) -> tuple[int, RabiParameters]:
    """A level N together with couplings that close its first-order splitting."""
    N, alpha = request.param
    return N, RabiParameters(alpha=alpha, gamma1=1.0, gamma2=-1.0)
