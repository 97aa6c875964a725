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

import numpy as np
import pytest

from rabi_spectra.errors import DomainError
from rabi_spectra.perturbation import (
    QUASIMODE_SIGN,
    braak_radius,
    calibrate_quasimode_sign,
    degenerate_levels,
    first_order,
    first_order_prediction,
    first_order_slopes,
    overlap_ratio,
    quasimode_form,
    quasimode_intervals,
    quasimode_residual,
    quasimode_vectors,
    second_order_curvature,
)
from rabi_spectra.specfun import laguerre_poly
from rabi_spectra.utils.typing import RabiParameters


def test_overlap_ratio_is_damped_laguerre() -> None:
    """r_N = exp(-alpha^2) L_N(2 alpha^2)."""
    for N in range(8):
        expected = math.exp(-1.0) * laguerre_poly(N, 2.0)
        assert overlap_ratio(N, 1.0) == pytest.approx(expected, abs=1e-13)


def test_first_order_split(symmetric_params: RabiParameters) -> None:
    """mu_+- = beta1 +- beta2 |r| with orthonormal eigenvectors."""
    split = first_order(0, symmetric_params)
    assert split.mu_plus == pytest.approx(math.exp(-1.0))
    assert split.mu_minus == pytest.approx(-math.exp(-1.0))
    assert not split.degenerate
    assert split.laguerre_argument == 2.0
    assert split.doubled_laguerre_argument == 4.0
    frame = np.array([split.w_plus, split.w_minus])
    assert np.allclose(frame @ frame.T, np.eye(2))
    coupling = split.beta2 * split.overlap_ratio
    matrix = np.array([[split.beta1, coupling], [coupling, split.beta1]])
    assert np.allclose(matrix @ split.w_plus, split.mu_plus * np.array(split.w_plus))
    with pytest.raises(DomainError):
        first_order(-1, symmetric_params)


def test_first_order_prediction_and_radius(symmetric_params: RabiParameters) -> None:
    """Predictions straddle N + 1/2 and stay inside [N, N+1) below the radius."""
    params = symmetric_params.model_copy(update={"eps": 0.05})
    lower, upper = first_order_prediction(3, params)
    assert lower < 3.5 < upper
    radius = braak_radius(10, symmetric_params)
    assert radius >= 0.5, "|mu| <= 1 keeps the radius above 1/2"


def test_degenerate_levels(degenerate_level: tuple[int, RabiParameters]) -> None:
    """Couplings at a Laguerre zero close the first-order splitting."""
    N, params = degenerate_level
    assert N in degenerate_levels(params.alpha, 5)
    split = first_order(N, params)
    assert split.degenerate
    assert split.mu_plus - split.mu_minus < 1e-9


def test_second_order_form_is_scalar(
    degenerate_level: tuple[int, RabiParameters],
) -> None:
    """The second-order form is a multiple of the identity."""
    N, params = degenerate_level
    form = quasimode_form(N, params)
    assert form.mu2_plus == pytest.approx(form.mu2_minus, abs=1e-12)
    matrix = np.asarray(form.matrix)
    assert abs(matrix[0, 1]) < 1e-12
    assert form.tail_estimate < 1e-20


def test_second_order_form_needs_degeneracy(symmetric_params: RabiParameters) -> None:
    """Non-degenerate levels need an explicit override."""
    with pytest.raises(DomainError):
        quasimode_form(0, symmetric_params)
    form = quasimode_form(0, symmetric_params, override=True)
    assert form.mu2_plus > 0
    with pytest.raises(DomainError):
        quasimode_form(5, symmetric_params, K=5, override=True)


def test_pair_curvature_matches_second_order_form(
    symmetric_params: RabiParameters,
) -> None:
    """The mean eps^2 coefficient of the pair is QUASIMODE_SIGN * mu2 / 2."""
    form = quasimode_form(0, symmetric_params, override=True)
    mean_curvature = 0.5 * sum(second_order_curvature(0, symmetric_params, 1e-3))
    predicted = QUASIMODE_SIGN * 0.25 * (form.mu2_plus + form.mu2_minus)
    assert mean_curvature == pytest.approx(predicted, rel=1e-3)
    assert calibrate_quasimode_sign(0, symmetric_params) == QUASIMODE_SIGN


def test_quasimode_vectors_shape(degenerate_level: tuple[int, RabiParameters]) -> None:
    """Correction vectors live on both spins up to K and avoid level N."""
    N, params = degenerate_level
    expansion = quasimode_vectors(N, params)
    size = expansion.K + 1
    for vector in (expansion.u1_plus, expansion.u2_minus):
        array = np.asarray(vector)
        assert array.shape == (2 * size,)
        assert array[N] == 0.0 and array[size + N] == 0.0
    assert expansion.mu_plus == params.beta1


def test_quasimode_residual_is_third_order(
    degenerate_level: tuple[int, RabiParameters],
) -> None:
    """Residuals fall like eps^3."""
    N, params = degenerate_level
    grid = [1e-2, 10**-2.5, 1e-3]
    residuals = [quasimode_residual(N, params, eps) for eps in grid]
    assert all(r.margin_ok for r in residuals)
    slope = np.polyfit(np.log(grid), np.log([r.residual for r in residuals]), 1)[0]
    assert slope >= 2.9, f"Residual slope {slope} below third order"


def test_quasimode_residual_cutoff_checks(
    degenerate_level: tuple[int, RabiParameters],
) -> None:
    """The residual cutoff may not fall below the vector cutoff."""
    N, params = degenerate_level
    with pytest.raises(DomainError):
        quasimode_residual(N, params, 1e-2, K=30, cutoff=20)
    assert not quasimode_residual(N, params, 1e-2, K=30, cutoff=35).margin_ok


def test_quasimode_intervals_hold_the_pair(
    degenerate_level: tuple[int, RabiParameters],
) -> None:
    """Two eigenvalues fall in the union of the eps^3 windows."""
    N, params = degenerate_level
    windows = quasimode_intervals(N, params, eps=1e-2, C=1e3)
    assert windows.union_count == 2
    (lo_minus, hi_minus), (lo_plus, hi_plus) = windows.intervals
    assert hi_minus - lo_minus == pytest.approx(2e-3)
    assert lo_minus <= lo_plus


@pytest.mark.parametrize("N", [0, 3, 6])
def test_first_order_slopes_follow_the_split(
    N: int, symmetric_params: RabiParameters
) -> None:
    """Numerical eps-slopes of the AB-frame pair agree with mu_-+."""
    split = first_order(N, symmetric_params)
    lower, upper = first_order_slopes(N, symmetric_params)
    assert lower == pytest.approx(split.mu_minus, abs=1e-4)
    assert upper == pytest.approx(split.mu_plus, abs=1e-4)
