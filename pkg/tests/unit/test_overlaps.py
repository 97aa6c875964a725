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

from rabi_spectra.errors import DomainError, InsufficientNodes
from rabi_spectra.overlaps import (
    DISPLACEMENT_COEFF,
    calibrate_displacement,
    cauchy_schwarz_scale,
    displacement_matrix,
    doubled_laguerre_argument,
    gauss_hermite,
    laguerre_argument,
    overlap,
    overlap_closed,
    overlap_quadrature,
)
from rabi_spectra.specfun import laguerre_poly


def test_gauss_hermite_moments() -> None:
    """The rule integrates x^{2j} exp(-x^2) exactly: Gamma(j + 1/2)."""
    x, w = gauss_hermite(12)
    for j in range(12):
        assert math.fsum(w * x ** (2 * j)) == pytest.approx(math.gamma(j + 0.5), rel=1e-13)
    assert np.allclose(x, -x[::-1]), "Nodes must be symmetric"
    with pytest.raises(ValueError):
        x[0] = 1.0


def test_gauss_hermite_matches_numpy() -> None:
    """Nodes and weights agree with numpy's Gauss-Hermite rule."""
    x, w = gauss_hermite(40)
    reference_x, reference_w = np.polynomial.hermite.hermgauss(40)
    assert np.allclose(x, reference_x, atol=1e-13)
    assert np.allclose(w, reference_w, rtol=1e-10, atol=0.0)


def test_orthonormality_case() -> None:
    """At alpha = 0 the (1, 1) overlap is the squared norm sqrt(pi) 1!."""
    result = overlap(1, 1, 0.0)
    assert result.value == pytest.approx(math.sqrt(math.pi))
    assert result.method == "closed_form"
    assert result.cauchy_schwarz_bound == pytest.approx(math.sqrt(math.pi))
    assert overlap_closed(2, 3, 0.0) == 0.0, "Distinct degrees are orthogonal"


def test_calibrated_displacement() -> None:
    """The (1, 1) quadrature pins the displacement coefficient to sqrt(2)."""
    assert DISPLACEMENT_COEFF == math.sqrt(2.0)
    for alpha in (0.3, 0.7, 1.3):
        assert calibrate_displacement(alpha) == pytest.approx(math.sqrt(2.0), abs=1e-10)


def test_laguerre_arguments() -> None:
    """The calibrated argument is 2 alpha^2, half the printed 4 alpha^2."""
    assert laguerre_argument(0.5) == 0.5
    assert doubled_laguerre_argument(0.5) == 1.0


def test_closed_form_matches_quadrature() -> None:
    """Closed form and quadrature agree on the Cauchy-Schwarz scale."""
    for alpha in (0.1, 0.5, 1.0, 2.0):
        for N in range(0, 13, 3):
            for k in range(0, 13, 4):
                closed = overlap_closed(N, k, alpha)
                quadrature = overlap_quadrature(N, k, alpha, nodes=60)
                scale = cauchy_schwarz_scale(N, k)
                assert abs(closed - quadrature) <= 1e-12 * scale, (
                    f"Overlap ({N}, {k}) at alpha={alpha} disagrees"
                )


def test_minimal_nodes_are_exact() -> None:
    """floor((N + k) / 2) + 1 nodes integrate the overlap exactly."""
    N, k, alpha = 5, 4, 0.4
    nodes = (N + k) // 2 + 1
    assert overlap_quadrature(N, k, alpha, nodes) == pytest.approx(
        overlap_closed(N, k, alpha), abs=1e-12 * cauchy_schwarz_scale(N, k)
    )
    with pytest.raises(InsufficientNodes):
        overlap_quadrature(N, k, alpha, nodes - 1)


def test_diagonal_laguerre_identity() -> None:
    """overlap(N, N) = sqrt(pi) N! exp(-alpha^2) L_N(2 alpha^2)."""
    for alpha in (0.1, 0.5, 1.0, 2.0):
        for N in range(16):
            expected = (
                math.sqrt(math.pi)
                * math.factorial(N)
                * math.exp(-alpha * alpha)
                * laguerre_poly(N, laguerre_argument(alpha))
            )
            assert abs(overlap_closed(N, N, alpha) - expected) <= 1e-11 * (
                cauchy_schwarz_scale(N, N)
            ), f"Diagonal identity fails at N={N}, alpha={alpha}"


def test_displacement_matrix() -> None:
    """D is a truncated translation: near-orthogonal on low levels, read-only."""
    D = displacement_matrix(60, 0.5)
    assert D[0, 0] == pytest.approx(math.exp(-0.25))
    low = (D @ D.T)[:10, :10]
    assert np.allclose(low, np.eye(10), atol=1e-10), "Low block of D D^T should be I"
    signs = np.fromfunction(lambda i, j: (-1.0) ** (i + j), D.shape)
    assert np.allclose(D.T, signs * D), "D[k, N] = (-1)^{N+k} D[N, k]"
    assert not D.flags.writeable
    with pytest.raises(DomainError):
        displacement_matrix(-1, 0.5)


def test_explicit_zero_nodes_is_rejected() -> None:
    """nodes=0 is an explicit request, not a signal to use the default rule."""
    with pytest.raises(InsufficientNodes):
        overlap(0, 0, 1.0, "quadrature", nodes=0)
    result = overlap(0, 0, 1.0, "quadrature")
    assert result.value == pytest.approx(overlap_closed(0, 0, 1.0), rel=1e-12), (
        "Omitting nodes must still pick the exact default rule"
    )
