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

import itertools
import math

import numpy as np
import pytest

from rabi_spectra.fock_ops import build, parity_matrix
from rabi_spectra.overlaps import (
    calibrate_displacement,
    cauchy_schwarz_scale,
    laguerre_argument,
    overlap_closed,
    overlap_quadrature,
)
from rabi_spectra.specfun import laguerre_poly, laguerre_zeros, nondegenerate_sequence
from rabi_spectra.spectral_analysis import count_below, eigen_spectrum
from rabi_spectra.utils.typing import ModelFamily, ModelSpec, RabiParameters

ALPHAS = [0.1, 0.5, 1.0, 2.0, 3.0]


@pytest.mark.parametrize("alpha", ALPHAS)
def test_closed_form_matches_quadrature(alpha: float) -> None:
    """Closed-form overlaps agree with a 120-node Gauss-Hermite rule for N, k <= 40."""
    worst = 0.0
    for N, k in itertools.product(range(41), repeat=2):
        closed = overlap_closed(N, k, alpha)
        quadrature = overlap_quadrature(N, k, alpha, nodes=120)
        worst = max(worst, abs(closed - quadrature) / cauchy_schwarz_scale(N, k))
    assert worst < 1e-10, f"Worst scaled deviation {worst:.3e} at alpha={alpha}"


@pytest.mark.parametrize("alpha", ALPHAS)
def test_diagonal_laguerre_identity(alpha: float) -> None:
    """(T+ phi_N, T- phi_N) = sqrt(pi) N! exp(-alpha^2) L_N(2 alpha^2) for N <= 30."""
    assert laguerre_argument(alpha) == pytest.approx(2.0 * alpha * alpha)
    for N in range(31):
        scaled = overlap_closed(N, N, alpha) / cauchy_schwarz_scale(N, N)
        expected = math.exp(-alpha * alpha) * laguerre_poly(N, laguerre_argument(alpha))
        assert scaled == pytest.approx(expected, abs=1e-11), f"N={N}"


def test_displacement_calibrates_to_root_two() -> None:
    """Quadrature fixes the displacement coefficient at sqrt(2), not 2."""
    assert calibrate_displacement() == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_ab_frame_is_unitarily_equivalent() -> None:
    """QR + alpha^2 / 2 and the AB frame share their first 20 eigenvalues."""
    params = RabiParameters(alpha=1.0, gamma1=1.0, gamma2=-1.0, eps=0.1)
    qr = ModelSpec.qr(alpha=1.0, gamma1=1.0, gamma2=-1.0, eps=0.1, cutoff=200)
    qr_values = eigen_spectrum(build(qr))[:20] + 0.5
    ab_values = eigen_spectrum(build(ModelSpec.ab_frame(params, cutoff=60)))[:20]
    assert np.max(np.abs(qr_values - ab_values)) < 1e-8


def test_parity_commutes_at_large_cutoff() -> None:
    """The parity operator commutes entrywise with the QRabi matrix."""
    op = build(ModelSpec.qrabi(alpha=1.3, delta=0.7, eps=0.2, cutoff=500))
    parity = parity_matrix(op.basis).matrix
    commutator = parity @ op.matrix - op.matrix @ parity
    assert np.abs(commutator).max() < 1e-14


@pytest.mark.parametrize(
    "spec",
    [
        ModelSpec.qr(alpha=1.0, gamma1=1.0, gamma2=-1.0, eps=0.05, cutoff=200),
        ModelSpec.n_level(ModelFamily.VEE, [0.3, 0.2], [0.0, 0.4], cutoff=14),
    ],
    ids=["QR", "Vee"],
)
def test_inertia_count_matches_eigensolve(spec: ModelSpec) -> None:
    """Inertia counts equal eigenvalue counts at thresholds between eigenvalues."""
    op = build(spec)
    values = eigen_spectrum(op)
    midpoints = 0.5 * (values[:-1] + values[1:])
    for index in range(0, len(midpoints), max(1, len(midpoints) // 25)):
        if values[index + 1] - values[index] < 1e-8:
            continue
        assert count_below(op, float(midpoints[index])) == index + 1


@pytest.mark.parametrize("x0", [0.5, 3.7])
def test_avoidance_sequence_against_full_scan(x0: float) -> None:
    """Degrees increase, windows shrink tenfold and no skipped degree hits the window."""
    sequence = nondegenerate_sequence(x0, jmax=4, kcap=400)
    entries = sequence.entries
    assert len(entries) >= 2
    previous = 0
    for current, following in itertools.pairwise(entries):
        assert following.k > current.k
        assert following.delta < current.delta / 10.0
    for entry in entries:
        for degree in range(previous + 1, entry.k):
            distances = np.abs(np.array(laguerre_zeros(degree)) - x0)
            assert distances.min() >= entry.delta, f"L_{degree} enters the window"
        distances = np.abs(np.array(laguerre_zeros(entry.k)) - x0)
        assert distances.min() < entry.delta
        assert distances.min() == pytest.approx(abs(entry.nearest_zero - x0), abs=1e-10)
        previous = entry.k
