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
"""Overlaps of oppositely displaced Hermite functions.

phi_N(x) = h_N(x) exp(-x^2/2) with h_N the ladder-normalised Hermite polynomial,
so that ||phi_N||^2 = sqrt(pi) N!. The overlap of phi_N(x - alpha) with
phi_k(x + alpha) has the closed form

    sqrt(pi) exp(-alpha^2) sum_j (-1)^{N-j} C(N,j) C(k,j) j! c^{N+k-2j}

with c = DISPLACEMENT_COEFF * alpha. Gauss-Hermite quadrature of the same
integral is the reference the constant is calibrated against.
"""

import functools
import logging
import math
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, eigh_tridiagonal

from rabi_spectra.errors import DomainError, InsufficientNodes, NumericError
from rabi_spectra.specfun import hermite_poly, p_polynomial
from rabi_spectra.utils.typing import OverlapResult, PolynomialConvention

logger = logging.getLogger(__name__)

# c = sqrt(2) alpha, recovered by calibrate_displacement() from the (1, 1) quadrature.
DISPLACEMENT_COEFF = math.sqrt(2.0)
# Diagonal overlaps are sqrt(pi) N! exp(-alpha^2) L_N(s) with s = 2 alpha^2.
LAGUERRE_ARG_COEFF = 2.0
# The argument 4 alpha^2 that a shift of 2 alpha would give; diagnostics only.
DOUBLED_LAGUERRE_ARG_COEFF = 4.0
GAUSS_HERMITE_NEWTON_STEPS = 3


def laguerre_argument(alpha: float) -> float:
    return LAGUERRE_ARG_COEFF * alpha * alpha


def doubled_laguerre_argument(alpha: float) -> float:
    return DOUBLED_LAGUERRE_ARG_COEFF * alpha * alpha


def hermite_norm(N: int) -> float:
    """||phi_N|| = (sqrt(pi) N!)^{1/2}."""
    return math.sqrt(math.sqrt(math.pi) * math.factorial(N))


def cauchy_schwarz_scale(N: int, k: int) -> float:
    return hermite_norm(N) * hermite_norm(k)


def _orthonormal_hermite(
    n: int, x: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Returns (p_n, p_{n-1}, sum_{j<n} p_j^2) for the orthonormal Hermite family."""
    prev = np.zeros_like(x)
    current = np.full_like(x, math.pi**-0.25)
    christoffel = np.zeros_like(x)
    for j in range(n):
        christoffel += current * current
        prev, current = (
            current,
            x * math.sqrt(2.0 / (j + 1)) * current - math.sqrt(j / (j + 1)) * prev,
        )
    return current, prev, christoffel


@functools.lru_cache(maxsize=128)
def gauss_hermite(nodes: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Hermite rule for the weight exp(-x^2).

    Nodes are the eigenvalues of the Jacobi matrix (off-diagonal sqrt(i/2)),
    polished by Newton steps on the orthonormal polynomial; weights are the
    Christoffel numbers 1 / sum_{j<n} p_j(x)^2, which keep relative accuracy in
    the tails. The cached arrays are read-only.
    """
    if nodes < 1:
        raise DomainError(f"Gauss-Hermite rule needs at least one node, got {nodes}")
    off_diagonal = np.sqrt(np.arange(1, nodes) / 2.0)
    if nodes == 1:
        x = np.zeros(1)
    else:
        try:
            x = eigh_tridiagonal(np.zeros(nodes), off_diagonal, eigvals_only=True)
        except LinAlgError as e:
            raise NumericError(
                f"Hermite Jacobi matrix did not converge for {nodes} nodes",
                degree=nodes,
            ) from e
        for _ in range(GAUSS_HERMITE_NEWTON_STEPS):
            value, lower, _ = _orthonormal_hermite(nodes, x)
            x = x - value / (math.sqrt(2.0 * nodes) * lower)
    _, _, christoffel = _orthonormal_hermite(nodes, x)
    weights = 1.0 / christoffel
    x = 0.5 * (x - x[::-1])
    weights = 0.5 * (weights + weights[::-1])
    x.setflags(write=False)
    weights.setflags(write=False)
    return x, weights


def overlap_closed(N: int, k: int, alpha: float) -> float:
    """Closed form of the integral of phi_N(x - alpha) phi_k(x + alpha)."""
    polynomial = p_polynomial(k, N, DISPLACEMENT_COEFF * alpha)
    return math.sqrt(math.pi) * math.exp(-alpha * alpha) * polynomial


def overlap_quadrature(N: int, k: int, alpha: float, nodes: int) -> float:
    """The same integral as exp(-alpha^2) sum_i w_i h_N(t_i - alpha) h_k(t_i + alpha).

    Raises:
        InsufficientNodes: nodes < floor((N + k) / 2) + 1, below exactness.
    """
    if N < 0 or k < 0:
        raise DomainError(f"Degrees must be non-negative, got ({N}, {k})")
    required = (N + k) // 2 + 1
    if nodes < required:
        raise InsufficientNodes(
            f"{nodes} nodes cannot integrate degree {N + k} exactly, need {required}",
            nodes=nodes,
            required=required,
        )
    t, w = gauss_hermite(nodes)
    left = np.asarray(hermite_poly(N, t - alpha, PolynomialConvention.LADDER))
    right = np.asarray(hermite_poly(k, t + alpha, PolynomialConvention.LADDER))
    return math.exp(-alpha * alpha) * math.fsum(w * left * right)


def calibrate_displacement(alpha: float = 0.7, nodes: int = 4) -> float:
    """Recovers the displacement coefficient from the (1, 1) quadrature overlap.

    The closed form at (1, 1) is sqrt(pi) exp(-alpha^2) (1 - c^2).
    """
    if alpha == 0:
        raise DomainError("Calibration needs a nonzero displacement")
    reduced = overlap_quadrature(1, 1, alpha, nodes) / (
        math.sqrt(math.pi) * math.exp(-alpha * alpha)
    )
    coefficient = math.sqrt(1.0 - reduced) / abs(alpha)
    logger.debug(f"Calibrated displacement coefficient {coefficient!r} at alpha={alpha}")
    return coefficient


def overlap(
    N: int,
    k: int,
    alpha: float,
    method: Literal["closed_form", "quadrature"] = "closed_form",
    nodes: int | None = None,
) -> OverlapResult:
    """Typed overlap with the Cauchy-Schwarz bound checked."""
    if method == "closed_form":
        value = overlap_closed(N, k, alpha)
    else:
        if nodes is None:
            nodes = (N + k) // 2 + 1
        value = overlap_quadrature(N, k, alpha, nodes)
    bound = cauchy_schwarz_scale(N, k)
    if abs(value) > bound * (1.0 + 1e-12):
        raise NumericError(
            f"Overlap ({N}, {k}) at alpha={alpha} = {value!r} exceeds its "
            f"Cauchy-Schwarz bound {bound!r}",
            N=N,
            k=k,
        )
    return OverlapResult(
        N=N, k=k, alpha=alpha, value=value, method=method, cauchy_schwarz_bound=bound
    )


@functools.lru_cache(maxsize=64)
def displacement_matrix(cutoff: int, alpha: float) -> NDArray[np.float64]:
    """Normalised overlaps D[N, k] = overlap_closed(N, k, alpha) / (||phi_N|| ||phi_k||).

    D is the matrix of the translation u -> u(. + 2 alpha) in the orthonormal
    oscillator basis, truncated to occupations <= cutoff; its transpose is the
    opposite translation. The returned array is shared and read-only.
    """
    if cutoff < 0:
        raise DomainError(f"Cutoff must be non-negative, got {cutoff}")
    c = DISPLACEMENT_COEFF * alpha
    damping = math.exp(-alpha * alpha)
    size = cutoff + 1
    matrix = np.empty((size, size))
    for N in range(size):
        for k in range(size):
            norm = math.sqrt(math.factorial(N) * math.factorial(k))
            matrix[N, k] = damping * p_polynomial(k, N, c) / norm
    matrix.setflags(write=False)
    return matrix
