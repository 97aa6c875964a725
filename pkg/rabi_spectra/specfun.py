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
"""Hermite and Laguerre polynomials, Laguerre zeros and the overlap polynomials.

Polynomials are evaluated by their three-term recurrences and accept scalars or
numpy arrays. Laguerre zeros come from the eigenvalues of the Jacobi matrix,
polished by Newton steps.
"""

import functools
import logging
import math

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, eigh_tridiagonal

from rabi_spectra.errors import DegenerateInput, DomainError, NumericError, PrecisionError
from rabi_spectra.utils.typing import (
    MAX_OVERLAP_DEGREE,
    AvoidanceEntry,
    AvoidanceSequence,
    LaguerreZeroSet,
    PolynomialConvention,
)

logger = logging.getLogger(__name__)

FloatOrArray = float | NDArray[np.float64]

# A starting point closer than this to a Laguerre zero is treated as a zero.
DEGENERACY_THRESHOLD = 1e-10
# First avoidance window.
INITIAL_WINDOW = 0.1
NEWTON_STEPS = 6
ZERO_RESIDUAL_TOL = 1e-12


def _as_output(values: NDArray[np.float64], scalar: bool) -> FloatOrArray:
    return float(values) if scalar else values


def hermite_poly(
    N: int,
    x: FloatOrArray,
    conv: PolynomialConvention | str = PolynomialConvention.LADDER,
) -> FloatOrArray:
    """Evaluates the N-th Hermite polynomial by recurrence.

    Args:
        N: Degree, N >= 0.
        x: Point or array of points.
        conv: LADDER for 2^{-N/2} H_N, PHYSICISTS for H_N.

    Returns:
        The polynomial value(s), float for scalar input.
    """
    if N < 0:
        raise DomainError(f"Hermite degree must be non-negative, got {N}")
    conv = PolynomialConvention(conv)
    values = np.asarray(x, dtype=float)
    prev = np.zeros_like(values)
    current = np.ones_like(values)
    if conv is PolynomialConvention.LADDER:
        # 2^{-N/2} H_N satisfies h_{n+1} = sqrt(2) x h_n - n h_{n-1}.
        scale = math.sqrt(2.0)
        for n in range(N):
            prev, current = current, scale * values * current - n * prev
    else:
        for n in range(N):
            prev, current = current, 2.0 * values * current - 2.0 * n * prev
    return _as_output(current, values.ndim == 0)


def _laguerre_pair(
    N: int, values: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Returns (L_N, L_{N-1}) with L_{-1} = 0."""
    prev = np.zeros_like(values)
    current = np.ones_like(values)
    for n in range(N):
        prev, current = current, ((2 * n + 1 - values) * current - n * prev) / (n + 1)
    return current, prev


def laguerre_poly(N: int, x: FloatOrArray) -> FloatOrArray:
    """L_N(x) from (n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}."""
    if N < 0:
        raise DomainError(f"Laguerre degree must be non-negative, got {N}")
    values = np.asarray(x, dtype=float)
    current, _ = _laguerre_pair(N, values)
    return _as_output(current, values.ndim == 0)


def laguerre_derivative(N: int, x: FloatOrArray) -> FloatOrArray:
    """L_N'(x) = N (L_N(x) - L_{N-1}(x)) / x, with L_N'(0) = -N."""
    if N < 0:
        raise DomainError(f"Laguerre degree must be non-negative, got {N}")
    values = np.asarray(x, dtype=float)
    current, prev = _laguerre_pair(N, values)
    at_origin = values == 0.0
    safe = np.where(at_origin, 1.0, values)
    derivative = np.where(at_origin, -float(N), N * (current - prev) / safe)
    return _as_output(derivative, values.ndim == 0)


def _laguerre_jacobi(N: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Diagonal and off-diagonal of the symmetric Jacobi matrix of L_N."""
    k = np.arange(N, dtype=float)
    return 2.0 * k + 1.0, k[1:].copy()


def _newton_polish(N: int, roots: NDArray[np.float64]) -> NDArray[np.float64]:
    roots = roots.copy()
    for _ in range(NEWTON_STEPS):
        value = np.asarray(laguerre_poly(N, roots))
        slope = np.asarray(laguerre_derivative(N, roots))
        step = value / slope
        roots -= step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(1.0, roots)):
            break
    residual = np.abs(np.asarray(laguerre_poly(N, roots)))
    bound = ZERO_RESIDUAL_TOL * np.maximum(1.0, np.abs(laguerre_derivative(N, roots)))
    if np.any(residual > bound):
        logger.warning(
            f"Laguerre zeros of degree {N}: residual {residual.max():.3e} above "
            "refinement tolerance"
        )
    return roots


@functools.lru_cache(maxsize=512)
def _laguerre_zeros(N: int) -> tuple[float, ...]:
    diagonal, off_diagonal = _laguerre_jacobi(N)
    try:
        roots = eigh_tridiagonal(diagonal, off_diagonal, eigvals_only=True)
    except LinAlgError as e:
        raise NumericError(
            f"Jacobi eigenvalues did not converge for degree {N}", degree=N
        ) from e
    return tuple(float(r) for r in _newton_polish(N, np.sort(roots)))


def laguerre_zeros(N: int) -> list[float]:
    """All N zeros of L_N in increasing order."""
    if N < 1:
        raise DomainError(f"Laguerre zeros need degree >= 1, got {N}")
    return list(_laguerre_zeros(N))


def laguerre_zeros_near(N: int, center: float, radius: float) -> list[float]:
    """Zeros of L_N within `radius` of `center`, without computing the others.

    The eigenvalue window is padded before polishing, and the refined zeros
    are filtered again.
    """
    if N < 1:
        raise DomainError(f"Laguerre zeros need degree >= 1, got {N}")
    diagonal, off_diagonal = _laguerre_jacobi(N)
    pad = 1e-9 * max(1.0, 4.0 * N)
    lower = max(0.0, center - radius - pad)
    upper = center + radius + pad
    if N == 1:
        roots = diagonal[(diagonal > lower) & (diagonal <= upper)]
    else:
        try:
            roots = eigh_tridiagonal(
                diagonal,
                off_diagonal,
                eigvals_only=True,
                select="v",
                select_range=(lower, upper),
            )
        except LinAlgError as e:
            raise NumericError(
                f"Jacobi eigenvalues did not converge for degree {N}", degree=N
            ) from e
    if roots.size == 0:
        return []
    polished = _newton_polish(N, np.sort(roots))
    return [float(r) for r in polished if abs(r - center) <= radius]


def laguerre_zero_set(degree_max: int) -> LaguerreZeroSet:
    return LaguerreZeroSet(
        degree_max=degree_max,
        zeros={k: laguerre_zeros(k) for k in range(1, degree_max + 1)},
    )


def p_polynomial(N: int, k: int, Z: float) -> float:
    """Overlap polynomial sum_{j} (-1)^{k-j} C(N,j) C(k,j) j! Z^{N+k-2j}.

    The float Z is an exact dyadic rational, so the sum is accumulated exactly
    in integers and rounded once.

    Args:
        N: First degree.
        k: Second degree.
        Z: Argument.

    Returns:
        The correctly rounded polynomial value.
    """
    if N < 0 or k < 0:
        raise DomainError(f"Degrees must be non-negative, got ({N}, {k})")
    if N + k > MAX_OVERLAP_DEGREE:
        raise PrecisionError(
            f"N + k = {N + k} exceeds the supported degree {MAX_OVERLAP_DEGREE}",
            N=N,
            k=k,
        )
    numerator, denominator = float(Z).as_integer_ratio()
    total_degree = N + k
    total = 0
    for j in range(min(N, k) + 1):
        coefficient = math.comb(N, j) * math.comb(k, j) * math.factorial(j)
        term = coefficient * numerator ** (total_degree - 2 * j) * denominator ** (2 * j)
        total += -term if (k - j) % 2 else term
    try:
        return total / denominator**total_degree
    except OverflowError as e:
        raise PrecisionError(
            f"p_polynomial({N}, {k}, {Z}) overflows double precision", N=N, k=k
        ) from e


def p_diagonal(N: int, Z: float) -> float:
    """sum_{j=0}^N C(N,j)^2 (N-j)! Z^j, which satisfies p_diagonal(N, -Z) = N! L_N(Z)."""
    if N < 0:
        raise DomainError(f"Degree must be non-negative, got {N}")
    if 2 * N > MAX_OVERLAP_DEGREE:
        raise PrecisionError(f"Degree {N} exceeds the supported cap", N=N)
    numerator, denominator = float(Z).as_integer_ratio()
    total = sum(
        math.comb(N, j) ** 2
        * math.factorial(N - j)
        * numerator**j
        * denominator ** (N - j)
        for j in range(N + 1)
    )
    return total / denominator**N


def zero_set_distance(x0: float, kmax: int) -> tuple[float, tuple[int, int]]:
    """Distance from x0 to the nearest zero of L_1, ..., L_kmax.

    Returns:
        (distance, (degree, 1-based zero index)); ties keep the lowest degree.
    """
    if x0 <= 0 or kmax < 1:
        raise DomainError(f"Need x0 > 0 and kmax >= 1, got x0={x0}, kmax={kmax}")
    best = (math.inf, (0, 0))
    for k in range(1, kmax + 1):
        distances = np.abs(np.asarray(laguerre_zeros(k)) - x0)
        index = int(np.argmin(distances))
        if distances[index] < best[0]:
            best = (float(distances[index]), (k, index + 1))
    return best


def nondegenerate_sequence(x0: float, jmax: int, kcap: int) -> AvoidanceSequence:
    """Builds the shrinking-window degree sequence around x0.

    Starting from a window of 1/10, each step takes the lowest degree with a
    zero strictly inside the current window, records its nearest zero and
    shrinks the window to a tenth of that zero's distance.

    Raises:
        DegenerateInput: x0 is within DEGENERACY_THRESHOLD of a zero of some
            L_k with k <= kcap.
    """
    if x0 <= 0 or jmax < 0 or kcap < 1:
        raise DomainError(
            f"Need x0 > 0, jmax >= 0, kcap >= 1, got {x0}, {jmax}, {kcap}"
        )
    for k in range(1, kcap + 1):
        if laguerre_zeros_near(k, x0, DEGENERACY_THRESHOLD):
            raise DegenerateInput(
                f"x0 = {x0} is a zero of L_{k} to within {DEGENERACY_THRESHOLD}",
                x0=x0,
                degree=k,
            )

    sequence = AvoidanceSequence(x0=x0, kcap=kcap)
    window = INITIAL_WINDOW
    previous_degree = 0
    while len(sequence.entries) < jmax:
        inside: list[float] = []
        degree = previous_degree
        for degree in range(previous_degree + 1, kcap + 1):
            inside = [
                z for z in laguerre_zeros_near(degree, x0, window) if abs(z - x0) < window
            ]
            if inside:
                break
        if not inside:
            logger.info(
                f"Avoidance sequence at x0={x0} exhausted at degree cap {kcap} "
                f"after {len(sequence.entries)} entries"
            )
            sequence.exhausted = True
            break
        nearest = min(inside, key=lambda z: abs(z - x0))
        sequence.entries.append(
            AvoidanceEntry(k=degree, delta=window, nearest_zero=nearest)
        )
        logger.debug(f"Avoidance step: k={degree}, window={window:.3e}, zero={nearest!r}")
        previous_degree = degree
        window = abs(nearest - x0) / 10.0
    return sequence
