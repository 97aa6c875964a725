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
"""Two-term Weyl counting for the coupled oscillator models.

Phase space is R^{2n} with points X = (x_1..x_n, xi_1..xi_n) and principal
symbol p2(X) = |X|^2 / 2 times the identity on the levels. The semiprincipal
symbol a1 places alpha_k x_k on every coupling of coupling_pairs(); its
perturbation b1 adds the imaginary part -i alpha_k xi_k above the diagonal.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.special import roots_jacobi, roots_legendre

from rabi_spectra.errors import DomainError
from rabi_spectra.fock_ops import build, coupling_pairs
from rabi_spectra.spectral_analysis import count_below
from rabi_spectra.utils.tracing import get_tracer
from rabi_spectra.utils.typing import (
    CountingRow,
    CountingTable,
    ModelFamily,
    ModelSpec,
    SmgesReport,
    SymbolSample,
    WeylPrediction,
)

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

# p2(X) = 1 is the sphere |X| = sqrt(2).
ENERGY_RADIUS = math.sqrt(2.0)
PRODUCT_RULE_MAX_MODES = 2
DEFAULT_SPHERE_ORDER = 16
DEFAULT_MONTE_CARLO_SAMPLES = 4096
HERMITIAN_TOL = 1e-14
SPHERE_TOL = 1e-12


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} in R^dim."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


def sphere_rule(dim: int, order: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Product rule on the unit sphere S^{dim-1}.

    The last circle is split into 2 * order equal arcs. Every further
    dimension adds a polar coordinate t = cos(theta) whose surface weight
    (1 - t^2)^{(dim-3)/2} is integrated with a Gauss-Jacobi rule.

    Returns:
        (points of shape (m, dim), weights summing to sphere_area(dim)).
    """
    if dim < 1 or order < 1:
        raise DomainError(f"Need dim >= 1 and order >= 1, got {dim}, {order}")
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if dim == 2:
        angles = np.pi * np.arange(2 * order) / order
        points = np.column_stack([np.cos(angles), np.sin(angles)])
        return points, np.full(2 * order, np.pi / order)
    exponent = (dim - 3) / 2.0
    t, t_weights = roots_jacobi(order, exponent, exponent)
    inner, inner_weights = sphere_rule(dim - 1, order)
    radial = np.sqrt(1.0 - t * t)
    points = np.concatenate(
        [
            np.column_stack([np.full(len(inner), ti), ri * inner])
            for ti, ri in zip(t, radial, strict=True)
        ]
    )
    weights = np.outer(t_weights, inner_weights).reshape(-1)
    return points, weights


def sphere_samples(
    dim: int, samples: int, seed: int
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Uniform seeded points on S^{dim-1} with equal weights summing to the area."""
    if dim < 1 or samples < 1:
        raise DomainError(f"Need dim >= 1 and samples >= 1, got {dim}, {samples}")
    rng = np.random.default_rng(seed)
    gaussian = rng.standard_normal((samples, dim))
    points = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
    return points, np.full(samples, sphere_area(dim) / samples)


def phase_space_volume(n: int, order: int = DEFAULT_SPHERE_ORDER) -> float:
    """vol{p2 <= 1} in R^{2n} as (radial integral) x (sphere rule weight sum).

    Equals (2 pi)^n / n!.
    """
    if n < 1:
        raise DomainError(f"Need at least one mode, got {n}")
    dim = 2 * n
    if n <= PRODUCT_RULE_MAX_MODES:
        area = math.fsum(sphere_rule(dim, order)[1])
    else:
        area = sphere_area(dim)
    # r^{dim-1} on [0, sqrt 2] is integrated exactly by n Legendre nodes.
    nodes, node_weights = roots_legendre(n)
    r = 0.5 * ENERGY_RADIUS * (nodes + 1.0)
    radial = 0.5 * ENERGY_RADIUS * float(np.sum(node_weights * r ** (dim - 1)))
    return radial * area


def _check_symbol_family(spec: ModelSpec) -> None:
    if spec.family is ModelFamily.AB_FRAME:
        raise DomainError("The AB frame has no oscillator-coupled symbol")


def _symbol_parts(
    spec: ModelSpec, points: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Stacked real a1 and imaginary b1 coefficients at points of shape (m, 2n)."""
    n = spec.modes
    size = spec.spin_dim
    a1 = np.zeros((len(points), size, size))
    b1 = np.zeros((len(points), size, size))
    for (i, j, mode), alpha in zip(coupling_pairs(spec), spec.alphas, strict=True):
        x = alpha * points[:, mode]
        xi = alpha * points[:, n + mode]
        a1[:, i, j] += x
        a1[:, j, i] += x
        b1[:, i, j] -= xi
        b1[:, j, i] += xi
    return a1, b1


def semiprincipal_symbol(
    spec: ModelSpec, X: Sequence[float] | NDArray[np.float64], eps: float = 0.0
) -> NDArray[np.complex128]:
    """a1(X) + eps b1(X), a Hermitian spin_dim x spin_dim matrix."""
    _check_symbol_family(spec)
    point = np.asarray(X, dtype=float)
    if point.shape != (2 * spec.modes,):
        raise DomainError(f"Expected a point in R^{2 * spec.modes}, got shape {point.shape}")
    a1, b1 = _symbol_parts(spec, point[None, :])
    return a1[0] + 1j * eps * b1[0]


def weyl_prediction(
    spec: ModelSpec,
    order: int = DEFAULT_SPHERE_ORDER,
    samples: int = DEFAULT_MONTE_CARLO_SAMPLES,
    seed: int = 0,
) -> WeylPrediction:
    """Leading and subleading coefficients of N_A(lambda).

    leading = Nlev (2 pi)^{-n} vol{p2 <= 1} = Nlev / n!. The subleading
    coefficient integrates Tr a1 over p2 = 1 against ds / |grad p2|, using the
    product rule up to two modes and seeded Monte Carlo beyond.
    """
    _check_symbol_family(spec)
    n = spec.modes
    dim = 2 * n
    quadrature: Literal["product", "monte_carlo"]
    if n <= PRODUCT_RULE_MAX_MODES:
        points, weights = sphere_rule(dim, order)
        quadrature = "product"
    else:
        points, weights = sphere_samples(dim, samples, seed)
        quadrature = "monte_carlo"
    a1, _ = _symbol_parts(spec, ENERGY_RADIUS * points)
    trace = np.trace(a1, axis1=1, axis2=2)
    # ds = R^{dim-1} dsigma and |grad p2| = R on the sphere of radius R.
    surface = ENERGY_RADIUS ** (dim - 2) * float(np.sum(weights * trace))
    subleading = surface / (2.0 * math.pi) ** n
    return WeylPrediction(
        n=n,
        Nlev=spec.spin_dim,
        leading_coeff=spec.spin_dim / math.factorial(n),
        subleading_coeff=subleading,
        quadrature=quadrature,
        quadrature_points=len(points),
    )


def predicted_count(prediction: WeylPrediction, lam: float) -> float:
    return (
        prediction.leading_coeff * lam**prediction.n
        - prediction.subleading_coeff * lam ** (prediction.n - 0.5)
    )


def counting_trend(table: CountingTable) -> float | None:
    """Least-squares slope of |rel_err| against lambda over the unflagged rows."""
    rows = [row for row in table.rows if not row.flagged]
    if len(rows) < 2:
        return None
    lams = np.array([row.lam for row in rows])
    errors = np.abs([row.rel_err for row in rows])
    slope, _ = np.polyfit(lams, errors, 1)
    return float(slope)


def empirical_counting(
    spec: ModelSpec,
    lambdas: Sequence[float],
    cutoffs: list[int] | None = None,
    reliability_fraction: float = 0.5,
    workers: int = 1,
    prediction: WeylPrediction | None = None,
) -> CountingTable:
    """N_A(lambda) by inertia counting next to the two-term prediction.

    Rows with lambda above reliability_fraction * min(cutoffs) are computed
    but flagged, and kept out of the trend.
    """
    if not lambdas:
        raise DomainError("Need at least one lambda")
    if any(lam <= 0 for lam in lambdas):
        raise DomainError(f"Counting thresholds must be positive, got {list(lambdas)}")
    if not 0 < reliability_fraction <= 1:
        raise DomainError(f"Reliability fraction must lie in (0, 1], got {reliability_fraction}")
    if workers < 1:
        raise DomainError(f"Need at least one worker, got {workers}")
    if cutoffs is not None:
        spec = spec.with_cutoffs(cutoffs)
    prediction = prediction or weyl_prediction(spec)
    bound = reliability_fraction * min(spec.cutoffs)
    with tracer.start_as_current_span("empirical_counting") as span:
        span.set_attribute("dimension", spec.basis().dim)
        span.set_attribute("cutoffs", list(spec.cutoffs))
        span.set_attribute("lambdas", [float(lam) for lam in lambdas])
        op = build(spec)
        positive = count_below(op, 0.0) == 0
        if not positive:
            logger.warning(f"Truncated {spec.family.value} operator has eigenvalues below 0")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda lam: count_below(op, lam), lambdas))

    rows = []
    for lam, count in zip(lambdas, counts, strict=True):
        predicted = predicted_count(prediction, lam)
        flagged = lam > bound
        if flagged:
            logger.warning(f"lambda={lam} exceeds the reliability bound {bound}")
        rows.append(
            CountingRow(
                lam=lam,
                count=count,
                prediction=predicted,
                rel_err=(count - predicted) / predicted,
                flagged=flagged,
            )
        )
    table = CountingTable(
        prediction=prediction, rows=rows, reliability_bound=bound, positive=positive
    )
    table.trend_slope = counting_trend(table)
    return table


def _gaps(eigenvalues: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.diff(eigenvalues, axis=-1).min(axis=-1)


def symbol_sample(
    spec: ModelSpec, X: Sequence[float] | NDArray[np.float64], eps: float
) -> SymbolSample:
    """The symbol, its eigenvalues and smallest gap at a point of p2 = 1."""
    point = np.asarray(X, dtype=float)
    if abs(float(point @ point) - 2.0) > SPHERE_TOL:
        raise DomainError(f"X must satisfy |X|^2 = 2, got {float(point @ point)!r}")
    matrix = semiprincipal_symbol(spec, point, eps)
    eigenvalues = np.linalg.eigvalsh(matrix)
    a1, b1 = _symbol_parts(spec, point[None, :])
    return SymbolSample(
        X=point.tolist(),
        eps=eps,
        a1_real=a1[0].tolist(),
        b1_imag=b1[0].tolist(),
        eigenvalues=eigenvalues.tolist(),
        min_gap=float(_gaps(eigenvalues)),
    )


def smges_gap_check(
    spec: ModelSpec,
    eps: float,
    samples: int,
    seed: int = 0,
    mode: Literal["random", "grid"] = "random",
) -> SmgesReport:
    """Smallest eigenvalue gap of a1 + eps b1 over sampled points of p2 = 1.

    "random" draws `samples` seeded uniform points; "grid" uses the product
    sphere rule of order `samples` and ignores the seed.
    """
    _check_symbol_family(spec)
    if samples < 1:
        raise DomainError(f"Need at least one sample, got {samples}")
    if eps < 0:
        raise DomainError(f"eps must be non-negative, got {eps}")
    dim = 2 * spec.modes
    if mode == "grid":
        points, _ = sphere_rule(dim, samples)
    else:
        points, _ = sphere_samples(dim, samples, seed)
    points = ENERGY_RADIUS * points
    a1, b1 = _symbol_parts(spec, points)
    matrices = a1 + 1j * eps * b1
    defect = float(np.abs(matrices - np.conj(np.swapaxes(matrices, 1, 2))).max())
    if defect > HERMITIAN_TOL:
        logger.warning(f"Sampled symbols deviate from Hermitian by {defect:.3e}")
    gaps = _gaps(np.linalg.eigvalsh(matrices))
    worst = int(np.argmin(gaps))
    logger.info(
        f"SMGES check on {len(points)} points at eps={eps}: min gap {gaps[worst]:.6e}"
    )
    return SmgesReport(
        eps=eps,
        samples=len(points),
        seed=seed,
        mode=mode,
        min_gap=float(gaps[worst]),
        argmin_X=points[worst].tolist(),
        max_hermitian_defect=defect,
    )
