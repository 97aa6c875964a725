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
"""Small-eps expansion of the AB-frame eigenvalues near N + 1/2.

At eps = 0 the level N + 1/2 is doubly degenerate with eigenspace
phi_N x C^2. First order splits it by the 2x2 matrix
[[beta1, beta2 r], [beta2 r, beta1]] with r the normalised diagonal overlap.
When r vanishes the second-order form Q decides the eps^2 terms, and the
quasimode vectors u = u0 + eps u1 + eps^2 u2 / 2 approximate eigenvectors
to O(eps^3).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from rabi_spectra.errors import DomainError
from rabi_spectra.fock_ops import build, perturbation_blocks
from rabi_spectra.overlaps import (
    cauchy_schwarz_scale,
    doubled_laguerre_argument,
    laguerre_argument,
    overlap_closed,
)
from rabi_spectra.spectral_analysis import eigen_spectrum
from rabi_spectra.utils.tracing import get_tracer
from rabi_spectra.utils.typing import (
    MAX_AB_FRAME_CUTOFF,
    MAX_OVERLAP_DEGREE,
    FirstOrderSplit,
    ModelSpec,
    QuasimodeExpansion,
    QuasimodeForm,
    QuasimodeIntervals,
    QuasimodeResidual,
    RabiParameters,
)

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

# |r| below this is a vanishing first-order splitting.
DEGENERACY_TOL = 1e-9
# eps^2 coefficient of the eigenvalue is QUASIMODE_SIGN * mu2 / 2.
QUASIMODE_SIGN = -1.0
SPECTRAL_SUM_OFFSET = 60
RESIDUAL_MARGIN = 10
TAIL_TERMS = 5


def overlap_ratio(N: int, alpha: float) -> float:
    """(T+ phi_N, T- phi_N) / ||phi_N||^2 = exp(-alpha^2) L_N(2 alpha^2)."""
    return overlap_closed(N, N, alpha) / (math.sqrt(math.pi) * math.factorial(N))


def first_order(N: int, params: RabiParameters) -> FirstOrderSplit:
    """First-order slopes mu_+- = beta1 +- beta2 |r| and their eigenvectors."""
    if N < 0:
        raise DomainError(f"Level must be non-negative, got {N}")
    ratio = overlap_ratio(N, params.alpha)
    degenerate = abs(ratio) < DEGENERACY_TOL
    sign = -1.0 if ratio < 0 and not degenerate else 1.0
    spread = params.beta2 * abs(ratio)
    root_half = math.sqrt(0.5)
    return FirstOrderSplit(
        N=N,
        mu_plus=params.beta1 + spread,
        mu_minus=params.beta1 - spread,
        w_plus=[sign * root_half, root_half],
        w_minus=[sign * root_half, -root_half],
        beta1=params.beta1,
        beta2=params.beta2,
        overlap_ratio=ratio,
        degenerate=degenerate,
        laguerre_argument=laguerre_argument(params.alpha),
        doubled_laguerre_argument=doubled_laguerre_argument(params.alpha),
    )


def first_order_prediction(N: int, params: RabiParameters) -> tuple[float, float]:
    """N + 1/2 + mu_-+ eps at params.eps."""
    split = first_order(N, params)
    base = N + 0.5
    return base + split.mu_minus * params.eps, base + split.mu_plus * params.eps


def braak_radius(Nmax: int, params: RabiParameters) -> float:
    """Largest |eps| keeping every first-order prediction for N <= Nmax in [N, N+1)."""
    slope = max(
        max(abs(s.mu_plus), abs(s.mu_minus))
        for s in (first_order(N, params) for N in range(Nmax + 1))
    )
    return math.inf if slope == 0 else 0.5 / slope


def degenerate_levels(alpha: float, kmax: int) -> list[int]:
    """Levels N <= kmax whose first-order splitting vanishes at this alpha."""
    return [N for N in range(kmax + 1) if abs(overlap_ratio(N, alpha)) < DEGENERACY_TOL]


def _ab_frame_pair(
    N: int, params: RabiParameters, eps: float, cutoff: int
) -> NDArray[np.float64]:
    spec = ModelSpec.ab_frame(params.model_copy(update={"eps": eps}), cutoff)
    return eigen_spectrum(build(spec))[2 * N : 2 * N + 2]


def _oracle_cutoff(N: int, cutoff: int | None) -> int:
    return cutoff if cutoff is not None else min(N + 40, MAX_AB_FRAME_CUTOFF)


def first_order_slopes(
    N: int, params: RabiParameters, eps: float = 1e-3, cutoff: int | None = None
) -> tuple[float, float]:
    """Richardson-extrapolated one-sided eps-slopes of the sorted pair near N + 1/2.

    Returns:
        (slope of the lower eigenvalue, slope of the upper eigenvalue).
    """
    cutoff = _oracle_cutoff(N, cutoff)
    base = N + 0.5
    coarse = (_ab_frame_pair(N, params, eps, cutoff) - base) / eps
    fine = (_ab_frame_pair(N, params, eps / 2, cutoff) - base) / (eps / 2)
    lower, upper = 2.0 * fine - coarse
    return float(lower), float(upper)


def second_order_curvature(
    N: int, params: RabiParameters, eps: float = 1e-3, cutoff: int | None = None
) -> tuple[float, float]:
    """eps^2 coefficients (lambda(eps) - 2 lambda(0) + lambda(-eps)) / (2 eps^2) of the pair."""
    cutoff = _oracle_cutoff(N, cutoff)
    base = N + 0.5
    plus = _ab_frame_pair(N, params, eps, cutoff)
    minus = _ab_frame_pair(N, params, -eps, cutoff)
    lower, upper = (plus - 2.0 * base + minus) / (2.0 * eps * eps)
    return float(lower), float(upper)


def _check_level(N: int, params: RabiParameters, K: int, override: bool) -> FirstOrderSplit:
    if K <= N:
        raise DomainError(f"Spectral sum cutoff K={K} must exceed N={N}")
    split = first_order(N, params)
    if not split.degenerate and not override:
        raise DomainError(
            f"Level {N} splits at first order (r={split.overlap_ratio!r}); "
            "pass override=True to evaluate the second-order form anyway"
        )
    return split


def _normalised_row(N: int, K: int, alpha: float) -> NDArray[np.float64]:
    """D[N, k] for k = 0..K."""
    return np.array(
        [overlap_closed(N, k, alpha) / cauchy_schwarz_scale(N, k) for k in range(K + 1)]
    )


def quasimode_form(
    N: int, params: RabiParameters, K: int | None = None, override: bool = False
) -> QuasimodeForm:
    """Second-order form Q(w, w') = 2 sum_{k != N} <M_k w, M_k w'> / (k - N).

    M_k = beta2 [[0, D[N, k]], [D[k, N], 0]] holds the couplings of phi_N x w
    to phi_k. The matrix is returned in the first-order basis {w+, w-}.
    """
    K = min(N + SPECTRAL_SUM_OFFSET, MAX_OVERLAP_DEGREE - N) if K is None else K
    split = _check_level(N, params, K, override)
    row = _normalised_row(N, K, params.alpha)
    column = np.array([(-1) ** (N + k) for k in range(K + 1)]) * row
    terms = np.zeros((K + 1, 2, 2))
    for k in range(K + 1):
        if k == N:
            continue
        coupling = params.beta2 * np.array([[0.0, row[k]], [column[k], 0.0]])
        terms[k] = 2.0 * coupling.T @ coupling / (k - N)
    frame = np.column_stack([split.w_plus, split.w_minus])
    matrix = frame.T @ terms.sum(axis=0) @ frame
    matrix = 0.5 * (matrix + matrix.T)
    mu2_minus, mu2_plus = np.linalg.eigvalsh(matrix)
    return QuasimodeForm(
        N=N,
        K=K,
        matrix=matrix.tolist(),
        mu2_minus=float(mu2_minus),
        mu2_plus=float(mu2_plus),
        tail_estimate=float(np.abs(terms[-TAIL_TERMS:]).sum()),
    )


@dataclass(frozen=True)
class _Branch:
    mu2: float
    w: NDArray[np.float64]
    u0: NDArray[np.float64]
    u1: NDArray[np.float64]
    u2: NDArray[np.float64]


def _default_vector_K(N: int) -> int:
    return min(N + SPECTRAL_SUM_OFFSET, MAX_AB_FRAME_CUTOFF - RESIDUAL_MARGIN)


def _branches(
    N: int, params: RabiParameters, K: int, override: bool
) -> dict[str, _Branch]:
    split = _check_level(N, params, K, override)
    form = quasimode_form(N, params, K, override=True)
    _, rotation = np.linalg.eigh(np.asarray(form.matrix))
    frame = np.column_stack([split.w_plus, split.w_minus]) @ rotation

    size = K + 1
    blocks = perturbation_blocks(K, params)
    gaps = np.arange(size, dtype=float) - N
    resolvent = np.tile(np.divide(1.0, gaps, out=np.zeros(size), where=gaps != 0), 2)
    branches = {}
    for name, column, mu2 in (
        ("minus", 0, form.mu2_minus),
        ("plus", 1, form.mu2_plus),
    ):
        w = frame[:, column]
        u0 = np.zeros(2 * size)
        u0[N], u0[size + N] = w
        u1 = resolvent * (params.beta1 * u0 - blocks @ u0)
        u2 = 2.0 * resolvent * (params.beta1 * u1 - blocks @ u1)
        branches[name] = _Branch(mu2=mu2, w=w, u0=u0, u1=u1, u2=u2)
    return branches


def quasimode_vectors(
    N: int, params: RabiParameters, K: int | None = None, override: bool = False
) -> QuasimodeExpansion:
    """u1 = R0 (mu+ - B) u0 and u2 = 2 R0 (mu+ - B) u1 on the cutoff-K basis.

    R0 is the reduced resolvent sum_{k != N} P_k / (k - N) and mu+ = beta1.
    Vectors are ordered spin first, then occupation 0..K.
    """
    K = _default_vector_K(N) if K is None else K
    branches = _branches(N, params, K, override)
    plus, minus = branches["plus"], branches["minus"]
    return QuasimodeExpansion(
        N=N,
        K=K,
        mu_plus=params.beta1,
        mu2_plus=plus.mu2,
        mu2_minus=minus.mu2,
        w_plus=plus.w.tolist(),
        w_minus=minus.w.tolist(),
        u1_plus=plus.u1.tolist(),
        u1_minus=minus.u1.tolist(),
        u2_plus=plus.u2.tolist(),
        u2_minus=minus.u2.tolist(),
    )


def _embed(vector: NDArray[np.float64], K: int, cutoff: int) -> NDArray[np.float64]:
    padded = np.zeros((2, cutoff + 1))
    padded[:, : K + 1] = vector.reshape(2, K + 1)
    return padded.reshape(-1)


def quasimode_residual(
    N: int,
    params: RabiParameters,
    eps: float,
    K: int | None = None,
    cutoff: int | None = None,
    override: bool = False,
) -> QuasimodeResidual:
    """||(A + eps B) u(eps) - lambda(eps) u(eps)|| / ||u(eps)||, worst of the two branches.

    lambda(eps) = N + 1/2 + eps mu+ + eps^2 QUASIMODE_SIGN mu2 / 2, evaluated with
    the AB-frame matrix at `cutoff` (>= K + RESIDUAL_MARGIN for a clean result).
    """
    K = _default_vector_K(N) if K is None else K
    cutoff = min(K + RESIDUAL_MARGIN, MAX_AB_FRAME_CUTOFF) if cutoff is None else cutoff
    if cutoff < K:
        raise DomainError(f"Residual cutoff {cutoff} is below the vector cutoff {K}")
    margin_ok = cutoff >= K + RESIDUAL_MARGIN
    if not margin_ok:
        logger.warning(
            f"Residual cutoff {cutoff} leaves less than {RESIDUAL_MARGIN} levels "
            f"above K={K}"
        )
    with tracer.start_as_current_span("quasimode_residual") as span:
        span.set_attribute("N", N)
        span.set_attribute("eps", eps)
        branches = _branches(N, params, K, override)
        spec = ModelSpec.ab_frame(params.model_copy(update={"eps": eps}), cutoff)
        matrix = build(spec).matrix
        residuals = {}
        predictions = {}
        for name, branch in branches.items():
            u = _embed(
                branch.u0 + eps * branch.u1 + 0.5 * eps * eps * branch.u2, K, cutoff
            )
            lam = (
                N
                + 0.5
                + eps * params.beta1
                + 0.5 * eps * eps * QUASIMODE_SIGN * branch.mu2
            )
            residuals[name] = float(
                np.linalg.norm(matrix @ u - lam * u) / np.linalg.norm(u)
            )
            predictions[name] = lam
    return QuasimodeResidual(
        N=N,
        eps=eps,
        K=K,
        cutoff=cutoff,
        residual=max(residuals.values()),
        residual_plus=residuals["plus"],
        residual_minus=residuals["minus"],
        lambda_plus=predictions["plus"],
        lambda_minus=predictions["minus"],
        margin_ok=margin_ok,
    )


def quasimode_intervals(
    N: int,
    params: RabiParameters,
    eps: float,
    C: float,
    K: int | None = None,
    cutoff: int | None = None,
    override: bool = False,
) -> QuasimodeIntervals:
    """The windows lambda_+- +- C eps^3 and the numeric eigenvalues inside them."""
    residual = quasimode_residual(N, params, eps, K, cutoff, override)
    radius = C * abs(eps) ** 3
    centers = sorted([residual.lambda_minus, residual.lambda_plus])
    intervals = [[c - radius, c + radius] for c in centers]
    spec = ModelSpec.ab_frame(params.model_copy(update={"eps": eps}), residual.cutoff)
    values = eigen_spectrum(build(spec))
    counts = [
        int(np.count_nonzero((values >= lo) & (values <= hi))) for lo, hi in intervals
    ]
    union = (values >= intervals[0][0]) & (values <= intervals[1][1])
    return QuasimodeIntervals(
        N=N,
        eps=eps,
        C=C,
        lambda_minus=centers[0],
        lambda_plus=centers[1],
        intervals=intervals,
        disjoint=intervals[0][1] < intervals[1][0],
        counts=counts,
        union_count=int(np.count_nonzero(union)),
    )


def calibrate_quasimode_sign(
    N: int,
    params: RabiParameters,
    eps: float = 1e-3,
    K: int | None = None,
    cutoff: int | None = None,
) -> float:
    """Sign relating mu2 / 2 to the numerically observed eps^2 coefficients.

    The pair sum is analytic in eps, so any level works; at degenerate levels
    mu2 itself vanishes and there is nothing to calibrate.
    """
    form = quasimode_form(N, params, K, override=True)
    predicted = 0.25 * (form.mu2_plus + form.mu2_minus)
    if predicted == 0.0:
        raise DomainError(f"Second-order form vanishes at level {N}; no sign to calibrate")
    observed = 0.5 * sum(second_order_curvature(N, params, eps, cutoff))
    return 1.0 if observed / predicted > 0 else -1.0
