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
"""Eigenvalues of truncated operators, their convergence in the cutoff,
parity sectors, inertia counting and interval counts of shifted spectra."""

import itertools
import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, eigvalsh, get_lapack_funcs
from scipy.linalg.lapack import _compute_lwork

from rabi_spectra.errors import (
    ContractViolation,
    CoverageError,
    DomainError,
    NumericError,
)
from rabi_spectra.fock_ops import TruncatedOperator, build, parity_signs
from rabi_spectra.utils.tracing import get_tracer
from rabi_spectra.utils.typing import (
    MAX_AB_FRAME_CUTOFF,
    IntervalCount,
    IntervalReport,
    ModelFamily,
    ModelSpec,
    Spectrum,
    Verdict,
)

logger = logging.getLogger(__name__)
tracer = get_tracer(__name__)

CUTOFF_GROWTH = 1.5
SINGLE_MODE_CUTOFF_CAP = 4096
MULTI_MODE_CUTOFF_CAP = 160
# Shifted eigenvalues this close to an integer go to the interval below it.
BOUNDARY_TOL = 1e-10

OperatorLike = TruncatedOperator | NDArray[np.float64]
Labels = NDArray[np.str_] | None
SectorSolver = Callable[[TruncatedOperator], tuple[NDArray[np.float64], Labels]]


def _matrix_of(op: OperatorLike) -> NDArray[np.float64]:
    matrix = op.matrix if isinstance(op, TruncatedOperator) else np.asarray(op, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolation(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix


def _check_symmetric(matrix: NDArray[np.float64]) -> None:
    scale = float(np.abs(matrix).max()) if matrix.size else 0.0
    tol = matrix.shape[0] * np.finfo(float).eps * scale
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=tol):
        raise ContractViolation("Eigen solve requires a symmetric matrix")


def eigen_spectrum(op: OperatorLike) -> NDArray[np.float64]:
    """All eigenvalues in ascending order from the dense symmetric solver."""
    matrix = _matrix_of(op)
    _check_symmetric(matrix)
    try:
        return eigvalsh(matrix, check_finite=False)
    except LinAlgError as e:
        raise NumericError(
            f"Symmetric eigensolver failed at dimension {matrix.shape[0]}"
        ) from e


def default_cutoff_cap(spec: ModelSpec) -> int:
    if spec.family is ModelFamily.AB_FRAME:
        return MAX_AB_FRAME_CUTOFF
    return SINGLE_MODE_CUTOFF_CAP if spec.modes == 1 else MULTI_MODE_CUTOFF_CAP


def _grow(cutoffs: list[int], growth: float, cap: int) -> list[int]:
    return [min(cap, max(c + 1, math.ceil(c * growth))) for c in cutoffs]


def _stable_prefix(current: NDArray[np.float64], previous: NDArray[np.float64], tol: float) -> int:
    size = min(current.size, previous.size)
    unstable = np.flatnonzero(np.abs(current[:size] - previous[:size]) >= tol)
    return int(unstable[0]) if unstable.size else size


def _whole_spectrum(op: TruncatedOperator) -> tuple[NDArray[np.float64], Labels]:
    return eigen_spectrum(op), None


def _converge(
    spec: ModelSpec,
    m: int,
    tol: float,
    solver: SectorSolver,
    cap: int | None,
    growth: float,
) -> Spectrum:
    if m < 1 or tol <= 0:
        raise DomainError(f"Need m >= 1 and tol > 0, got m={m}, tol={tol}")
    cap = cap or default_cutoff_cap(spec)
    cutoffs = list(spec.cutoffs)
    history: list[list[int]] = []
    previous: NDArray[np.float64] | None = None
    while True:
        current_spec = spec.with_cutoffs(cutoffs)
        with tracer.start_as_current_span("solve_truncation") as span:
            op = build(current_spec)
            span.set_attribute("dimension", op.dim)
            span.set_attribute("cutoffs", cutoffs)
            values, labels = solver(op)
        history.append(list(cutoffs))
        stable = 0 if previous is None else _stable_prefix(values, previous, tol)
        logger.debug(f"Cutoffs {cutoffs}: {stable} leading eigenvalues stable")
        if stable >= m:
            logger.info(
                f"{spec.family.value}: first {m} eigenvalues converged to {tol:g} "
                f"at cutoffs {cutoffs}"
            )
            return Spectrum(
                eigenvalues=values.tolist(),
                parity=None if labels is None else labels.tolist(),
                converged_count=m,
                cutoffs_used=cutoffs,
                cutoff_history=history,
                tol=tol,
                model=current_spec,
            )
        if all(c >= cap for c in cutoffs):
            logger.warning(
                f"{spec.family.value}: cutoff cap {cap} reached with only {stable} "
                f"of {m} eigenvalues converged"
            )
            return Spectrum(
                eigenvalues=values.tolist(),
                parity=None if labels is None else labels.tolist(),
                converged_count=stable,
                cutoffs_used=cutoffs,
                cutoff_history=history,
                tol=tol,
                capped=True,
                model=current_spec,
            )
        previous = values
        cutoffs = _grow(cutoffs, growth, cap)


def converged_spectrum(
    spec: ModelSpec,
    m: int,
    tol: float,
    cap: int | None = None,
    growth: float = CUTOFF_GROWTH,
) -> Spectrum:
    """Grows the cutoffs geometrically until the first m eigenvalues settle.

    Args:
        spec: Model; its cutoffs are the starting point.
        m: Number of leading eigenvalues that must be stable.
        tol: Largest change allowed between successive cutoffs.
        cap: Per-mode cutoff cap, family default when None.
        growth: Cutoff growth factor (rounded up).

    Returns:
        The spectrum at the final cutoffs. When the cap is hit the result is
        flagged `capped` and converged_count counts the stable prefix.
    """
    with tracer.start_as_current_span("converged_spectrum") as span:
        span.set_attribute("family", spec.family.value)
        span.set_attribute("m", m)
        return _converge(spec, m, tol, _whole_spectrum, cap, growth)


def parity_sectors(op: TruncatedOperator) -> tuple[NDArray[np.float64], NDArray[np.str_]]:
    """Diagonalises the two parity blocks of a two-level single-mode operator.

    Returns:
        Merged ascending eigenvalues and their "+" / "-" labels.
    """
    matrix = _matrix_of(op)
    signs = parity_signs(op.basis)
    values = []
    labels = []
    for sign, label in ((1.0, "+"), (-1.0, "-")):
        index = np.flatnonzero(signs == sign)
        block = matrix[np.ix_(index, index)]
        values.append(eigen_spectrum(block))
        labels.append(np.full(index.size, label))
    merged = np.concatenate(values)
    order = np.argsort(merged, kind="stable")
    return merged[order], np.concatenate(labels)[order]


def parity_split(
    spec: ModelSpec,
    m: int,
    tol: float,
    cap: int | None = None,
    growth: float = CUTOFF_GROWTH,
) -> Spectrum:
    """converged_spectrum with every truncation solved per parity sector."""
    if spec.family not in (ModelFamily.QR, ModelFamily.QRABI):
        raise DomainError(f"Parity splitting is not available for {spec.family.value}")
    with tracer.start_as_current_span("parity_split") as span:
        span.set_attribute("family", spec.family.value)
        span.set_attribute("m", m)
        return _converge(spec, m, tol, parity_sectors, cap, growth)


def _inertia_count(ldu: NDArray[np.float64], ipiv: NDArray[np.int32], tie_tol: float) -> int:
    """Counts non-positive eigenvalues of the block diagonal factor D.

    ipiv follows the LAPACK lower convention: a negative pair ipiv[i] = ipiv[i+1]
    marks a 2x2 block in rows i, i+1.
    """
    diagonal = np.diagonal(ldu)
    below = np.diagonal(ldu, -1)
    count = 0
    i = 0
    size = diagonal.size
    while i < size:
        if ipiv[i] > 0 or i + 1 == size:
            pivots = [diagonal[i]]
            i += 1
        else:
            a, b, c = diagonal[i], below[i], diagonal[i + 1]
            mean = 0.5 * (a + c)
            radius = math.hypot(0.5 * (a - c), b)
            pivots = [mean - radius, mean + radius]
            i += 2
        count += sum(1 for p in pivots if p < 0 or abs(p) < tie_tol)
    return count


def count_below(op: OperatorLike, lam: float) -> int:
    """#{eigenvalues <= lam} from the inertia of matrix - lam I.

    Uses the Bunch-Kaufman factorization (LAPACK sytrf); pivots within
    dimension * eps * ||matrix|| of zero count as ties. Falls back to a full
    eigensolve if the factorization breaks down.
    """
    if not math.isfinite(lam):
        raise DomainError(f"Counting threshold must be finite, got {lam}")
    matrix = _matrix_of(op)
    size = matrix.shape[0]
    if size == 0:
        return 0
    with tracer.start_as_current_span("count_below") as span:
        span.set_attribute("dimension", size)
        span.set_attribute("lambda", lam)
        norm = float(np.abs(matrix).sum(axis=1).max())
        tie_tol = size * np.finfo(float).eps * max(norm, np.finfo(float).tiny)
        shifted = np.array(matrix, dtype=float, order="F")
        shifted[np.diag_indices(size)] -= lam
        sytrf, sytrf_lwork = get_lapack_funcs(("sytrf", "sytrf_lwork"), (shifted,))
        lwork = _compute_lwork(sytrf_lwork, size, lower=1)
        ldu, ipiv, info = sytrf(shifted, lwork=lwork, lower=1, overwrite_a=1)
        if info < 0 or not np.all(np.isfinite(np.diagonal(ldu))):
            logger.warning(
                f"Symmetric indefinite factorization broke down (info={info}) at "
                f"lambda={lam}; counting from a full eigensolve"
            )
            values = eigen_spectrum(matrix)
            return int(np.count_nonzero(values <= lam + tie_tol))
        return _inertia_count(ldu, ipiv, tie_tol)


def _verdict(counts: list[int]) -> Verdict:
    pairs = list(itertools.pairwise(counts))
    return Verdict(
        max_two=all(c <= 2 for c in counts),
        no_adjacent_empty=not any(a == 0 and b == 0 for a, b in pairs),
        no_adjacent_double=not any(a == 2 and b == 2 for a, b in pairs),
    )


def braak_intervals(spectrum: Spectrum, shift: float, Nmax: int) -> IntervalReport:
    """Counts shifted eigenvalues in I_N = [N, N+1) for N = 0..Nmax.

    Only converged eigenvalues are used, and the converged prefix must reach
    past Nmax + 1. With parity labels the verdicts are given per parity class
    and as their conjunction "all"; otherwise for the total counts.

    Raises:
        CoverageError: converged eigenvalues stop short of Nmax + 1.
    """
    labelled = spectrum.parity is not None
    if Nmax < 0:
        empty = Verdict(max_two=True, no_adjacent_empty=True, no_adjacent_double=True)
        classes = ["+", "-", "all"] if labelled else ["total"]
        return IntervalReport(
            shift_applied=shift, nmax=Nmax, verdicts={c: empty for c in classes}
        )

    converged = np.asarray(spectrum.eigenvalues[: spectrum.converged_count]) + shift
    limit = Nmax + 1
    if converged.size == 0 or converged[-1] <= limit + BOUNDARY_TOL:
        first_uncovered = (
            0 if converged.size == 0 else min(Nmax, max(0, math.floor(converged[-1])))
        )
        raise CoverageError(
            f"Converged eigenvalues end at {converged[-1] if converged.size else None}; "
            f"interval I_{first_uncovered} is not fully covered",
            first_uncovered=first_uncovered,
        )

    totals = [0] * (Nmax + 1)
    plus = [0] * (Nmax + 1)
    minus = [0] * (Nmax + 1)
    flags: list[float] = []
    for position, value in enumerate(converged):
        if value >= limit + BOUNDARY_TOL:
            break
        nearest = round(value)
        if abs(value - nearest) <= BOUNDARY_TOL:
            interval = nearest - 1
            flags.append(float(value))
        else:
            interval = math.floor(value)
        if not 0 <= interval <= Nmax:
            continue
        totals[interval] += 1
        if labelled:
            assert spectrum.parity is not None
            if spectrum.parity[position] == "+":
                plus[interval] += 1
            else:
                minus[interval] += 1
    if flags:
        logger.info(f"{len(flags)} shifted eigenvalues sit on interval boundaries")

    per_interval = [
        IntervalCount(
            N=N,
            lower=float(N),
            upper=float(N + 1),
            count_total=totals[N],
            count_plus=plus[N] if labelled else None,
            count_minus=minus[N] if labelled else None,
        )
        for N in range(Nmax + 1)
    ]
    if labelled:
        plus_verdict, minus_verdict = _verdict(plus), _verdict(minus)
        verdicts = {
            "+": plus_verdict,
            "-": minus_verdict,
            "all": Verdict(
                max_two=plus_verdict.max_two and minus_verdict.max_two,
                no_adjacent_empty=plus_verdict.no_adjacent_empty
                and minus_verdict.no_adjacent_empty,
                no_adjacent_double=plus_verdict.no_adjacent_double
                and minus_verdict.no_adjacent_double,
            ),
        }
    else:
        verdicts = {"total": _verdict(totals)}
    return IntervalReport(
        per_interval=per_interval,
        verdicts=verdicts,
        shift_applied=shift,
        nmax=Nmax,
        boundary_flags=flags,
    )
