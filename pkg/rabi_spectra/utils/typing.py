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
from enum import Enum
from typing import (
    Literal,
)

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    model_validator,
)

from rabi_spectra.errors import SpecError

# Largest N + k for which overlap sums are supported.
MAX_OVERLAP_DEGREE = 120
# The AB frame needs every displacement entry up to (cutoff, cutoff).
MAX_AB_FRAME_CUTOFF = MAX_OVERLAP_DEGREE // 2


class PolynomialConvention(str, Enum):
    """Normalisation of the Hermite polynomials.

    LADDER is the normalisation 2^{-N/2} H_N, whose Hermite functions have
    squared norm sqrt(pi) N!.
    """

    LADDER = "ladder"
    PHYSICISTS = "physicists"


class ModelFamily(str, Enum):
    QR = "QR"
    QRABI = "QRabi"
    AB_FRAME = "ABFrame"
    XI = "Xi"
    LAMBDA = "Lambda"
    VEE = "Vee"

    @property
    def two_level(self) -> bool:
        return self in (ModelFamily.QR, ModelFamily.QRABI, ModelFamily.AB_FRAME)


class RabiParameters(BaseModel):
    """Couplings of the symmetric two-level model.

    beta1 and beta2 are the mean and half-difference of the level energies.
    """

    model_config = ConfigDict(frozen=True)

    alpha: float
    gamma1: float = 1.0
    gamma2: float = -1.0
    eps: float = 0.0

    @classmethod
    def from_delta(cls, alpha: float, delta: float, eps: float = 0.0) -> "RabiParameters":
        return cls(alpha=alpha, gamma1=delta, gamma2=-delta, eps=eps)

    @property
    def beta1(self) -> float:
        return 0.5 * (self.gamma1 + self.gamma2)

    @property
    def beta2(self) -> float:
        return 0.5 * (self.gamma1 - self.gamma2)


class BasisDescriptor(BaseModel):
    """Truncated Fock basis tensored with a spin space.

    Indices run row-major over (spin, n_1, ..., n_modes) with the spin slowest.
    """

    model_config = ConfigDict(frozen=True)

    modes: int = Field(ge=1)
    per_mode_cutoff: list[int]
    spin_dim: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_cutoffs(self) -> "BasisDescriptor":
        if len(self.per_mode_cutoff) != self.modes:
            raise SpecError(
                f"Expected {self.modes} per-mode cutoffs, got {self.per_mode_cutoff}"
            )
        if any(cutoff < 0 for cutoff in self.per_mode_cutoff):
            raise SpecError(f"Cutoffs must be non-negative: {self.per_mode_cutoff}")
        return self

    @property
    def fock_shape(self) -> tuple[int, ...]:
        return tuple(cutoff + 1 for cutoff in self.per_mode_cutoff)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.spin_dim, *self.fock_shape)

    @property
    def fock_dim(self) -> int:
        return math.prod(self.fock_shape)

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_dim

    def index(self, spin: int, occupation: tuple[int, ...]) -> int:
        """Flat index of the basis vector |spin> x |n_1 ... n_modes>."""
        return int(np.ravel_multi_index((spin, *occupation), self.shape))

    def unravel(self, index: int) -> tuple[int, tuple[int, ...]]:
        """Inverse of index()."""
        spin, *occupation = (int(i) for i in np.unravel_index(index, self.shape))
        return spin, tuple(occupation)

    def occupation_totals(self) -> np.ndarray:
        """Total occupation n_1 + ... + n_modes for every flat index."""
        grids = np.indices(self.fock_shape).reshape(self.modes, -1).sum(axis=0)
        return np.tile(grids, self.spin_dim)


class ModelSpec(BaseModel):
    """One model Hamiltonian together with its truncation.

    Two-level families take alphas=[alpha]; QR and ABFrame take
    gammas=[gamma1, gamma2], QRabi takes delta. The N-level families take
    spin_dim - 1 couplings and spin_dim - 1 level energies.
    """

    model_config = ConfigDict(frozen=True)

    family: ModelFamily
    spin_dim: int = 2
    alphas: list[float]
    gammas: list[float] = Field(default_factory=list)
    delta: float | None = None
    eps: float = 0.0
    cutoffs: list[int]

    @model_validator(mode="after")
    def _check_family(self) -> "ModelSpec":
        family = self.family
        if family.two_level:
            if self.spin_dim != 2:
                raise SpecError(f"{family.value} is a two-level model, got spin_dim={self.spin_dim}")
            if len(self.alphas) != 1:
                raise SpecError(f"{family.value} takes one coupling, got {self.alphas}")
            if family is ModelFamily.QRABI:
                if self.delta is None:
                    raise SpecError("QRabi needs delta")
                if self.delta <= 0:
                    raise SpecError(f"QRabi needs delta > 0, got {self.delta}")
                if self.gammas:
                    raise SpecError("QRabi takes delta, not gammas")
            elif len(self.gammas) != 2:
                raise SpecError(f"{family.value} takes gammas=[gamma1, gamma2], got {self.gammas}")
            if family is ModelFamily.QR and not self.gammas[0] > self.gammas[1]:
                raise SpecError(f"QR requires gamma1 > gamma2, got {self.gammas}")
        else:
            if self.spin_dim < 2:
                raise SpecError(f"{family.value} needs spin_dim >= 2, got {self.spin_dim}")
            n = self.spin_dim - 1
            if len(self.alphas) != n or len(self.gammas) != n:
                raise SpecError(
                    f"{family.value} with spin_dim={self.spin_dim} takes {n} alphas "
                    f"and {n} gammas, got {self.alphas} and {self.gammas}"
                )
            if any(alpha == 0 for alpha in self.alphas):
                raise SpecError(f"All couplings must be nonzero, got {self.alphas}")
            if any(a > b for a, b in zip(self.gammas, self.gammas[1:], strict=False)):
                raise SpecError(f"Level energies must be nondecreasing, got {self.gammas}")
        if len(self.cutoffs) != self.modes:
            raise SpecError(f"Expected {self.modes} cutoffs, got {self.cutoffs}")
        if any(cutoff < 1 for cutoff in self.cutoffs):
            raise SpecError(f"Cutoffs must be positive, got {self.cutoffs}")
        if family is ModelFamily.AB_FRAME and self.cutoffs[0] > MAX_AB_FRAME_CUTOFF:
            raise SpecError(
                f"ABFrame cutoff {self.cutoffs[0]} exceeds {MAX_AB_FRAME_CUTOFF}"
            )
        return self

    @classmethod
    def qr(
        cls, alpha: float, gamma1: float, gamma2: float, eps: float, cutoff: int
    ) -> "ModelSpec":
        return cls(
            family=ModelFamily.QR,
            alphas=[alpha],
            gammas=[gamma1, gamma2],
            eps=eps,
            cutoffs=[cutoff],
        )

    @classmethod
    def qrabi(cls, alpha: float, delta: float, eps: float, cutoff: int) -> "ModelSpec":
        return cls(
            family=ModelFamily.QRABI,
            alphas=[alpha],
            delta=delta,
            eps=eps,
            cutoffs=[cutoff],
        )

    @classmethod
    def ab_frame(cls, params: RabiParameters, cutoff: int) -> "ModelSpec":
        return cls(
            family=ModelFamily.AB_FRAME,
            alphas=[params.alpha],
            gammas=[params.gamma1, params.gamma2],
            eps=params.eps,
            cutoffs=[cutoff],
        )

    @classmethod
    def n_level(
        cls,
        family: ModelFamily,
        alphas: list[float],
        gammas: list[float],
        cutoff: int,
    ) -> "ModelSpec":
        return cls(
            family=family,
            spin_dim=len(alphas) + 1,
            alphas=alphas,
            gammas=gammas,
            cutoffs=[cutoff] * len(alphas),
        )

    @property
    def modes(self) -> int:
        return 1 if self.family.two_level else self.spin_dim - 1

    @property
    def rabi_parameters(self) -> RabiParameters:
        if not self.family.two_level:
            raise SpecError(f"{self.family.value} is not a two-level model")
        if self.family is ModelFamily.QRABI:
            assert self.delta is not None
            return RabiParameters.from_delta(self.alphas[0], self.delta, self.eps)
        return RabiParameters(
            alpha=self.alphas[0],
            gamma1=self.gammas[0],
            gamma2=self.gammas[1],
            eps=self.eps,
        )

    def basis(self) -> BasisDescriptor:
        return BasisDescriptor(
            modes=self.modes, per_mode_cutoff=list(self.cutoffs), spin_dim=self.spin_dim
        )

    def with_cutoffs(self, cutoffs: list[int]) -> "ModelSpec":
        return self.model_validate({**self.model_dump(), "cutoffs": cutoffs})


class OverlapResult(BaseModel):
    N: int
    k: int
    alpha: float
    value: float
    method: Literal["closed_form", "quadrature"]
    cauchy_schwarz_bound: float


class LaguerreZeroSet(BaseModel):
    degree_max: int
    zeros: dict[int, list[float]]


class AvoidanceEntry(BaseModel):
    k: int
    delta: float
    nearest_zero: float


class AvoidanceSequence(BaseModel):
    x0: float
    kcap: int
    entries: list[AvoidanceEntry] = Field(default_factory=list)
    exhausted: bool = False


class FirstOrderSplit(BaseModel):
    N: int
    mu_plus: float
    mu_minus: float
    w_plus: list[float]
    w_minus: list[float]
    beta1: float
    beta2: float
    overlap_ratio: float
    degenerate: bool
    laguerre_argument: float
    doubled_laguerre_argument: float


class QuasimodeForm(BaseModel):
    N: int
    K: int
    matrix: list[list[float]]
    mu2_minus: float
    mu2_plus: float
    tail_estimate: float


class QuasimodeExpansion(BaseModel):
    N: int
    K: int
    mu_plus: float
    mu2_plus: float
    mu2_minus: float
    w_plus: list[float]
    w_minus: list[float]
    u1_plus: list[float]
    u1_minus: list[float]
    u2_plus: list[float]
    u2_minus: list[float]


class QuasimodeResidual(BaseModel):
    N: int
    eps: float
    K: int
    cutoff: int
    residual: float
    residual_plus: float
    residual_minus: float
    lambda_plus: float
    lambda_minus: float
    margin_ok: bool


class Spectrum(BaseModel):
    eigenvalues: list[float]
    parity: list[Literal["+", "-"]] | None = None
    converged_count: int
    cutoffs_used: list[int]
    cutoff_history: list[list[int]] = Field(default_factory=list)
    tol: float
    capped: bool = False
    model: ModelSpec


class IntervalCount(BaseModel):
    N: int
    lower: float
    upper: float
    count_total: int
    count_plus: int | None = None
    count_minus: int | None = None


class Verdict(BaseModel):
    max_two: bool
    no_adjacent_empty: bool
    no_adjacent_double: bool

    @property
    def holds(self) -> bool:
        return self.max_two and self.no_adjacent_empty and self.no_adjacent_double


class IntervalReport(BaseModel):
    per_interval: list[IntervalCount] = Field(default_factory=list)
    verdicts: dict[str, Verdict] = Field(default_factory=dict)
    shift_applied: float
    nmax: int
    boundary_flags: list[float] = Field(default_factory=list)


class WeylPrediction(BaseModel):
    n: int
    Nlev: int
    leading_coeff: float
    subleading_coeff: float
    quadrature: Literal["product", "monte_carlo"]
    quadrature_points: int


class SymbolSample(BaseModel):
    """Symbol a1(X) + eps b1(X) at one point of the energy sphere.

    Complex matrices are stored as separate real and imaginary parts.
    """

    X: list[float]
    eps: float
    a1_real: list[list[float]]
    b1_imag: list[list[float]]
    eigenvalues: list[float]
    min_gap: float


class SmgesReport(BaseModel):
    eps: float
    samples: int
    seed: int
    mode: Literal["random", "grid"]
    min_gap: float
    argmin_X: list[float]
    max_hermitian_defect: float


class CountingRow(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(alias="lambda")
    count: int
    prediction: float
    rel_err: float
    flagged: bool


class CountingTable(BaseModel):
    prediction: WeylPrediction
    rows: list[CountingRow]
    reliability_bound: float
    positive: bool
    trend_slope: float | None = None


class QuasimodeIntervals(BaseModel):
    N: int
    eps: float
    C: float
    lambda_minus: float
    lambda_plus: float
    intervals: list[list[float]]
    disjoint: bool
    counts: list[int]
    union_count: int
