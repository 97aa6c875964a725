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
"""Truncated matrices of the model Hamiltonians.

Operators are assembled from sparse Kronecker products and stored dense. The
basis is the spin index (slowest) followed by the oscillator occupations of
each mode in row-major order.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

from rabi_spectra.errors import ContractViolation, DomainError
from rabi_spectra.overlaps import displacement_matrix
from rabi_spectra.utils.typing import (
    BasisDescriptor,
    ModelFamily,
    ModelSpec,
    RabiParameters,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncatedOperator:
    """A real symmetric matrix on a truncated product basis. Read-only."""

    basis: BasisDescriptor
    matrix: NDArray[np.float64]

    def __post_init__(self) -> None:
        dim = self.basis.dim
        if self.matrix.shape != (dim, dim):
            raise ContractViolation(
                f"Matrix shape {self.matrix.shape} does not match basis dimension {dim}"
            )
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    @classmethod
    def from_matrix(cls, matrix: NDArray[np.float64]) -> "TruncatedOperator":
        """Wraps an arbitrary square matrix on a single-mode, single-spin basis."""
        matrix = np.array(matrix, dtype=float)
        basis = BasisDescriptor(
            modes=1, per_mode_cutoff=[matrix.shape[0] - 1], spin_dim=1
        )
        return cls(basis=basis, matrix=matrix)


def _single_mode_position(cutoff: int) -> sp.csr_matrix:
    """<n+1|x|n> = sqrt((n+1)/2)."""
    off = np.sqrt(np.arange(1, cutoff + 1) / 2.0)
    return sp.diags([off, off], [-1, 1], shape=(cutoff + 1, cutoff + 1), format="csr")


def _fock_operator(basis: BasisDescriptor, mode: int, single: sp.spmatrix) -> sp.csr_matrix:
    factors = [sp.identity(c + 1, format="csr") for c in basis.per_mode_cutoff]
    factors[mode] = single
    return functools.reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


def _with_spin(spin: NDArray[np.float64] | sp.spmatrix, fock: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(spin, fock, format="csr")


def _harmonic_fock(basis: BasisDescriptor) -> sp.csr_matrix:
    totals = np.indices(basis.fock_shape).reshape(basis.modes, -1).sum(axis=0)
    return sp.diags(totals + 0.5 * basis.modes, format="csr")


def _symmetric_dense(matrix: sp.spmatrix | NDArray[np.float64]) -> NDArray[np.float64]:
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
    return 0.5 * (dense + dense.T)


def position_matrix(basis: BasisDescriptor, mode: int) -> TruncatedOperator:
    """Multiplication by x_mode (1-based mode), identity on spin and other modes."""
    if not 1 <= mode <= basis.modes:
        raise DomainError(f"Mode {mode} out of range 1..{basis.modes}")
    single = _single_mode_position(basis.per_mode_cutoff[mode - 1])
    fock = _fock_operator(basis, mode - 1, single)
    spin = sp.identity(basis.spin_dim, format="csr")
    return TruncatedOperator(basis=basis, matrix=_symmetric_dense(_with_spin(spin, fock)))


def harmonic_matrix(basis: BasisDescriptor) -> TruncatedOperator:
    """Diagonal sum_j (n_j + 1/2) on every spin level."""
    spin = sp.identity(basis.spin_dim, format="csr")
    return TruncatedOperator(
        basis=basis, matrix=_with_spin(spin, _harmonic_fock(basis)).toarray()
    )


def coupling_pairs(spec: ModelSpec) -> list[tuple[int, int, int]]:
    """(level i, level j, mode) triples, 0-based, of the position couplings.

    Two-level models couple the two levels through the single mode. Xi is the
    chain k <-> k+1, Lambda the star into the top level and Vee the star out of
    the bottom level, with mode k driving the k-th link.
    """
    family = spec.family
    if family is ModelFamily.AB_FRAME:
        return []
    if family.two_level:
        return [(0, 1, 0)]
    top = spec.spin_dim - 1
    if family is ModelFamily.XI:
        return [(k, k + 1, k) for k in range(top)]
    if family is ModelFamily.LAMBDA:
        return [(k, top, k) for k in range(top)]
    return [(0, k + 1, k) for k in range(top)]


def level_energies(spec: ModelSpec) -> list[float]:
    """Diagonal spin energies added to the oscillator part."""
    if spec.family.two_level:
        params = spec.rabi_parameters
        return [spec.eps * params.gamma1, spec.eps * params.gamma2]
    return [0.0, *spec.gammas]


def perturbation_blocks(cutoff: int, params: RabiParameters) -> NDArray[np.float64]:
    """The eps-coefficient [[b1 I, b2 D^T], [b2 D, b1 I]] of the AB-frame operator."""
    d = displacement_matrix(cutoff, params.alpha)
    identity = params.beta1 * np.eye(cutoff + 1)
    return np.block([[identity, params.beta2 * d.T], [params.beta2 * d, identity]])


def _spin_projector(spin_dim: int, i: int, j: int) -> NDArray[np.float64]:
    projector = np.zeros((spin_dim, spin_dim))
    projector[i, j] = projector[j, i] = 1.0
    return projector


def build(spec: ModelSpec) -> TruncatedOperator:
    """Assembles the truncated Hamiltonian of `spec`."""
    basis = spec.basis()
    if spec.family is ModelFamily.AB_FRAME:
        cutoff = spec.cutoffs[0]
        blocks = perturbation_blocks(cutoff, spec.rabi_parameters)
        oscillator = np.diag(np.tile(np.arange(cutoff + 1) + 0.5, 2))
        return TruncatedOperator(
            basis=basis, matrix=_symmetric_dense(oscillator + spec.eps * blocks)
        )

    spin_identity = sp.identity(basis.spin_dim, format="csr")
    matrix = _with_spin(spin_identity, _harmonic_fock(basis))
    for (i, j, mode), alpha in zip(coupling_pairs(spec), spec.alphas, strict=True):
        position = _fock_operator(
            basis, mode, _single_mode_position(basis.per_mode_cutoff[mode])
        )
        matrix = matrix + alpha * _with_spin(_spin_projector(basis.spin_dim, i, j), position)
    levels = sp.diags(level_energies(spec), format="csr")
    matrix = matrix + _with_spin(levels, sp.identity(basis.fock_dim, format="csr"))
    if spec.family is ModelFamily.QRABI:
        matrix = matrix - 0.5 * sp.identity(basis.dim, format="csr")
    logger.debug(f"Built {spec.family.value} operator of dimension {basis.dim}")
    return TruncatedOperator(basis=basis, matrix=_symmetric_dense(matrix))


def parity_signs(basis: BasisDescriptor) -> NDArray[np.float64]:
    """Diagonal of sigma_z (-1)^n on a two-level single-mode basis."""
    if basis.spin_dim != 2 or basis.modes != 1:
        raise DomainError(
            f"Parity is defined for two levels and one mode, got spin_dim="
            f"{basis.spin_dim}, modes={basis.modes}"
        )
    occupation = np.where(np.arange(basis.fock_dim) % 2 == 0, 1.0, -1.0)
    return np.concatenate([occupation, -occupation])


def parity_matrix(basis: BasisDescriptor) -> TruncatedOperator:
    return TruncatedOperator(basis=basis, matrix=np.diag(parity_signs(basis)))
