"""Hamiltonian embedding of general linear ODE systems.

A system du/dt = A u + b is first made homogeneous by augmenting the state
with a constant unit component, then A is split into Hermitian and
anti-Hermitian parts A = H1 + i H2.  The warp in an auxiliary variable p
turns the H1 (dissipative) part into transport, giving the Hermitian
generator -(H1 (x) P_mu) + (H2 (x) I) on the extended register, which is
block diagonal over p frequencies and can be evolved exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grids import Dense, Diagonal, Identity, KronOperator, Momentum, PGrid
from .warp import IntegrateP, RecoveryMethod, WarpedState, extend_initial, recover
from . import evolvers

__all__ = [
    "LinearSystem",
    "HermitianSplit",
    "SchrodingerisedSystem",
    "StabilityWarning",
    "augment_inhomogeneous",
    "hermitian_split",
    "assemble_schrodingerised",
    "default_pgrid",
    "sparsity",
    "max_norm",
]


class StabilityWarning(UserWarning):
    """Positive eigenvalues in the Hermitian part: some p-transport runs
    rightward and the standard recovery contract may degrade."""


def _as_square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


@dataclass(frozen=True)
class LinearSystem:
    """du/dt = A u + b with constant A and b.

    Time-dependent sources are rejected: the augmentation below only yields
    a constant companion matrix for constant b.
    """

    a_mat: np.ndarray
    b: Optional[np.ndarray]
    u0: np.ndarray

    def __post_init__(self):
        if callable(self.b):
            raise TypeError("time-dependent b(t) is not supported; b must be a constant vector")
        a = _as_square(self.a_mat)
        u0 = np.asarray(self.u0, dtype=complex).reshape(-1)
        if u0.size != a.shape[0]:
            raise ValueError("u0 length does not match A")
        b = self.b
        if b is not None:
            b = np.asarray(b, dtype=complex).reshape(-1)
            if b.size != a.shape[0]:
                raise ValueError("b length does not match A")
            if not np.all(np.isfinite(b)):
                raise ValueError("b has non-finite entries")
            b.setflags(write=False)
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "u0", u0)
        a.setflags(write=False)
        u0.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.a_mat.shape[0]

    def is_homogeneous(self) -> bool:
        return self.b is None or not np.any(self.b)


def augment_inhomogeneous(sys: LinearSystem) -> LinearSystem:
    """Fold a constant source into one extra state component.

    Returns [[A, b], [0, 0]] acting on [u; v] with v(0) = 1; v stays equal
    to 1 along the exact flow, so the top block solves the original system.
    """
    if sys.is_homogeneous():
        return sys
    n = sys.dim
    a_aug = np.zeros((n + 1, n + 1), dtype=complex)
    a_aug[:n, :n] = sys.a_mat
    a_aug[:n, n] = sys.b
    u0_aug = np.concatenate([sys.u0, [1.0]])
    return LinearSystem(a_mat=a_aug, b=None, u0=u0_aug)


def sparsity(mat: np.ndarray, tol: float = 0.0) -> int:
    """Maximum number of nonzeros per row."""
    return int(np.count_nonzero(np.abs(np.asarray(mat)) > tol, axis=1).max())


def max_norm(mat: np.ndarray) -> float:
    return float(np.abs(np.asarray(mat)).max())


@dataclass(frozen=True)
class HermitianSplit:
    """A = H1 + i H2 with both parts Hermitian.

    H1 carries dissipation (stable systems have H1 negative semi-definite,
    recorded in ``stable``), H2 the oscillatory part.
    """

    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        h1 = _as_square(self.h1)
        h2 = _as_square(self.h2)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)
        h1.setflags(write=False)
        h2.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.h1.shape[0]

    @property
    def stable(self) -> bool:
        return float(np.linalg.eigvalsh(self.h1).max()) <= 1e-10

    def reassemble(self) -> np.ndarray:
        return self.h1 + 1j * self.h2

    def report(self) -> dict:
        """Sparsities and max-norms of both parts (oracle-access bookkeeping)."""
        return {
            "s_h1": sparsity(self.h1, tol=1e-14),
            "s_h2": sparsity(self.h2, tol=1e-14),
            "max_h1": max_norm(self.h1),
            "max_h2": max_norm(self.h2),
        }


def hermitian_split(a_mat: np.ndarray) -> HermitianSplit:
    a = _as_square(a_mat)
    h1 = (a + a.conj().T) / 2.0
    h2 = (a - a.conj().T) / 2j
    return HermitianSplit(h1=h1, h2=h2)


@dataclass(frozen=True)
class SchrodingerisedSystem:
    """Hermitian dynamics on the (u (x) p) register plus the warped start."""

    split: HermitianSplit
    pgrid: PGrid
    w0: WarpedState

    @property
    def dim(self) -> int:
        return self.split.dim * self.pgrid.points

    def h_terms(self) -> list[KronOperator]:
        """Generator in the p-sample frame: -(H1 (x) P_mu) + (H2 (x) I)."""
        npts = self.pgrid.points
        return [
            KronOperator([Dense(self.split.h1), Momentum(self.pgrid.mu())], scale=-1.0),
            KronOperator([Dense(self.split.h2), Identity(npts)]),
        ]

    def hdiag_terms(self) -> list[KronOperator]:
        """Generator in the p-frequency frame: -(H1 (x) D_mu) + (H2 (x) I)."""
        npts = self.pgrid.points
        return [
            KronOperator([Dense(self.split.h1), Diagonal(self.pgrid.mu())], scale=-1.0),
            KronOperator([Dense(self.split.h2), Identity(npts)]),
        ]

    def dense_h(self, max_dim: int = 4096) -> np.ndarray:
        return sum(term.dense(max_dim) for term in self.h_terms())

    def dense_hdiag(self, max_dim: int = 4096) -> np.ndarray:
        return sum(term.dense(max_dim) for term in self.hdiag_terms())

    def evolve(self, times) -> list[WarpedState]:
        """Exact evolution at the requested times (block diagonal over p)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        states = evolvers.evolve_mode_blocks(
            self.split.h1, self.split.h2, self.pgrid, self.w0.values, times
        )
        return [
            WarpedState(values=s, pgrid=self.pgrid, t=float(t), grid=self.w0.grid)
            for t, s in zip(times, states)
        ]

    def solve(self, t_final: float, method: RecoveryMethod = IntegrateP()) -> np.ndarray:
        """Evolve to t_final and recover the u-register vector."""
        return recover(self.evolve([t_final])[0], method)


def assemble_schrodingerised(
    split: HermitianSplit, pgrid: PGrid, u0: np.ndarray
) -> SchrodingerisedSystem:
    """Warp the initial data and bundle the Hermitian generator.

    Instability is a warning, not an error: the construction still goes
    through, but rightward p-transport invalidates the recovery contract.
    """
    if not split.stable:
        warnings.warn(
            "H1 is not negative semi-definite; p-transport moves rightward and "
            "recovery may be inaccurate",
            StabilityWarning,
            stacklevel=2,
        )
    w0 = extend_initial(np.asarray(u0, dtype=complex), pgrid)
    return SchrodingerisedSystem(split=split, pgrid=pgrid, w0=w0)


def default_pgrid(
    split: HermitianSplit,
    t_final: float,
    points: int = 512,
    right: float = 10.0,
    left_support: float = -1.0,
    alpha_neg: float = 10.0,
) -> PGrid:
    """Size the p-domain from the transport speed of the dissipative part.

    The fastest wave speed is the spectral radius of H1 (power iteration to
    1e-6); the left edge follows the containment rule L = L0 - T * s_max,
    then is nudged further left so that p = 0 lands exactly on the lattice.
    Pinning the node at zero keeps the recovery quadrature boundary fixed
    under refinement, which is what makes dp-convergence studies clean.
    """
    s_max = max(evolvers.spectral_radius(split.h1, tol=1e-6), 1e-12)
    left = min(left_support - t_final * s_max, left_support - 1e-6)
    # largest node count above zero whose spacing still covers [left, right]
    m = max(1, int(np.floor(points * right / (right - left))))
    dp = right / m
    return PGrid(
        left=right - points * dp,
        right=right,
        points=points,
        alpha_neg=alpha_neg,
        left_support=left_support,
    )
