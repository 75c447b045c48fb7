"""Uniform periodic grids and Fourier collocation operators.

Conventions used throughout the package:

* A periodic axis with ``M`` points (``M`` an even power of two) on ``[a, b]``
  stores samples at ``x_j = a + j*dx``, ``j = 0..M-1``, with ``dx = (b-a)/M``.
* The collocation basis is ``exp(i*mu_l*(x - a))`` with the modes ordered
  monotonically, ``mu[k] = 2*pi*(k - M/2)/(b - a)`` for the 0-based column
  ``k``.  The change of basis matrix ``Phi`` (samples = Phi @ coefficients)
  then factors as ``Phi = sqrt(M) * S * F`` where ``S = diag(1, -1, 1, ...)``
  and ``F`` is the unitary DFT with the ``exp(+2*pi*i*j*k/M)/sqrt(M)`` kernel.
  The sign flip ``S`` is what lets an ordinary radix-2 FFT produce the
  monotone mode ordering, so operators stay matrix-free.
* Multi-dimensional states are flattened in C order: the first axis varies
  slowest, matching ``kron(A_1, ..., A_d)`` acting on ``a_1 (x) ... (x) a_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence, Union

import numpy as np

__all__ = [
    "Grid",
    "PGrid",
    "SpectralOps",
    "Identity",
    "Diagonal",
    "Momentum",
    "MomentumSquared",
    "Dense",
    "KronOperator",
    "fourier_matrix",
    "dft_matrix",
    "momentum_modes",
    "momentum_operator",
    "diag_from_function",
    "kron_apply",
    "to_modes",
    "from_modes",
    "flatten_index",
    "unflatten_index",
]


def _check_power_of_two(n: int, what: str) -> None:
    if n < 2 or n % 2 != 0 or (n & (n - 1)) != 0:
        raise ValueError(f"{what} must be an even power of two >= 2, got {n}")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice for the spatial variable, per dimension.

    ``points`` is the number of nodes per dimension (an even power of two),
    ``dims`` the number of spatial dimensions.  Node ``points`` (= ``b``) is
    identified with node 0.
    """

    a: float
    b: float
    points: int
    dims: int = 1

    def __post_init__(self):
        _check_power_of_two(self.points, "Grid.points")
        if not self.b > self.a:
            raise ValueError(f"need b > a, got [{self.a}, {self.b}]")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.points

    @property
    def qubits_per_dim(self) -> int:
        return int(math.log2(self.points))

    @property
    def size(self) -> int:
        """Total number of lattice sites, points**dims."""
        return self.points**self.dims

    def axis(self) -> np.ndarray:
        """Node coordinates along one dimension."""
        return self.a + self.dx * np.arange(self.points)

    def mu(self) -> np.ndarray:
        """Monotone Fourier modes for one axis."""
        return momentum_modes(self.points, self.a, self.b)

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays over the full lattice (C-order, sparse)."""
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.dims), indexing="ij", sparse=True))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dims


@dataclass(frozen=True)
class PGrid:
    """Uniform periodic lattice for the auxiliary variable p.

    ``alpha_neg`` is the decay rate of the initial extension on ``p < 0``
    (the rate on ``p >= 0`` is pinned to 1 so the warp matches ``exp(-p)``),
    and ``left_support`` estimates where that extension becomes negligible.
    """

    left: float
    right: float
    points: int
    alpha_neg: float = 10.0
    left_support: float = -1.0

    def __post_init__(self):
        _check_power_of_two(self.points, "PGrid.points")
        if not (self.left < 0.0 < self.right):
            raise ValueError(f"need left < 0 < right, got [{self.left}, {self.right}]")
        if self.alpha_neg < 1.0:
            raise ValueError("alpha_neg must be >= 1")
        if not (self.left < self.left_support < 0.0):
            raise ValueError("left_support must lie in (left, 0)")

    @property
    def dp(self) -> float:
        return (self.right - self.left) / self.points

    def axis(self) -> np.ndarray:
        return self.left + self.dp * np.arange(self.points)

    def mu(self) -> np.ndarray:
        return momentum_modes(self.points, self.left, self.right)

    def alpha(self, p) -> np.ndarray:
        """Piecewise decay rate: 1 on p >= 0, alpha_neg on p < 0."""
        p = np.asarray(p, dtype=float)
        return np.where(p >= 0.0, 1.0, self.alpha_neg)

    def warp_profile(self) -> np.ndarray:
        """Samples of exp(-alpha(p)|p|) on the lattice."""
        p = self.axis()
        return np.exp(-self.alpha(p) * np.abs(p))

    def index_of(self, p_star: float) -> int:
        """Index of the node equal to p_star, or raise if off-grid."""
        k = (p_star - self.left) / self.dp
        j = int(round(k))
        if j < 0 or j >= self.points or abs(k - j) > 1e-9:
            raise ValueError(f"p = {p_star} is not a grid node")
        return j

    def positive_indices(self) -> np.ndarray:
        return np.nonzero(self.axis() > self.dp * 1e-12)[0]


def dft_matrix(points: int) -> np.ndarray:
    """Unitary DFT matrix with kernel exp(+2*pi*i*j*k/M)/sqrt(M)."""
    _check_power_of_two(points, "points")
    j = np.arange(points)
    return np.exp(2j * np.pi * np.outer(j, j) / points) / math.sqrt(points)


def fourier_matrix(points: int) -> np.ndarray:
    """Collocation matrix Phi with Phi[j, l] = exp(i*mu_l*(x_j - a)).

    Independent of the interval: the phases reduce to
    exp(2*pi*i*j*(l - M/2)/M).  Satisfies Phi = sqrt(M) * S * F with
    S = diag((-1)^j) and F the unitary DFT above, and Phi^H Phi = M * I.
    """
    _check_power_of_two(points, "points")
    j = np.arange(points)
    shifted = np.arange(points) - points // 2
    return np.exp(2j * np.pi * np.outer(j, shifted) / points)


def momentum_modes(points: int, a: float, b: float) -> np.ndarray:
    """Monotone mode array mu[k] = 2*pi*(k - M/2)/(b - a)."""
    k = np.arange(points) - points // 2
    return 2.0 * np.pi * k / (b - a)


@dataclass(frozen=True)
class SpectralOps:
    """Dense operator matrices for one periodic axis.

    ``mu`` and ``x`` are the diagonals of the momentum-space and
    position-space multiplication operators; ``pmu = Phi diag(mu) Phi^-1``
    is the position-space momentum matrix (Hermitian).
    """

    phi: np.ndarray
    mu: np.ndarray
    x: np.ndarray
    pmu: np.ndarray

    def __post_init__(self):
        for arr in (self.phi, self.mu, self.x, self.pmu):
            arr.setflags(write=False)

    @property
    def dmu(self) -> np.ndarray:
        return np.diag(self.mu)

    @property
    def dx(self) -> np.ndarray:
        return np.diag(self.x)


def momentum_operator(grid: Grid) -> SpectralOps:
    """Build Phi, mu, x and the Hermitian momentum matrix for one axis."""
    m = grid.points
    phi = fourier_matrix(m)
    mu = momentum_modes(m, grid.a, grid.b)
    # Phi^-1 = Phi^H / M, so pmu = Phi diag(mu) Phi^H / M is Hermitian by
    # construction up to rounding.
    pmu = (phi * mu) @ phi.conj().T / m
    return SpectralOps(phi=phi, mu=mu, x=grid.axis(), pmu=pmu)


# ---------------------------------------------------------------------------
# FFT-based application of Phi and Phi^-1 along one axis of an ndarray.
# ---------------------------------------------------------------------------


def _alternating(n: int, axis: int, ndim: int) -> np.ndarray:
    s = np.ones(n)
    s[1::2] = -1.0
    shape = [1] * ndim
    shape[axis] = n
    return s.reshape(shape)


def to_modes(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Apply Phi^-1 along ``axis`` (samples -> monotone mode coefficients)."""
    axis = axis % values.ndim
    n = values.shape[axis]
    s = _alternating(n, axis, values.ndim)
    return np.fft.fft(values * s, axis=axis) / n


def from_modes(coeffs: np.ndarray, axis: int = -1) -> np.ndarray:
    """Apply Phi along ``axis`` (mode coefficients -> samples)."""
    axis = axis % coeffs.ndim
    n = coeffs.shape[axis]
    s = _alternating(n, axis, coeffs.ndim)
    return s * np.fft.ifft(coeffs, axis=axis) * n


def apply_momentum(values: np.ndarray, mu: np.ndarray, axis: int = -1, power: int = 1) -> np.ndarray:
    """Apply (Phi diag(mu)^power Phi^-1) along one axis, matrix-free."""
    axis = axis % values.ndim
    shape = [1] * values.ndim
    shape[axis] = len(mu)
    weight = (mu.astype(float) ** power).reshape(shape)
    return from_modes(weight * to_modes(values, axis=axis), axis=axis)


# ---------------------------------------------------------------------------
# Kronecker-structured operators.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Identity:
    dim: int

    def matrix(self) -> np.ndarray:
        return np.eye(self.dim)


@dataclass(frozen=True)
class Diagonal:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values))
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.values)

    def matrix(self) -> np.ndarray:
        return np.diag(self.values)


@dataclass(frozen=True)
class Momentum:
    """Momentum operator factor for one periodic axis, applied via FFT."""

    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        self.mu.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.mu)

    power = 1

    def matrix(self) -> np.ndarray:
        phi = fourier_matrix(self.dim)
        return (phi * self.mu) @ phi.conj().T / self.dim


@dataclass(frozen=True)
class MomentumSquared:
    mu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        self.mu.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.mu)

    power = 2

    def matrix(self) -> np.ndarray:
        phi = fourier_matrix(self.dim)
        return (phi * self.mu**2) @ phi.conj().T / self.dim


@dataclass(frozen=True)
class Dense:
    values: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.values)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("Dense factor must be a square matrix")
        object.__setattr__(self, "values", mat)
        self.values.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def matrix(self) -> np.ndarray:
        return self.values


Factor = Union[Identity, Diagonal, Momentum, MomentumSquared, Dense]


@dataclass(frozen=True)
class KronOperator:
    """scale * (factors[0] (x) factors[1] (x) ...) on the flattened state.

    Application never materialises the full product: each non-identity factor
    acts along its own axis of the reshaped state, diagonal and momentum
    factors via elementwise multiplies and per-axis FFTs.
    """

    factors: tuple[Factor, ...]
    scale: complex = 1.0

    def __init__(self, factors: Sequence[Factor], scale: complex = 1.0):
        object.__setattr__(self, "factors", tuple(factors))
        object.__setattr__(self, "scale", complex(scale))
        if not self.factors:
            raise ValueError("KronOperator needs at least one factor")

    @property
    def dim(self) -> int:
        return int(np.prod([f.dim for f in self.factors]))

    @property
    def shape_by_factor(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    def apply(self, v: np.ndarray) -> np.ndarray:
        return kron_apply(self, v)

    def dense(self, max_dim: int = 4096) -> np.ndarray:
        """Materialise the full matrix; guarded against accidental blow-up."""
        if self.dim > max_dim:
            raise ValueError(f"dense() refused: dimension {self.dim} > {max_dim}")
        return self.scale * reduce(np.kron, [f.matrix() for f in self.factors])


def kron_apply(op: KronOperator, v: np.ndarray) -> np.ndarray:
    """Apply a Kronecker-structured operator to a flat vector."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != op.dim:
        raise ValueError(f"dimension mismatch: operator is {op.dim}, vector is {v.shape}")
    work = v.astype(complex).reshape(op.shape_by_factor)
    for axis, factor in enumerate(op.factors):
        if isinstance(factor, Identity):
            continue
        if isinstance(factor, Diagonal):
            shape = [1] * work.ndim
            shape[axis] = factor.dim
            work = work * factor.values.reshape(shape)
        elif isinstance(factor, (Momentum, MomentumSquared)):
            work = apply_momentum(work, factor.mu, axis=axis, power=factor.power)
        elif isinstance(factor, Dense):
            work = np.moveaxis(
                np.tensordot(factor.values, work, axes=([1], [axis])), 0, axis
            )
        else:
            raise TypeError(f"unknown factor type {type(factor)!r}")
    return (op.scale * work).reshape(-1)


def diag_from_function(f: Callable[..., np.ndarray], grid: Grid) -> KronOperator:
    """Diagonal operator with entries f(x_j) over the full lattice.

    ``f`` receives one coordinate array per dimension (broadcastable mesh)
    and must be finite at every node; the entries follow the C-order global
    index (first coordinate varies slowest).
    """
    mesh = grid.mesh()
    values = np.broadcast_to(np.asarray(f(*mesh)), grid.shape).reshape(-1)
    bad = np.nonzero(~np.isfinite(values))[0]
    if bad.size:
        j = unflatten_index(int(bad[0]), grid.points, grid.dims)
        coords = tuple(grid.axis()[i] for i in j)
        raise ValueError(f"non-finite value at node {j} (x = {coords})")
    return KronOperator([Diagonal(values)])


def flatten_index(multi: Sequence[int], points: int, dims: int) -> int:
    """C-order global index: multi[0] varies slowest."""
    if len(multi) != dims:
        raise ValueError("index length does not match dims")
    flat = 0
    for j in multi:
        if not 0 <= j < points:
            raise ValueError(f"index {j} out of range [0, {points})")
        flat = flat * points + j
    return flat


def unflatten_index(flat: int, points: int, dims: int) -> tuple[int, ...]:
    if not 0 <= flat < points**dims:
        raise ValueError("flat index out of range")
    out = []
    for _ in range(dims):
        out.append(flat % points)
        flat //= points
    return tuple(reversed(out))
