"""Builders that assemble specific PDEs into Hamiltonian form.

Each builder produces the Hermitian generator on the extended
(register (x) p) space, the warped initial state, and the recovery map:

* heat with a potential/source term V(x) u;
* linear convection (both the sin(p) warp and the already-Hermitian direct
  discretisation);
* Black-Scholes in log-price, where drift and diffusion commute;
* Fokker-Planck in conservation form (similarity-sandwiched products) and in
  imaginary-time heat form;
* the linear Boltzmann equation with isotropic scattering, discretised by
  ordinates, with the square-root-weight similarity that symmetrises the
  collision block;
* the density-transport lift of a nonlinear ODE flow, read off by moments.

A kinetic equation whose drift couples two registers (forcing terms like
grad V . grad_xi f) does not warp directly: discretise all transport
variables first and feed the resulting matrix through the generic linear
ODE path in :mod:`schrodingerizer.ode`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Optional, Sequence

import numpy as np

from .grids import (
    Dense,
    Diagonal,
    Grid,
    Identity,
    KronOperator,
    Momentum,
    MomentumSquared,
    PGrid,
    from_modes,
    momentum_operator,
    to_modes,
)
from .warp import IntegrateP, RecoveryMethod, WarpedState, extend_initial, recover
from .ode import LinearSystem, SchrodingerisedSystem, assemble_schrodingerised, hermitian_split
from .evolvers import (
    EvolutionPlan,
    FDTransport,
    Trajectory,
    dense_expm_oracle,
    evolve_mode_blocks,
    evolve_trotter,
    evolve_upwind_fd,
)

__all__ = [
    "HeatModel",
    "ConvectionModel",
    "BlackScholesModel",
    "FokkerPlanckModel",
    "BoltzmannModel",
    "LiouvilleModel",
    "QuadratureRule",
    "build_heat",
    "build_convection",
    "build_black_scholes",
    "build_fokker_planck",
    "build_boltzmann",
    "build_liouville",
    "default_ordinates",
    "exact_heat_solution",
    "exact_convection_solution",
]


# ---------------------------------------------------------------------------
# Shared helpers.
# ---------------------------------------------------------------------------


def _sample(f: Optional[Callable], grid: Grid) -> np.ndarray:
    """Sample a scalar function on the lattice (C order), zeros if None."""
    if f is None:
        return np.zeros(grid.size)
    mesh = grid.mesh()
    vals = np.broadcast_to(np.asarray(f(*mesh)), grid.shape).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise ValueError("function takes a non-finite value on the grid")
    return np.asarray(vals, dtype=float)


def _sum_mu_powers(grid: Grid, power: int) -> np.ndarray:
    """sum_l mu_l^power broadcast over the x lattice shape."""
    mu = grid.mu()
    out = np.zeros(grid.shape)
    for axis in range(grid.dims):
        shape = [1] * grid.dims
        shape[axis] = grid.points
        out = out + (mu**power).reshape(shape)
    return out


def _diag_evolve_full(
    entries: np.ndarray,
    grid: Grid,
    pgrid: PGrid,
    w0: np.ndarray,
    times: Sequence[float],
) -> list[np.ndarray]:
    """Exact evolution when the generator is diagonal in all mode frames."""
    shape = grid.shape + (pgrid.points,)
    entries = np.asarray(entries, dtype=float).reshape(shape)
    coeffs = np.asarray(w0, dtype=complex).reshape(shape)
    for axis in range(grid.dims + 1):
        coeffs = to_modes(coeffs, axis=axis)
    out = []
    for t in times:
        c_t = np.exp(1j * entries * t) * coeffs
        for axis in range(grid.dims + 1):
            c_t = from_modes(c_t, axis=axis)
        out.append(c_t.reshape(-1))
    return out


def _x_momentum_factors(grid: Grid, axis: int, power: int) -> list:
    """Identity factors with a momentum factor on one x axis."""
    mu = grid.mu()
    factors: list = []
    for i in range(grid.dims):
        if i == axis:
            factors.append(Momentum(mu) if power == 1 else MomentumSquared(mu))
        else:
            factors.append(Identity(grid.points))
    return factors


def _dense_momentum(grid: Grid, axis: int) -> np.ndarray:
    """Dense P_l over the flattened x lattice (small grids only)."""
    ops = momentum_operator(grid)
    mats = [ops.pmu if i == axis else np.eye(grid.points) for i in range(grid.dims)]
    return reduce(np.kron, mats)


def _snapshot_list(plan: EvolutionPlan) -> list[float]:
    return list(plan.snapshot_times)


def _trajectory_from_states(times, states) -> Trajectory:
    traj = Trajectory()
    for t, s in zip(times, states):
        traj.add(t, s)
    return traj


# ---------------------------------------------------------------------------
# Heat equation with a potential term.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatModel:
    """d/dt u = Laplacian(u) + V(x) u, warped to Hermitian transport in p.

    The generator splits into a part diagonal in the x-frequency frame
    (the Laplacian symbol times the p mode) and a part diagonal in the
    position frame (the potential times the p mode), which is exactly the
    two-phase split the first-order product formula alternates.
    """

    grid: Grid
    pgrid: PGrid
    v_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v_values, dtype=float).reshape(-1)
        if v.size != self.grid.size:
            raise ValueError("potential sample count does not match the grid")
        object.__setattr__(self, "v_values", v)
        v.setflags(write=False)

    # generator pieces -----------------------------------------------------

    def freq_entries(self) -> np.ndarray:
        """Phase rates in the (x modes (x) p modes) frame: (sum mu^2) * eta."""
        eta = self.pgrid.mu()
        return (_sum_mu_powers(self.grid, 2)[..., None] * eta).reshape(-1)

    def pos_entries(self) -> np.ndarray:
        """Phase rates in the (x samples (x) p modes) frame: -V(x) * eta."""
        eta = self.pgrid.mu()
        v = self.v_values.reshape(self.grid.shape)
        return (-v[..., None] * eta).reshape(-1)

    def mode_entries(self) -> np.ndarray:
        """Full diagonal; only valid for a constant potential."""
        if np.ptp(self.v_values) > 0:
            raise ValueError("generator is fully diagonal only for constant V")
        c = float(self.v_values[0])
        eta = self.pgrid.mu()
        return ((_sum_mu_powers(self.grid, 2) - c)[..., None] * eta).reshape(-1)

    def h_terms(self) -> list[KronOperator]:
        """Hermitian generator (d/dt w = i H w) in the sample frame."""
        p_mu = self.pgrid.mu()
        terms = [
            KronOperator(_x_momentum_factors(self.grid, axis, 2) + [Momentum(p_mu)])
            for axis in range(self.grid.dims)
        ]
        terms.append(
            KronOperator([Diagonal(self.v_values), Momentum(p_mu)], scale=-1.0)
        )
        return terms

    def hdiag_terms(self) -> list[KronOperator]:
        p_eta = self.pgrid.mu()
        terms = [
            KronOperator(_x_momentum_factors(self.grid, axis, 2) + [Diagonal(p_eta)])
            for axis in range(self.grid.dims)
        ]
        terms.append(KronOperator([Diagonal(self.v_values), Diagonal(p_eta)], scale=-1.0))
        return terms

    def x_operator(self) -> np.ndarray:
        """Dense spatial generator Laplacian + V (Hermitian), small grids."""
        lap = sum(
            _dense_momentum(self.grid, axis) @ _dense_momentum(self.grid, axis)
            for axis in range(self.grid.dims)
        )
        return -lap + np.diag(self.v_values)

    def fd_transport(self) -> FDTransport:
        """Central-difference transport matrix for the upwind p march (1-D)."""
        if self.grid.dims != 1:
            raise ValueError("the finite-difference path is implemented in one dimension")
        m = self.grid.points
        dx = self.grid.dx
        lap = np.zeros((m, m))
        idx = np.arange(m)
        lap[idx, idx] = -2.0
        lap[idx, (idx + 1) % m] = 1.0
        lap[idx, (idx - 1) % m] = 1.0
        return FDTransport(a_mat=lap / dx**2 + np.diag(self.v_values), pgrid=self.pgrid)

    # evolution ------------------------------------------------------------

    def initial_state(self, u0: np.ndarray) -> WarpedState:
        return extend_initial(u0, self.pgrid, grid=self.grid)

    def evolve(self, w0: WarpedState, plan: EvolutionPlan) -> Trajectory:
        snaps = _snapshot_list(plan)
        if plan.engine == "exact_diagonal":
            states = _diag_evolve_full(
                self.mode_entries(), self.grid, self.pgrid, w0.values, snaps
            )
            return _trajectory_from_states(snaps, states)
        if plan.engine == "trotter":
            return evolve_trotter(
                self.freq_entries(), self.pos_entries(), self.grid, self.pgrid, plan, w0.values
            )
        if plan.engine == "upwind_fd":
            return evolve_upwind_fd(self.fd_transport(), plan, w0.values)
        if plan.engine == "dense_expm":
            h = sum(term.dense() for term in self.h_terms())
            traj = Trajectory()
            for t in snaps:
                traj.add(t, dense_expm_oracle(1j * h, w0.values, t))
            return traj
        raise ValueError(f"engine {plan.engine!r} not supported by the heat model")

    def recover(self, w: WarpedState, method: RecoveryMethod = IntegrateP()) -> np.ndarray:
        return recover(w, method)

    def wrap(self, values: np.ndarray, t: float) -> WarpedState:
        return WarpedState(values=values, pgrid=self.pgrid, t=t, grid=self.grid)


def build_heat(v: Optional[Callable], grid: Grid, pgrid: PGrid) -> HeatModel:
    return HeatModel(grid=grid, pgrid=pgrid, v_values=_sample(v, grid))


def exact_heat_solution(u0: np.ndarray, grid: Grid, t: float, v_const: float = 0.0) -> np.ndarray:
    """Spectrally exact solution of the constant-V heat problem."""
    coeffs = np.asarray(u0, dtype=complex).reshape(grid.shape)
    for axis in range(grid.dims):
        coeffs = to_modes(coeffs, axis=axis)
    coeffs = coeffs * np.exp((v_const - _sum_mu_powers(grid, 2)) * t)
    for axis in range(grid.dims):
        coeffs = from_modes(coeffs, axis=axis)
    return coeffs.reshape(-1)


# ---------------------------------------------------------------------------
# Linear convection.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvectionModel:
    """d/dt u + sum_l d/dx_l u = 0 with unit speed along every axis.

    Two routes: the sin(p) warp on a fixed [-pi, pi] auxiliary axis gives a
    Schrodinger-type generator -(sum_l mu_l) * eta^2, and the direct
    spectral discretisation is already Hermitian with diagonal -(sum mu_l).
    Since w = sin(p) u separates, recovery projects onto sin(p).
    """

    grid: Grid
    p_points: int = 64

    @property
    def pgrid(self) -> PGrid:
        return PGrid(left=-np.pi, right=np.pi, points=self.p_points, alpha_neg=1.0)

    def sin_profile(self) -> np.ndarray:
        return np.sin(self.pgrid.axis())

    def initial_state(self, u0: np.ndarray) -> WarpedState:
        u0 = np.asarray(u0, dtype=complex).reshape(-1)
        values = np.outer(u0, self.sin_profile()).reshape(-1)
        return WarpedState(values=values, pgrid=self.pgrid, t=0.0, grid=self.grid)

    def sin_entries(self) -> np.ndarray:
        """Diagonal of the warped generator: -(sum_l mu_l) * eta^2."""
        eta = self.pgrid.mu()
        return (-_sum_mu_powers(self.grid, 1)[..., None] * eta**2).reshape(-1)

    def direct_entries(self) -> np.ndarray:
        """Diagonal of the already-Hermitian direct generator: -(sum_l mu_l)."""
        return (-_sum_mu_powers(self.grid, 1)).reshape(-1)

    def h_terms(self) -> list[KronOperator]:
        p_mu = self.pgrid.mu()
        return [
            KronOperator(
                _x_momentum_factors(self.grid, axis, 1) + [MomentumSquared(p_mu)],
                scale=-1.0,
            )
            for axis in range(self.grid.dims)
        ]

    def evolve(self, w0: WarpedState, plan: EvolutionPlan) -> Trajectory:
        if plan.engine != "exact_diagonal":
            raise ValueError("convection supports the exact_diagonal engine")
        snaps = _snapshot_list(plan)
        states = _diag_evolve_full(self.sin_entries(), self.grid, self.pgrid, w0.values, snaps)
        return _trajectory_from_states(snaps, states)

    def evolve_direct(self, u0: np.ndarray, t: float) -> np.ndarray:
        coeffs = np.asarray(u0, dtype=complex).reshape(self.grid.shape)
        for axis in range(self.grid.dims):
            coeffs = to_modes(coeffs, axis=axis)
        coeffs = coeffs * np.exp(-1j * _sum_mu_powers(self.grid, 1) * t)
        for axis in range(self.grid.dims):
            coeffs = from_modes(coeffs, axis=axis)
        return coeffs.reshape(-1)

    def recover(self, w: WarpedState, method: RecoveryMethod | None = None) -> np.ndarray:
        """Project onto the sin(p) profile (w = sin(p) u is separable)."""
        s = self.sin_profile()
        return (w.matrix @ s) / float(s @ s)


def build_convection(grid: Grid, p_points: int = 64) -> ConvectionModel:
    return ConvectionModel(grid=grid, p_points=p_points)


def exact_convection_solution(u0: np.ndarray, grid: Grid, t: float) -> np.ndarray:
    """Translate the initial profile by t along every axis (spectral shift)."""
    coeffs = np.asarray(u0, dtype=complex).reshape(grid.shape)
    for axis in range(grid.dims):
        coeffs = to_modes(coeffs, axis=axis)
    coeffs = coeffs * np.exp(-1j * _sum_mu_powers(grid, 1) * t)
    for axis in range(grid.dims):
        coeffs = from_modes(coeffs, axis=axis)
    return coeffs.reshape(-1)


# ---------------------------------------------------------------------------
# Black-Scholes in log price, forward time.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlackScholesModel:
    """d/dtau V = (r - sigma^2/2) dV/dx + (sigma^2/2) d2V/dx2 - r V.

    Everything is diagonal in the x-frequency frame: the Hermitian split has
    contraction rates -(sigma^2/2 mu^2 + r) and phase rates
    (r - sigma^2/2) mu, which commute, so a single dilation over the whole
    horizon matches the stepped evolution exactly.
    """

    r: float
    sigma: float
    grid: Grid
    pgrid: PGrid

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.grid.dims != 1:
            raise ValueError("the log-price model is one-dimensional")

    @property
    def commuting(self) -> bool:
        return True

    def contraction_rates(self) -> np.ndarray:
        """Diagonal of the dissipative Hermitian part over x modes."""
        mu = self.grid.mu()
        return -(0.5 * self.sigma**2 * mu**2 + self.r)

    def phase_rates(self) -> np.ndarray:
        """Diagonal of the oscillatory Hermitian part over x modes."""
        mu = self.grid.mu()
        return (self.r - 0.5 * self.sigma**2) * mu

    def mode_entries(self) -> np.ndarray:
        """Diagonal over (x mode, p mode): -h1(mu)*eta + h2(mu)."""
        eta = self.pgrid.mu()
        return (-self.contraction_rates()[:, None] * eta + self.phase_rates()[:, None]).reshape(-1)

    def split(self):
        ops = momentum_operator(self.grid)
        a = (
            1j * (self.r - 0.5 * self.sigma**2) * ops.pmu
            - 0.5 * self.sigma**2 * (ops.pmu @ ops.pmu)
            - self.r * np.eye(self.grid.points)
        )
        return hermitian_split(a)

    def system(self, u0: np.ndarray) -> SchrodingerisedSystem:
        return assemble_schrodingerised(self.split(), self.pgrid, u0)

    def h_terms(self) -> list[KronOperator]:
        split = self.split()
        p_mu = self.pgrid.mu()
        return [
            KronOperator([Dense(split.h1), Momentum(p_mu)], scale=-1.0),
            KronOperator([Dense(split.h2), Identity(self.pgrid.points)]),
        ]

    def initial_state(self, u0: np.ndarray) -> WarpedState:
        return extend_initial(u0, self.pgrid, grid=self.grid)

    def evolve(self, w0: WarpedState, plan: EvolutionPlan) -> Trajectory:
        if plan.engine != "exact_diagonal":
            raise ValueError("Black-Scholes supports the exact_diagonal engine")
        snaps = _snapshot_list(plan)
        states = _diag_evolve_full(self.mode_entries(), self.grid, self.pgrid, w0.values, snaps)
        return _trajectory_from_states(snaps, states)

    def recover(self, w: WarpedState, method: RecoveryMethod = IntegrateP()) -> np.ndarray:
        return recover(w, method)

    def wrap(self, values: np.ndarray, t: float) -> WarpedState:
        return WarpedState(values=values, pgrid=self.pgrid, t=t, grid=self.grid)

    def exact_solution(self, u0: np.ndarray, t: float) -> np.ndarray:
        """Per-mode decay and drift: exp((h1 + i h2) t) in the mode frame."""
        coeffs = to_modes(np.asarray(u0, dtype=complex))
        coeffs = coeffs * np.exp((self.contraction_rates() + 1j * self.phase_rates()) * t)
        return from_modes(coeffs)


def build_black_scholes(r: float, sigma: float, grid: Grid, pgrid: PGrid) -> BlackScholesModel:
    return BlackScholesModel(r=r, sigma=sigma, grid=grid, pgrid=pgrid)


# ---------------------------------------------------------------------------
# Fokker-Planck.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FokkerPlanckModel:
    """d/dt f = div(grad(V) f) + sigma Laplacian(f), two equivalent routes.

    Both routes evolve psi = exp(V/(2 sigma)) f, whose generator is
    Hermitian and dissipative.  ``conservation`` sandwiches the momentum
    operators between exp(+-V/...) diagonals; ``heat_form`` uses the
    imaginary-time potential U = |grad V|^2/(4 sigma) - Laplacian(V)/2.
    The steady state is exp(-V/sigma).
    """

    grid: Grid
    pgrid: PGrid
    sigma: float
    v_values: np.ndarray
    form: str
    x_op: np.ndarray  # Hermitian PSD-ish generator of -d/dt on the psi register
    u_values: Optional[np.ndarray] = None

    @property
    def weight(self) -> np.ndarray:
        return np.exp(self.v_values / (2.0 * self.sigma))

    def to_psi(self, f: np.ndarray) -> np.ndarray:
        return self.weight * np.asarray(f, dtype=complex).reshape(-1)

    def from_psi(self, psi: np.ndarray) -> np.ndarray:
        return np.asarray(psi, dtype=complex).reshape(-1) / self.weight

    def steady_state(self) -> np.ndarray:
        return np.exp(-self.v_values / self.sigma)

    def conservation_generator(self) -> np.ndarray:
        """Dense generator acting on f itself (not the psi frame)."""
        e_minus = np.exp(-self.v_values / self.sigma)
        e_plus = np.exp(self.v_values / self.sigma)
        gen = np.zeros((self.grid.size, self.grid.size), dtype=complex)
        for axis in range(self.grid.dims):
            p = _dense_momentum(self.grid, axis)
            gen -= self.sigma * (p @ (e_minus[:, None] * p) @ np.diag(e_plus))
        return gen

    def h_terms(self) -> list[KronOperator]:
        """Hermitian generator on the (psi (x) p) space: x_op (x) P_mu."""
        return [KronOperator([Dense(self.x_op), Momentum(self.pgrid.mu())])]

    def split(self):
        return hermitian_split(-self.x_op)

    def initial_state(self, f0: np.ndarray) -> WarpedState:
        return extend_initial(self.to_psi(f0), self.pgrid, grid=self.grid)

    def evolve(self, w0: WarpedState, plan: EvolutionPlan) -> Trajectory:
        if plan.engine not in ("exact_diagonal", "dense_expm"):
            raise ValueError("Fokker-Planck supports exact_diagonal and dense_expm")
        snaps = _snapshot_list(plan)
        if plan.engine == "dense_expm":
            h = sum(term.dense() for term in self.h_terms())
            states = [dense_expm_oracle(1j * h, w0.values, t) for t in snaps]
        else:
            states = evolve_mode_blocks(
                -self.x_op, np.zeros_like(self.x_op), self.pgrid, w0.values, snaps
            )
        return _trajectory_from_states(snaps, states)

    def recover(self, w: WarpedState, method: RecoveryMethod = IntegrateP()) -> np.ndarray:
        """Recover psi from the warped state, then undo the change of variables."""
        return self.from_psi(recover(w, method))

    def wrap(self, values: np.ndarray, t: float) -> WarpedState:
        return WarpedState(values=values, pgrid=self.pgrid, t=t, grid=self.grid)


def build_fokker_planck(
    v: Callable,
    sigma: float,
    grid: Grid,
    pgrid: PGrid,
    form: str = "conservation",
    grad_v: Optional[Sequence[Callable]] = None,
    lap_v: Optional[Callable] = None,
) -> FokkerPlanckModel:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    v_values = _sample(v, grid)
    with np.errstate(over="ignore"):
        for sign in (+1.0, -1.0):
            if not np.all(np.isfinite(np.exp(sign * v_values / sigma))):
                raise ValueError("exp(V/sigma) overflows on this grid; rescale V or sigma")
    u_values = None
    if form == "conservation":
        e_half = np.exp(v_values / (2.0 * sigma))
        e_minus = np.exp(-v_values / sigma)
        x_op = np.zeros((grid.size, grid.size), dtype=complex)
        for axis in range(grid.dims):
            p = _dense_momentum(grid, axis)
            sandwich = p @ (e_minus[:, None] * p)
            x_op += sigma * (e_half[:, None] * sandwich * e_half[None, :])
    elif form == "heat_form":
        if grad_v is not None and lap_v is not None:
            grad_sq = sum(_sample(g, grid) ** 2 for g in grad_v)
            lap = _sample(lap_v, grid)
        else:
            warnings.warn(
                "no analytic gradient supplied; differentiating V spectrally",
                UserWarning,
                stacklevel=2,
            )
            vg = v_values.reshape(grid.shape).astype(complex)
            mu = grid.mu()
            grad_sq = np.zeros(grid.shape)
            lap = np.zeros(grid.shape)
            for axis in range(grid.dims):
                shape = [1] * grid.dims
                shape[axis] = grid.points
                coeffs = to_modes(vg, axis=axis)
                dv = from_modes(1j * mu.reshape(shape) * coeffs, axis=axis).real
                d2v = from_modes(-(mu**2).reshape(shape) * coeffs, axis=axis).real
                grad_sq = grad_sq + dv**2
                lap = lap + d2v
            grad_sq = grad_sq.reshape(-1)
            lap = lap.reshape(-1)
        u_values = grad_sq / (4.0 * sigma) - lap / 2.0
        x_op = np.diag(u_values).astype(complex)
        for axis in range(grid.dims):
            p = _dense_momentum(grid, axis)
            x_op += sigma * (p @ p)
    else:
        raise ValueError(f"unknown Fokker-Planck form {form!r}")
    x_op = (x_op + x_op.conj().T) / 2.0
    return FokkerPlanckModel(
        grid=grid,
        pgrid=pgrid,
        sigma=sigma,
        v_values=v_values,
        form=form,
        x_op=x_op,
        u_values=u_values,
    )


# ---------------------------------------------------------------------------
# Linear Boltzmann with isotropic scattering.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Ordinate directions and weights.

    Weights sum to one so the isotropic average becomes a plain weighted sum.
    """

    points: np.ndarray  # (n_ord, d) unit vectors
    weights: np.ndarray  # (n_ord,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        wts = np.asarray(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] != wts.size or pts.shape[0] < 1:
            raise ValueError("points and weights must pair up")
        if np.any(wts <= 0):
            raise ValueError("weights must be positive")
        if abs(wts.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {wts.sum()!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        pts.setflags(write=False)
        wts.setflags(write=False)

    @property
    def n_ord(self) -> int:
        return self.points.shape[0]


def default_ordinates() -> QuadratureRule:
    """Two-point rule on the 1-D velocity sphere: xi = +-1, weights 1/2."""
    return QuadratureRule(points=np.array([[1.0], [-1.0]]), weights=np.array([0.5, 0.5]))


@dataclass(frozen=True)
class BoltzmannModel:
    """Transport + isotropic relaxation on an (ordinate, x, p) register.

    States are stored in the physical frame; evolution conjugates by the
    square-root-weight similarity (which symmetrises the collision block)
    and by the p transform, then alternates an exact transport phase,
    diagonal over x frequencies, with an exact collision rotation that is a
    rank-one update per p frequency.  Both substeps annihilate the weighted
    mass functional exactly, so total mass is conserved to rounding.
    """

    quad: QuadratureRule
    grid: Grid
    pgrid: PGrid

    def __post_init__(self):
        if self.quad.points.shape[1] != self.grid.dims:
            raise ValueError("ordinate dimension does not match the grid")

    def collision_matrix(self) -> np.ndarray:
        """Lambda_w^{1/2} Xi Lambda_w^{1/2} - I (symmetric, NSD)."""
        root = np.sqrt(self.quad.weights)
        return np.outer(root, root) - np.eye(self.quad.n_ord)

    def transport_entries(self) -> np.ndarray:
        """Phase rates over (ordinate, x modes): -(sum_l xi_l mu_l)."""
        mu = self.grid.mu()
        out = np.zeros((self.quad.n_ord,) + self.grid.shape)
        for axis in range(self.grid.dims):
            shape = [1] * (self.grid.dims + 1)
            shape[axis + 1] = self.grid.points
            out = out - self.quad.points[:, axis].reshape((-1,) + (1,) * self.grid.dims) * mu.reshape(shape)
        return out

    def h_terms(self) -> list[KronOperator]:
        """Hermitian generator (d/dt = i H) in the weighted, p-sample frame."""
        p_mu = self.pgrid.mu()
        terms = [
            KronOperator(
                [Diagonal(self.quad.points[:, axis])]
                + _x_momentum_factors(self.grid, axis, 1)
                + [Identity(self.pgrid.points)],
                scale=-1.0,
            )
            for axis in range(self.grid.dims)
        ]
        terms.append(
            KronOperator(
                [Dense(self.collision_matrix()), Identity(self.grid.size), Momentum(p_mu)],
                scale=-1.0,
            )
        )
        return terms

    def initial_state(self, f0: np.ndarray) -> WarpedState:
        """f0 has shape (n_ord, grid.size) or broadcastable to it."""
        f0 = np.asarray(f0, dtype=complex)
        if f0.ndim == 1:
            f0 = np.broadcast_to(f0, (self.quad.n_ord, self.grid.size))
        if f0.shape != (self.quad.n_ord, self.grid.size):
            raise ValueError("initial data must have shape (n_ord, grid.size)")
        values = (f0.reshape(-1)[:, None] * self.pgrid.warp_profile()[None, :]).reshape(-1)
        return WarpedState(values=values, pgrid=self.pgrid, t=0.0, grid=None)

    def evolve(self, w0: WarpedState, plan: EvolutionPlan) -> Trajectory:
        if plan.engine != "trotter":
            raise ValueError("Boltzmann supports the trotter engine")
        n_ord = self.quad.n_ord
        shape = (n_ord,) + self.grid.shape + (self.pgrid.points,)
        state = np.asarray(w0.values, dtype=complex).reshape(shape)
        root = np.sqrt(self.quad.weights).reshape((-1,) + (1,) * (self.grid.dims + 1))
        state = state * root
        state = to_modes(state, axis=-1)

        eta = self.pgrid.mu()
        lam_c, q_c = np.linalg.eigh(self.collision_matrix())
        transport = self.transport_entries()[..., None]  # broadcast over p modes
        phase_transport = np.exp(1j * transport * plan.dt)
        # collision phases: exp(-i * eta * lam * dt) per (ordinate-eigenmode, p mode)
        phase_collision = np.exp(-1j * np.outer(lam_c, eta) * plan.dt)
        phase_collision = phase_collision.reshape((n_ord,) + (1,) * self.grid.dims + (self.pgrid.points,))

        traj = Trajectory()
        snapshots = {}
        for t in plan.snapshot_times:
            snapshots.setdefault(min(max(int(round(t / plan.dt)), 0), plan.n_steps), t)

        def emit(step):
            phys = from_modes(state, axis=-1) / root
            traj.add(step * plan.dt, phys.reshape(-1))

        if 0 in snapshots:
            emit(0)
        for step in range(1, plan.n_steps + 1):
            for axis in range(self.grid.dims):
                state = to_modes(state, axis=axis + 1)
            state = phase_transport * state
            for axis in range(self.grid.dims):
                state = from_modes(state, axis=axis + 1)
            state = np.tensordot(q_c.conj().T, state, axes=([1], [0]))
            state = phase_collision * state
            state = np.tensordot(q_c, state, axes=([1], [0]))
            if step in snapshots:
                emit(step)
        return traj

    def recover(self, w: WarpedState, method: RecoveryMethod = IntegrateP()) -> np.ndarray:
        """Per-ordinate distribution, shape (n_ord, grid.size)."""
        return recover(w, method).reshape(self.quad.n_ord, self.grid.size)

    def mass(self, f: np.ndarray) -> float:
        """Weighted total mass sum_k w_k sum_j f_k(x_j)."""
        f = np.asarray(f).reshape(self.quad.n_ord, self.grid.size)
        return float(np.real(self.quad.weights @ f.sum(axis=1)))

    def wrap(self, values: np.ndarray, t: float) -> WarpedState:
        return WarpedState(values=values, pgrid=self.pgrid, t=t, grid=None)


def build_boltzmann(quad: QuadratureRule, grid: Grid, pgrid: PGrid) -> BoltzmannModel:
    return BoltzmannModel(quad=quad, grid=grid, pgrid=pgrid)


# ---------------------------------------------------------------------------
# Density-transport lift of a nonlinear flow.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LiouvilleModel:
    """Lift dq/dt = F(q) to linear density transport and read q by moments.

    The transported density rho(t, .) = delta(. - q(t)) is smoothed to a
    periodised Gaussian of width ``width`` (unit discrete mass); the lifted
    generator A = -i sum_i P_i diag(F_i) is generally non-normal and feeds
    the generic ODE path.  The first moment of the recovered density tracks
    the trajectory, and the moment ratio is insensitive to the overall
    amplitude drift the warp recovery introduces for non-dissipative flows.
    """

    grid: Grid
    q0: np.ndarray
    width: float
    field_values: tuple[np.ndarray, ...]
    system: LinearSystem

    def moment(self, rho: np.ndarray) -> np.ndarray:
        """First moment sum x rho dx^d / sum rho dx^d, one entry per axis."""
        rho = np.asarray(rho).reshape(self.grid.shape)
        cell = self.grid.dx**self.grid.dims
        total = rho.sum() * cell
        if abs(total) < 1e-300:
            raise ValueError("density has zero mass")
        out = []
        ax = self.grid.axis()
        for axis in range(self.grid.dims):
            shape = [1] * self.grid.dims
            shape[axis] = self.grid.points
            out.append((rho * ax.reshape(shape)).sum() * cell / total)
        return np.real(np.array(out))

    def mass(self, rho: np.ndarray) -> float:
        return float(np.real(np.sum(rho)) * self.grid.dx**self.grid.dims)

    def schrodingerised(self, pgrid: PGrid) -> SchrodingerisedSystem:
        return assemble_schrodingerised(
            hermitian_split(self.system.a_mat), pgrid, self.system.u0
        )


def _periodised_gaussian(grid: Grid, q0: np.ndarray, width: float) -> np.ndarray:
    span = grid.b - grid.a
    mesh = grid.mesh()
    out = np.ones(grid.shape)
    for axis in range(grid.dims):
        x = mesh[axis]
        acc = np.zeros_like(x)
        for k in range(-3, 4):
            acc = acc + np.exp(-((x - q0[axis] + k * span) ** 2) / (2.0 * width**2))
        out = out * acc
    flat = np.broadcast_to(out, grid.shape).reshape(-1)
    return flat / (flat.sum() * grid.dx**grid.dims)


def build_liouville(
    field: Callable | Sequence[Callable],
    grid: Grid,
    q0,
    width: float,
) -> LiouvilleModel:
    if width <= 0:
        raise ValueError("width must be positive")
    q0 = np.atleast_1d(np.asarray(q0, dtype=float))
    if q0.size != grid.dims:
        raise ValueError("q0 length must match the grid dimension")
    margin = 3.0 * width
    if np.any(q0 < grid.a + margin) or np.any(q0 > grid.b - margin):
        raise ValueError("q0 is within 3*width of the boundary; support would wrap")
    components = field if isinstance(field, (list, tuple)) else [field]
    if len(components) != grid.dims:
        raise ValueError("need one field component per dimension")
    field_values = tuple(_sample(f, grid) for f in components)
    a_mat = np.zeros((grid.size, grid.size), dtype=complex)
    for axis in range(grid.dims):
        p = _dense_momentum(grid, axis)
        a_mat += -1j * (p * field_values[axis][None, :])
    u0 = _periodised_gaussian(grid, q0, width)
    system = LinearSystem(a_mat=a_mat, b=None, u0=u0)
    return LiouvilleModel(
        grid=grid, q0=q0, width=width, field_values=field_values, system=system
    )
