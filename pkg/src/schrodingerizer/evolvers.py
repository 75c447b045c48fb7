"""Time evolution engines.

Four routes are provided:

* exact diagonal phase evolution for generators that are diagonal in some
  product-Fourier frame (error-free in time);
* first-order splitting that alternates two diagonal phases, conjugating by
  the spatial transform twice per step and by the p transform twice per run;
* an explicit upwind finite-difference march for the p-transport form;
* a dense matrix-exponential oracle for cross-checks on small systems.

Per-mode block evolution (`evolve_mode_blocks`) handles the generic
ODE-derived Hamiltonians, which are block-diagonal over p frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .grids import Grid, PGrid, from_modes, to_modes

__all__ = [
    "EvolutionPlan",
    "Trajectory",
    "FDTransport",
    "CFLError",
    "evolve_exact_diagonal",
    "evolve_trotter",
    "evolve_upwind_fd",
    "dense_expm_oracle",
    "evolve_mode_blocks",
    "spectral_radius",
]

ENGINES = ("exact_diagonal", "trotter", "upwind_fd", "dense_expm")


class CFLError(ValueError):
    """Raised when a step size violates the upwind stability bound."""

    def __init__(self, dt: float, admissible: float):
        self.admissible = admissible
        super().__init__(
            f"dt = {dt:g} violates the CFL bound; admissible dt <= {admissible:g}"
        )


@dataclass(frozen=True)
class EvolutionPlan:
    """Engine choice, step size and snapshot schedule on [0, t_final]."""

    engine: str
    dt: float
    t_final: float
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        snaps = tuple(sorted(self.snapshot_times)) or (self.t_final,)
        if snaps[0] < 0 or snaps[-1] > self.t_final * (1 + 1e-12):
            raise ValueError("snapshot times must lie in [0, t_final]")
        object.__setattr__(self, "snapshot_times", snaps)
        if self.engine in ("trotter", "upwind_fd"):
            ratio = self.t_final / self.dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                raise ValueError(
                    f"t_final/dt = {ratio!r} is not an integer number of steps"
                )

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Trajectory:
    """Snapshots of the evolution in the physical (sample) frame."""

    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    x_transforms: int = 0
    p_transforms: int = 0

    def add(self, t: float, state: np.ndarray) -> None:
        self.times.append(float(t))
        self.states.append(state)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def evolve_exact_diagonal(entries: np.ndarray, w0: np.ndarray, t: float) -> np.ndarray:
    """Componentwise phases exp(i * entries * t); exact and norm-preserving."""
    entries = np.asarray(entries)
    if np.iscomplexobj(entries):
        if np.abs(entries.imag).max(initial=0.0) > 1e-12:
            raise ValueError("diagonal generator must be real (Hermitian)")
        entries = entries.real
    w0 = np.asarray(w0, dtype=complex)
    if entries.shape != w0.shape:
        raise ValueError("entries and state must have matching shapes")
    return np.exp(1j * entries * t) * w0


def _snapshot_steps(plan: EvolutionPlan) -> dict[int, float]:
    """Map step index -> requested time, snapping to the nearest step."""
    out: dict[int, float] = {}
    for t in plan.snapshot_times:
        k = int(round(t / plan.dt))
        k = min(max(k, 0), plan.n_steps)
        out.setdefault(k, t)
    return out


def evolve_trotter(
    freq_diag: np.ndarray,
    pos_diag: np.ndarray,
    grid: Grid,
    pgrid: PGrid,
    plan: EvolutionPlan,
    w0: np.ndarray,
) -> Trajectory:
    """First-order split step between two diagonal frames.

    ``freq_diag`` are the real phase rates in the fully transformed frame
    (x modes (x) p modes) and ``pos_diag`` the rates in the half frame
    (x samples (x) p modes); each step applies exp(i*freq_diag*dt), the
    spatial transform, exp(i*pos_diag*dt), and the inverse transform.  The
    p axis is transformed once on entry and once on exit.
    """
    shape = grid.shape + (pgrid.points,)
    freq = np.asarray(freq_diag, dtype=float).reshape(shape)
    pos = np.asarray(pos_diag, dtype=float).reshape(shape)
    traj = Trajectory()

    state = np.asarray(w0, dtype=complex).reshape(shape)
    state = to_modes(state, axis=-1)
    traj.p_transforms += 1
    snapshots = _snapshot_steps(plan)

    def x_forward(arr):
        for axis in range(grid.dims):
            arr = from_modes(arr, axis=axis)
        return arr

    def x_inverse(arr):
        for axis in range(grid.dims):
            arr = to_modes(arr, axis=axis)
        return arr

    if 0 in snapshots:
        traj.add(0.0, from_modes(state, axis=-1).reshape(-1))

    phase_freq = np.exp(1j * freq * plan.dt)
    phase_pos = np.exp(1j * pos * plan.dt)

    state = x_inverse(state)
    traj.x_transforms += 1
    for step in range(1, plan.n_steps + 1):
        state = phase_freq * state
        state = x_forward(state)
        traj.x_transforms += 1
        state = phase_pos * state
        if step in snapshots and step < plan.n_steps:
            traj.add(step * plan.dt, from_modes(state, axis=-1).reshape(-1))
        if step < plan.n_steps:
            state = x_inverse(state)
            traj.x_transforms += 1

    state = from_modes(state, axis=-1)
    traj.p_transforms += 1
    if plan.n_steps in snapshots:
        traj.add(plan.t_final, state.reshape(-1))
    return traj


@dataclass(frozen=True)
class FDTransport:
    """Upwind march data for d/dt w + A d/dp w = 0.

    A must have non-positive eigenvalues (waves move left, so the stencil
    looks right).  The one-step matrix is block circulant: row j updates
    w_j <- (I + A1) w_j - A1 w_{j+1 (mod N)} with A1 = (dt/dp) A; the closure
    row wraps the last node onto the first.
    """

    a_mat: np.ndarray
    pgrid: PGrid

    def __post_init__(self):
        a = np.asarray(self.a_mat)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("transport matrix must be square")
        object.__setattr__(self, "a_mat", a)
        a.setflags(write=False)
        lam = np.linalg.eigvals(a)
        if lam.real.max() > 1e-9 * max(1.0, np.abs(lam).max()):
            raise ValueError(
                "transport matrix has positive eigenvalues; upwind direction invalid"
            )

    def rho(self) -> float:
        return spectral_radius(self.a_mat)

    def admissible_dt(self) -> float:
        return self.pgrid.dp / self.rho()

    def step_matrix(self, dt: float, max_dim: int = 4096) -> np.ndarray:
        """Dense one-step matrix on the (p (x) u) ordering, for inspection."""
        n = self.a_mat.shape[0]
        npts = self.pgrid.points
        if n * npts > max_dim:
            raise ValueError("step matrix too large to materialise")
        a1 = (dt / self.pgrid.dp) * self.a_mat
        eye = np.eye(n)
        big = np.zeros((npts * n, npts * n), dtype=a1.dtype)
        for j in range(npts):
            big[j * n:(j + 1) * n, j * n:(j + 1) * n] = eye + a1
            k = (j + 1) % npts
            big[j * n:(j + 1) * n, k * n:(k + 1) * n] -= a1
        return big


def evolve_upwind_fd(fd: FDTransport, plan: EvolutionPlan, w0: np.ndarray) -> Trajectory:
    """March the upwind scheme; first order in both dt and dp."""
    rho = fd.rho()
    if plan.dt * rho > fd.pgrid.dp * (1 + 1e-12):
        raise CFLError(plan.dt, fd.pgrid.dp / rho)
    n = fd.a_mat.shape[0]
    npts = fd.pgrid.points
    state = np.asarray(w0, dtype=complex).reshape(n, npts).T.copy()  # p-major
    a1t = ((plan.dt / fd.pgrid.dp) * fd.a_mat).T
    traj = Trajectory()
    snapshots = _snapshot_steps(plan)
    if 0 in snapshots:
        traj.add(0.0, state.T.reshape(-1).copy())
    for step in range(1, plan.n_steps + 1):
        state = state + (state - np.roll(state, -1, axis=0)) @ a1t
        if step in snapshots:
            traj.add(step * plan.dt, state.T.reshape(-1).copy())
    return traj


def dense_expm_oracle(mat: np.ndarray, v: np.ndarray, t: float, max_dim: int = 4096) -> np.ndarray:
    """Reference propagation exp(mat * t) @ v for small systems.

    Hermitian and anti-Hermitian generators go through an eigendecomposition;
    everything else falls back to scaling-and-squaring Pade.
    """
    mat = np.asarray(mat)
    v = np.asarray(v, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] != v.shape[0]:
        raise ValueError("matrix/vector shapes do not match")
    if mat.shape[0] > max_dim:
        raise ValueError(f"dimension {mat.shape[0]} exceeds the oracle guard {max_dim}")
    scale = max(1.0, float(np.abs(mat).max()))
    if np.abs(mat - mat.conj().T).max() <= 1e-13 * scale:
        lam, q = np.linalg.eigh(mat)
        return q @ (np.exp(lam * t) * (q.conj().T @ v))
    if np.abs(mat + mat.conj().T).max() <= 1e-13 * scale:
        lam, q = np.linalg.eigh(-1j * mat)  # mat = i * Hermitian
        return q @ (np.exp(1j * lam * t) * (q.conj().T @ v))
    return scipy.linalg.expm(mat * t) @ v


def evolve_mode_blocks(
    h1: np.ndarray,
    h2: np.ndarray,
    pgrid: PGrid,
    w0: np.ndarray,
    times: Sequence[float],
) -> list[np.ndarray]:
    """Exact evolution of d/dt w = i(-(H1 (x) P_mu) + (H2 (x) I)) w.

    In the p-frequency frame the generator is block diagonal: frequency eta
    evolves by exp(i(-eta*H1 + H2)t).  One batched eigendecomposition serves
    every requested time.
    """
    h1 = np.asarray(h1)
    h2 = np.asarray(h2)
    n = h1.shape[0]
    npts = pgrid.points
    w = np.asarray(w0, dtype=complex).reshape(n, npts)
    wt = to_modes(w, axis=1).T  # (npts, n), one block per p frequency
    eta = pgrid.mu()
    blocks = -eta[:, None, None] * h1[None, :, :] + h2[None, :, :]
    lam, q = np.linalg.eigh(blocks)
    y = np.einsum("kji,kj->ki", q.conj(), wt)
    out = []
    for t in times:
        phased = np.exp(1j * lam * t) * y
        vt = np.einsum("kij,kj->ki", q, phased)
        out.append(from_modes(vt.T, axis=1).reshape(-1))
    return out


def spectral_radius(mat: np.ndarray, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest |eigenvalue| by power iteration on A^H A (deterministic seed)."""
    mat = np.asarray(mat)
    n = mat.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = mat.conj().T @ (mat @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        est = math.sqrt(norm)
        if abs(est - prev) <= tol * max(est, 1e-30):
            return est
        prev = est
    return prev
