"""Unitary dilation of contraction semigroups with deferred post-selection.

The propagator exp((H1 + i H2) t) is approximated by first-order products of
a contraction exp(H1 dt) and a phase exp(i H2 dt).  Each contraction K embeds
as the top-left block of the unitary

    U~ = [[K, sqrt(I - K^2)], [sqrt(I - K^2), -K]]
       = (sigma_z (x) I) exp(i sigma_y (x) arccos(K)),

well defined whenever ||K|| <= 1.  Chaining steps on a ladder of fresh
ancilla slots lets all steps run unitarily with a single post-selection at
the end; the success probability compounds to ||final_top||^2/||psi0||^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DilationStep",
    "DilationLadder",
    "build_dilation_step",
    "evolutionary_step",
    "ladder_evolve",
    "ladder_unitary",
    "postselect",
    "arccos_hermitian",
    "sqrt_psd",
]

SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def _hermitian(mat, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"{name} must be square")
    if np.abs(mat - mat.conj().T).max() > 1e-10 * max(1.0, np.abs(mat).max()):
        raise ValueError(f"{name} must be Hermitian")
    return (mat + mat.conj().T) / 2.0


def _matrix_function(h: np.ndarray, fn) -> np.ndarray:
    lam, q = np.linalg.eigh(h)
    return (q * fn(lam)) @ q.conj().T


def arccos_hermitian(h: np.ndarray) -> np.ndarray:
    """arccos of a Hermitian matrix with spectrum in [-1, 1]."""
    h = _hermitian(h, "argument")
    lam, q = np.linalg.eigh(h)
    if lam.min() < -1.0 - 1e-9 or lam.max() > 1.0 + 1e-9:
        raise ValueError("spectrum outside [-1, 1]; arccos undefined")
    return (q * np.arccos(np.clip(lam, -1.0, 1.0))) @ q.conj().T


def sqrt_psd(h: np.ndarray, clamp: float = -1e-12) -> np.ndarray:
    """Square root of a positive semi-definite Hermitian matrix.

    Rounding can push eigenvalues of I - K^2 infinitesimally negative;
    anything above ``clamp`` is flushed to zero, anything below is an error.
    """
    lam, q = np.linalg.eigh(_hermitian(h, "argument"))
    if lam.min() < clamp:
        raise ValueError(f"matrix is not PSD (min eigenvalue {lam.min():g})")
    return (q * np.sqrt(np.clip(lam, 0.0, None))) @ q.conj().T


@dataclass(frozen=True)
class DilationStep:
    """One dilated time step: contraction block, its 2n x 2n unitary, phase."""

    hdt: np.ndarray
    utilde: np.ndarray
    phase: np.ndarray
    dt: float
    variant: str = "exact_exp"
    norm_log: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.hdt.shape[0]


def build_dilation_step(h1, h2, dt: float, variant: str = "exact_exp") -> DilationStep:
    """Build the dilated step for one dt.

    ``exact_exp`` (default) dilates the actual propagator K = exp(H1 dt) and
    needs H1 negative semi-definite so that ||K|| <= 1.  ``theorem_arccos``
    dilates K = H1 dt directly and needs ||A||_1 dt <= 1; it reproduces the
    arccos(H1 dt) object used in the complexity analysis rather than the
    exact contraction, and the two are not reconciled on purpose.
    """
    h1 = _hermitian(h1, "h1")
    h2 = _hermitian(h2, "h2")
    lam1 = np.linalg.eigvalsh(h1)
    a_mat = h1 + 1j * h2
    one_norm = float(np.abs(a_mat).sum(axis=0).max())
    h1_one_norm = float(np.abs(h1).sum(axis=0).max())
    if variant == "exact_exp":
        if lam1.max() > 1e-10:
            raise ValueError(
                "H1 must be negative semi-definite for the exact-exponential "
                f"dilation (max eigenvalue {lam1.max():g})"
            )
        hdt = _matrix_function(h1, lambda x: np.exp(np.minimum(x, 0.0) * dt))
    elif variant == "theorem_arccos":
        if one_norm * dt > 1.0 + 1e-12:
            raise ValueError(
                f"||A||_1 * dt = {one_norm * dt:g} > 1; admissible dt <= {1.0 / one_norm:g}"
            )
        hdt = h1 * dt
    else:
        raise ValueError(f"unknown variant {variant!r}")
    off = sqrt_psd(np.eye(len(hdt)) - hdt @ hdt)
    utilde = np.block([[hdt, off], [off, -hdt]])
    phase = _matrix_function(h2, lambda x: np.exp(1j * x * dt))
    log = {"a_one_norm": one_norm, "h1_one_norm": h1_one_norm, "h1_max_eig": float(lam1.max())}
    return DilationStep(hdt=hdt, utilde=utilde, phase=phase, dt=dt, variant=variant, norm_log=log)


def evolutionary_step(step: DilationStep, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Apply the phase, then the dilated contraction, on [psi; 0].

    Returns the success (top) and failure (bottom) blocks; together they
    conserve the input norm.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != step.dim:
        raise ValueError("state dimension does not match the step")
    rotated = step.phase @ psi
    top = step.hdt @ rotated
    off = step.utilde[: step.dim, step.dim:]
    bottom = off @ rotated
    return top, bottom


def postselect(top: np.ndarray, bottom: np.ndarray) -> tuple[np.ndarray, float]:
    """Project on the success block and renormalise."""
    top = np.asarray(top, dtype=complex)
    bottom = np.asarray(bottom, dtype=complex)
    nt = float(np.linalg.norm(top)) ** 2
    nb = float(np.linalg.norm(bottom)) ** 2
    total = nt + nb
    if total == 0.0:
        raise ValueError("cannot post-select the zero state")
    return top / np.sqrt(nt), nt / total


@dataclass
class DilationLadder:
    """Ladder register: slot 0 is live, slots 1..n_steps hold burned failures.

    Each step's unitary touches only slot 0 and one fresh slot, so the
    reachable subspace has (n_steps + 1) * n amplitudes even though the full
    ancilla space would be exponentially larger.
    """

    n_steps: int
    dim: int
    state: np.ndarray
    success_log: list[float] = field(default_factory=list)

    @property
    def ancilla_dim(self) -> int:
        return self.n_steps

    def slot(self, j: int) -> np.ndarray:
        return self.state[j * self.dim:(j + 1) * self.dim]


def ladder_evolve(
    h1,
    h2,
    dt: float,
    n_steps: int,
    psi0: np.ndarray,
    variant: str = "exact_exp",
) -> tuple[np.ndarray, float]:
    """Run the dilation ladder and post-select once at the end.

    After step j, slot 0 holds (K exp(i H2 dt))^j psi0 with K the
    contraction block, so the final success probability equals the product
    of the per-step probabilities: ||final_top||^2 / ||psi0||^2.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    step = build_dilation_step(h1, h2, dt, variant=variant)
    ladder = ladder_state(step, n_steps, psi0)
    final_top = ladder.slot(0)
    norm0 = float(np.linalg.norm(np.asarray(psi0))) ** 2
    if norm0 == 0.0:
        raise ValueError("psi0 must be nonzero")
    prob = float(np.linalg.norm(final_top)) ** 2 / norm0
    return final_top, prob


def ladder_state(step: DilationStep, n_steps: int, psi0: np.ndarray) -> DilationLadder:
    """Full ladder run keeping every burned slot and the per-step log."""
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    n = step.dim
    state = np.zeros((n_steps + 1) * n, dtype=complex)
    state[:n] = psi0
    ladder = DilationLadder(n_steps=n_steps, dim=n, state=state)
    off = step.utilde[:n, n:]
    for j in range(1, n_steps + 1):
        live = ladder.state[:n]
        rotated = step.phase @ live
        top = step.hdt @ rotated
        bottom = off @ rotated
        ladder.state[:n] = top
        ladder.state[j * n:(j + 1) * n] = bottom
        denom = float(np.linalg.norm(rotated)) ** 2
        ladder.success_log.append(
            float(np.linalg.norm(top)) ** 2 / denom if denom > 0 else 0.0
        )
    return ladder


def ladder_unitary(step: DilationStep, j: int, n_slots: int) -> np.ndarray:
    """Dense matrix of the step-j ladder unitary on (n_slots + 1) slots.

    Acts as the evolutionary dilated step on the (0, j) slot pair and as the
    identity elsewhere; used to certify unitarity and slot locality.
    """
    if not 1 <= j <= n_slots:
        raise ValueError("slot index out of range")
    n = step.dim
    total = (n_slots + 1) * n
    u = np.eye(total, dtype=complex)
    off = step.utilde[:n, n:]
    top_phase = step.hdt @ step.phase
    off_phase = off @ step.phase
    u[0:n, 0:n] = top_phase
    u[0:n, j * n:(j + 1) * n] = off_phase
    u[j * n:(j + 1) * n, 0:n] = off_phase
    u[j * n:(j + 1) * n, j * n:(j + 1) * n] = -top_phase
    return u
