"""Qubit-phonon swap dynamics under a Lindblad master equation.

The Hilbert space is qubit (2 levels) tensor a Fock-truncated phonon mode,
ordered ``|q> (x) |n>`` so that basis index = ``q*N + n``.
All operators returned here are in angular units (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .core import RateSet, to_angular


class IntegrationError(RuntimeError):
    """The adaptive integrator failed (step-size underflow or tolerance)."""


@dataclass(frozen=True)
class HilbertSpace:
    phonon_dim: int = 3
    qubit_dim: int = field(default=2, init=False)

    def __post_init__(self):
        if self.phonon_dim < 2:
            raise ValueError("phonon Fock truncation must be >= 2")

    @property
    def dim(self) -> int:
        return self.qubit_dim * self.phonon_dim

    def qubit_lowering(self) -> np.ndarray:
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        return np.kron(sm, np.eye(self.phonon_dim))

    def phonon_lowering(self) -> np.ndarray:
        a = np.diag(np.sqrt(np.arange(1, self.phonon_dim)), k=1).astype(complex)
        return np.kron(np.eye(2), a)

    def basis(self, qubit: int, phonons: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[qubit * self.phonon_dim + phonons] = 1.0
        return v


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def build_swap_hamiltonian(g_pe: float, detuning: float, space: HilbertSpace) -> np.ndarray:
    """g(b^dag c + b c^dag) + detuning * c^dag c, converted to rad/s."""
    c = space.qubit_lowering()
    b = space.phonon_lowering()
    H = to_angular(g_pe) * (dag(b) @ c + b @ dag(c)) + to_angular(detuning) * (dag(c) @ c)
    return 0.5 * (H + dag(H))


def build_collapse_ops(kappa_q: float, kappa_m: float, space: HilbertSpace,
                       model: str = "decay-only", dephasing_fraction_q: float = 0.0,
                       dephasing_fraction_m: float = 0.0, n_th: float = 0.0) -> list[np.ndarray]:
    """Collapse operators for qubit and phonon losses.

    In ``decay-plus-dephasing`` a fraction ``f`` of each rate is moved from
    energy decay ``sqrt(2pi (1-f) kappa) a`` to pure dephasing
    ``sqrt(2pi f kappa / 2) a^dag a``.  ``n_th`` adds thermal excitation of the
    phonon bath.  Zero-rate operators are dropped.
    """
    if kappa_q < 0 or kappa_m < 0 or n_th < 0:
        raise ValueError("rates and n_th must be non-negative")
    if model == "decay-only":
        fq = fm = 0.0
    elif model == "decay-plus-dephasing":
        fq, fm = dephasing_fraction_q, dephasing_fraction_m
    else:
        raise ValueError(f"unknown collapse model {model!r}")
    c = space.qubit_lowering()
    b = space.phonon_lowering()
    ops = []
    for op, kappa, f, nth in ((c, kappa_q, fq, 0.0), (b, kappa_m, fm, n_th)):
        decay = to_angular(kappa) * (1.0 - f)
        if decay * (nth + 1) > 0:
            ops.append(math.sqrt(decay * (nth + 1)) * op)
        if decay * nth > 0:
            ops.append(math.sqrt(decay * nth) * dag(op))
        if kappa * f > 0:
            ops.append(math.sqrt(to_angular(kappa) * f / 2) * (dag(op) @ op))
    return ops


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, L: list[np.ndarray]) -> np.ndarray:
    d = rho.shape[0]
    if rho.shape != (d, d) or H.shape != (d, d) or any(op.shape != (d, d) for op in L):
        raise ValueError("dimension mismatch between rho, H and collapse operators")
    out = -1j * (H @ rho - rho @ H)
    for op in L:
        opd = dag(op)
        n = opd @ op
        out += op @ rho @ opd - 0.5 * (n @ rho + rho @ n)
    return out


def liouvillian(H: np.ndarray, L: list[np.ndarray]) -> np.ndarray:
    """Superoperator acting on row-major ``rho.ravel()``."""
    d = H.shape[0]
    eye = np.eye(d)
    # row-major vec: vec(A X B) = kron(A, B.T) vec(X)
    sup = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for op in L:
        n = dag(op) @ op
        sup += np.kron(op, op.conj()) - 0.5 * (np.kron(n, eye) + np.kron(eye, n.T))
    return sup


def evolve_superoperator(rho0: np.ndarray, H: np.ndarray, L: list[np.ndarray],
                         t_final: float) -> np.ndarray:
    """Reference propagation by the matrix exponential of the Liouvillian."""
    d = rho0.shape[0]
    return (expm(liouvillian(H, L) * t_final) @ rho0.ravel()).reshape(d, d)


def evolve(rho0: np.ndarray, H: np.ndarray, L: list[np.ndarray], t_final: float,
           tol: float = 1e-12, t_eval: np.ndarray | None = None):
    """Integrate the master equation with an adaptive Runge-Kutta pair.

    Returns the final density matrix, or ``(times, states)`` when ``t_eval``
    is given.  No trace renormalization is applied.
    """
    if t_final <= 0:
        raise ValueError("t_final must be > 0")
    d = rho0.shape[0]
    lindblad_rhs(rho0, H, L)  # dimension check
    # precompute the non-Hermitian effective Hamiltonian
    Heff = H - 0.5j * sum((dag(op) @ op for op in L), np.zeros_like(H))
    Ld = [(op, dag(op)) for op in L]

    def rhs(_t, y):
        rho = y.reshape(d, d)
        a = -1j * (Heff @ rho)
        out = a + dag(a)
        for op, opd in Ld:
            out += op @ rho @ opd
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, t_final), np.asarray(rho0, dtype=complex).ravel(),
                    method="DOP853", rtol=tol, atol=tol * 1e-2, t_eval=t_eval)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    if t_eval is None:
        return sol.y[:, -1].reshape(d, d)
    return sol.t, sol.y.T.reshape(-1, d, d)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dag(diff))))))


@dataclass
class SwapResult:
    eta_pe: float
    t_swap: float
    times: np.ndarray
    pop_qubit: np.ndarray
    pop_phonon: np.ndarray
    trace: np.ndarray
    final_state: np.ndarray | None = None

    def to_csv(self) -> str:
        rows = ["t_s,pop_qubit,pop_phonon,trace"]
        cols = [np.asarray(c, dtype=float).tolist()
                for c in (self.times, self.pop_qubit, self.pop_phonon, self.trace)]
        rows += [",".join(map(repr, r)) for r in zip(*cols)]
        return "\n".join(rows) + "\n"


def swap_time(g_pe: float) -> float:
    """t = pi / (2 g) with g in rad/s."""
    return math.pi / (2.0 * to_angular(g_pe))


def swap_efficiency(rates: RateSet, model: str = "decay-only",
                    space: HilbertSpace | None = None, *, detuning: float = 0.0,
                    dephasing_fraction_q: float = 0.0, dephasing_fraction_m: float = 0.0,
                    n_th: float = 0.0, samples: int = 201, tol: float = 1e-12) -> SwapResult:
    if rates.g_pe <= 0:
        raise ValueError("g_pe must be > 0")
    space = space or HilbertSpace()
    H = build_swap_hamiltonian(rates.g_pe, detuning, space)
    L = build_collapse_ops(rates.kappa_q, rates.kappa_m, space, model,
                           dephasing_fraction_q, dephasing_fraction_m, n_th)
    psi = space.basis(1, 0)
    rho0 = np.outer(psi, psi.conj())
    t_swap = swap_time(rates.g_pe)
    t = t_swap * np.arange(samples) / (samples - 1)
    t[-1] = t_swap
    times, states = evolve(rho0, H, L, t_swap, tol=tol, t_eval=t)
    nq = np.real(np.diagonal(dag(space.qubit_lowering()) @ space.qubit_lowering()))
    nm = np.real(np.diagonal(dag(space.phonon_lowering()) @ space.phonon_lowering()))
    diag = np.real(np.diagonal(states, axis1=1, axis2=2))
    pop_q = diag @ nq
    pop_m = diag @ nm
    trace = diag.sum(axis=1)
    eta = float(min(max(pop_m[-1], 0.0), 1.0))
    return SwapResult(eta, t_swap, times, pop_q, pop_m, trace, states[-1])
