"""Reduced coupled-mode model of piezo / optomechanical mode hybridization.

A piezoacoustic mode and several OMC modes are coupled through a static
symmetric matrix ``J`` (Hz).  Diagonalizing ``diag(freq) + J`` gives the
hybrid supermodes, whose couplings and piezo participation follow from
the eigenvector weights.  Also holds the closed-form loss estimates used
when budgeting qubit and mechanical decoherence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BareMode:
    freq: float
    g_pe0: float = 0.0
    g_om0: float = 0.0
    piezo_weight: float = 0.0
    kappa_rad0: float = 0.0

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("mode frequency must be > 0")
        if not 0.0 <= self.piezo_weight <= 1.0:
            raise ValueError("piezo_weight must lie in [0, 1]")


@dataclass(frozen=True)
class CoupledModeSystem:
    modes: tuple[BareMode, ...]
    J: np.ndarray
    kappa_ln: float = 300e3
    kappa_si: float = 4e3

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        n = len(self.modes)
        if J.shape != (n, n):
            raise ValueError(f"coupling matrix shape {J.shape} does not match {n} modes")
        scale = max(np.max(np.abs(J)), 1.0) if J.size else 1.0
        if np.max(np.abs(J - J.T), initial=0.0) > 1e-12 * scale:
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(J) != 0):
            raise ValueError("coupling matrix must have zero diagonal")
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "J", J)

    def matrix(self) -> np.ndarray:
        return np.diag([m.freq for m in self.modes]) + self.J

    @classmethod
    def from_pairs(cls, modes: Sequence[BareMode], pairs, **kw) -> "CoupledModeSystem":
        n = len(modes)
        J = np.zeros((n, n))
        for i, j, v in pairs:
            J[i, j] = J[j, i] = v
        return cls(tuple(modes), J, **kw)


@dataclass(frozen=True)
class HybridMode:
    freq: float
    g_pe: float
    g_om: float
    zeta_m: float
    kappa_m: float
    eigvec: np.ndarray = field(compare=False)


def jacobi_eigh(A: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Rotations are applied in fixed row-major pivot order, so the result is
    deterministic.  Returns ``(eigenvalues, eigenvectors-as-columns)``,
    unsorted.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    # work relative to the mean diagonal; GHz offsets would swamp MHz couplings
    shift = float(np.mean(np.diag(A))) if n else 0.0
    A -= shift * np.eye(n)
    norm = np.linalg.norm(A)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A[mask])
        if off <= tol * norm or n < 2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q])):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(A) + shift, V


def mechanical_loss_budget(zeta_m: float, kappa_ln: float, kappa_si: float,
                           kappa_rad: float = 0.0) -> float:
    """TLS loss interpolated by piezo participation, plus radiation loss."""
    if not 0.0 <= zeta_m <= 1.0:
        raise ValueError("zeta_m must lie in [0, 1]")
    if min(kappa_ln, kappa_si, kappa_rad) < 0:
        raise ValueError("loss rates must be >= 0")
    return zeta_m * kappa_ln + (1.0 - zeta_m) * kappa_si + kappa_rad


def hybridize(system: CoupledModeSystem) -> list[HybridMode]:
    """Supermodes of ``system`` sorted by frequency.

    Couplings add coherently with the eigenvector amplitudes, participation
    and radiation loss add with their squares.  Each eigenvector's largest
    entry is made positive.
    """
    vals, vecs = jacobi_eigh(system.matrix())
    order = np.argsort(vals, kind="stable")
    g_pe0 = np.array([m.g_pe0 for m in system.modes])
    g_om0 = np.array([m.g_om0 for m in system.modes])
    w = np.array([m.piezo_weight for m in system.modes])
    rad = np.array([m.kappa_rad0 for m in system.modes])
    out = []
    for k in order:
        c = vecs[:, k].copy()
        if c[np.argmax(np.abs(c))] < 0:
            c = -c
        c2 = c * c
        zeta = float(min(max(c2 @ w, 0.0), 1.0))
        out.append(HybridMode(
            freq=float(vals[k]), g_pe=float(c @ g_pe0), g_om=float(c @ g_om0), zeta_m=zeta,
            kappa_m=mechanical_loss_budget(zeta, system.kappa_ln, system.kappa_si,
                                           float(c2 @ rad)),
            eigvec=c))
    return out


def best_mode(modes: Sequence[HybridMode], g_pe_threshold: float) -> int | None:
    """Index of the largest-|g_om| mode among those with |g_pe| >= threshold."""
    best, best_g = None, -1.0
    for i, m in enumerate(modes):
        if abs(m.g_pe) >= g_pe_threshold and abs(m.g_om) > best_g:
            best, best_g = i, abs(m.g_om)
    return best


@dataclass
class SweepPoint:
    piezo_freq: float
    modes: list[HybridMode]
    best: int | None


def sweep_anticrossing(system: CoupledModeSystem, piezo_freqs, piezo_index: int = 0,
                       g_pe_threshold: float = 1e6) -> list[SweepPoint]:
    piezo_freqs = list(piezo_freqs)
    if not piezo_freqs:
        raise ValueError("empty sweep range")
    out = []
    for f in piezo_freqs:
        modes = list(system.modes)
        modes[piezo_index] = replace(modes[piezo_index], freq=float(f))
        hm = hybridize(replace(system, modes=tuple(modes)))
        out.append(SweepPoint(float(f), hm, best_mode(hm, g_pe_threshold)))
    return out


def criterion_holds(point: SweepPoint, g_om_min: float, g_pe_min: float, zeta_max: float) -> bool:
    """True when some mode has |g_om| >= g_om_min, |g_pe| >= g_pe_min, zeta <= zeta_max."""
    return any(abs(m.g_om) >= g_om_min and abs(m.g_pe) >= g_pe_min and m.zeta_m <= zeta_max
               for m in point.modes)


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    rows = ["piezo_freq_hz,mode_index,freq_hz,g_pe_hz,g_om_hz,zeta_m,kappa_m_hz"]
    for p in points:
        for i, m in enumerate(p.modes):
            rows.append(f"{p.piezo_freq!r},{i},{m.freq!r},{m.g_pe!r},{m.g_om!r},"
                        f"{m.zeta_m!r},{m.kappa_m!r}")
    return "\n".join(rows) + "\n"


def dielectric_loss_rate(freq: float, tan_delta: float) -> float:
    if not freq > 0 or tan_delta < 0:
        raise ValueError("need freq > 0 and tan_delta >= 0")
    return freq * tan_delta


def qubit_loss_contribution(c_idt: float, c_q: float, kappa_ln_dielectric: float):
    """Participation ``C_IDT / C_q`` and the resulting added qubit loss (Hz)."""
    if not c_q > 0:
        raise ValueError("C_q must be > 0")
    zeta = c_idt / c_q
    return zeta, zeta * kappa_ln_dielectric


def gpe_capacitance_scaling(g_ref: float, c_q_ref: float, c_idt: float, c_q_new: float) -> float:
    """Rescale g_pe for a new circuit capacitance; g scales as (C_q + C_IDT)^-1/2."""
    if min(c_q_ref, c_q_new) <= 0 or c_idt < 0:
        raise ValueError("capacitances must be positive")
    return g_ref * math.sqrt((c_q_ref + c_idt) / (c_q_new + c_idt))
