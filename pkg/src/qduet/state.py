"""Multi-D1 variational state: coherent-state algebra and observables.

The state is |D(t)> = sum_{j=1..4} sum_{n=1..M} A_{nj} |phi_j> |f_{nj}>,
stored branch-major: a[j, n] and f[j, n, k] with k running over the 2*N_b
bath modes.  All observable evaluation is read-only; only the integrator
mutates states.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analysis import SpectrumSeries
from .bath import DiscretizedBath
from .model import FLIP_QUBIT1, FLIP_QUBIT2

IMAG_RESIDUE_TOL = 1e-10
NEGATIVE_OCCUPATION_TOL = -1e-8


class NumericalDiagnostic(UserWarning):
    """Raised-as-warning when an analytically real/positive quantity drifts."""


@dataclass
class MultiD1State:
    """Variational parameters (amplitudes, displacements) at time t."""

    a: np.ndarray  # (4, M) complex amplitudes A_{nj}
    f: np.ndarray  # (4, M, 2*N_b) complex displacements f_{njk}
    t: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.f = np.asarray(self.f, dtype=complex)
        if self.a.ndim != 2 or self.a.shape[0] != 4:
            raise ValueError(f"amplitudes must have shape (4, M), got {self.a.shape}")
        if self.f.shape != (4, self.a.shape[1], self.f.shape[2]):
            raise ValueError(
                f"displacements must have shape (4, M, K), got {self.f.shape}")

    @property
    def multiplicity(self) -> int:
        return self.a.shape[1]

    @property
    def n_modes(self) -> int:
        return self.f.shape[2]

    def copy(self) -> "MultiD1State":
        return MultiD1State(self.a.copy(), self.f.copy(), self.t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.f)))


def overlap(f_a: np.ndarray, f_b: np.ndarray) -> complex:
    """Coherent-state overlap <f_a|f_b>, exponent accumulated in log space."""
    f_a = np.asarray(f_a, dtype=complex)
    f_b = np.asarray(f_b, dtype=complex)
    if f_a.shape != f_b.shape:
        raise ValueError("displacement vectors must have equal length")
    expo = np.sum(np.conj(f_a) * f_b) \
        - 0.5 * (np.sum(np.abs(f_a) ** 2) + np.sum(np.abs(f_b) ** 2))
    return complex(np.exp(expo))


def cross_overlaps(f: np.ndarray) -> np.ndarray:
    """All overlaps O[j, l, m, n] = <f_{mj}|f_{nl}> for a (4, M, K) array."""
    inner = np.einsum("jmk,lnk->jlmn", np.conj(f), f)
    norms = np.einsum("jmk,jmk->jm", np.conj(f), f).real
    expo = inner - 0.5 * (norms[:, None, :, None] + norms[None, :, None, :])
    return np.exp(expo)


def branch_grams(f: np.ndarray) -> np.ndarray:
    """Per-branch Gram matrices G[j, m, n] = <f_{mj}|f_{nj}>."""
    inner = np.einsum("jmk,jnk->jmn", np.conj(f), f)
    norms = np.einsum("jmk,jmk->jm", np.conj(f), f).real
    expo = inner - 0.5 * (norms[:, :, None] + norms[:, None, :])
    return np.exp(expo)


def norm_squared(state: MultiD1State) -> float:
    """<D|D> = sum_j A_j^dag G_j A_j."""
    g = branch_grams(state.f)
    val = np.einsum("jm,jmn,jn->", np.conj(state.a), g, state.a)
    return float(val.real)


def populations(state: MultiD1State) -> np.ndarray:
    """Excited-state populations (P_1^e, P_2^e) = (1 + <sigma_j^z>)/2.

    sigma^z is off-diagonal in the sigma^x basis, so it pairs branches
    differing in one label, weighted by cross-branch overlaps.
    """
    o = cross_overlaps(state.f)
    out = np.empty(2)
    for q, flip in enumerate((FLIP_QUBIT1, FLIP_QUBIT2)):
        val = 0.0 + 0.0j
        for l in range(4):
            j = flip[l]
            val += np.einsum("m,mn,n->", np.conj(state.a[j]), o[j, l], state.a[l])
        out[q] = 0.5 * (1.0 + val.real)
    return out


def photon_numbers(state: MultiD1State) -> np.ndarray:
    """Per-mode occupations N(k,t) = <b_k^dag b_k>."""
    g = branch_grams(state.f)
    val = np.einsum("jm,jmk,jmn,jnk,jn->k",
                    np.conj(state.a), np.conj(state.f), g, state.f, state.a)
    scale = max(np.max(np.abs(val)), 1.0) if val.size else 1.0
    worst = np.max(np.abs(val.imag)) if val.size else 0.0
    if worst > IMAG_RESIDUE_TOL * scale:
        warnings.warn(
            f"photon numbers carry imaginary residue {worst:.3e}",
            NumericalDiagnostic)
    n_k = val.real
    if n_k.size and np.min(n_k) < NEGATIVE_OCCUPATION_TOL:
        warnings.warn(
            f"negative photon occupation {np.min(n_k):.3e}", NumericalDiagnostic)
    return n_k


def emission_spectrum_snapshot(state: MultiD1State,
                               bath: DiscretizedBath) -> SpectrumSeries:
    """N(omega_k, t) = N(k,t) + N(-k,t) on the right-branch frequencies."""
    if state.n_modes != bath.n_modes:
        raise ValueError("state and bath mode counts differ")
    n_k = photon_numbers(state)
    value = np.clip(bath.mirror_sum(n_k), 0.0, None)
    return SpectrumSeries(bath.right_omega.copy(), value,
                          meta={"method": "multiD1", "t": state.t})


@dataclass
class ObservableRecord:
    """One sampled row of the trajectory."""

    t: float
    p_e: np.ndarray
    n_k: np.ndarray
    norm: float
    sigma2: float
    energy: float = 0.0

    def __post_init__(self):
        self.p_e = np.asarray(self.p_e, dtype=float)
        self.n_k = np.asarray(self.n_k, dtype=float)


def trajectory_csv(records) -> str:
    """CSV stream of (t, P1, P2, norm, sigma2)."""
    buf = io.StringIO()
    buf.write("t,P1,P2,norm,sigma2\n")
    for r in records:
        buf.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                  % (r.t, r.p_e[0], r.p_e[1], r.norm, r.sigma2))
    return buf.getvalue()


def photon_matrix_csv(records, bath: DiscretizedBath) -> str:
    """Mirror-summed photon numbers, rows = times, columns = omega_k."""
    buf = io.StringIO()
    buf.write("t," + ",".join("%.17g" % w for w in bath.right_omega) + "\n")
    for r in records:
        paired = bath.mirror_sum(r.n_k)
        buf.write("%.17g," % r.t + ",".join("%.17g" % v for v in paired) + "\n")
    return buf.getvalue()
