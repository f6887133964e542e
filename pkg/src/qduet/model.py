"""Physical parameters, spectral density, and the two-qubit algebra.

Units: the qubit transition frequency omega0 sets the frequency/energy unit
(omega0 = 1 by convention), times are in 1/omega0, and distances are in
L0 = v_g/omega0.  The two-qubit basis is the sigma^x product basis, ordered
(|++>, |+->, |-+>, |-->).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_LABELS = ("Psi0", "PsiPlus", "PsiMinus")

# Index permutations induced by sigma^z on the sigma^x labels:
# sigma^z|+> = |->, sigma^z|-> = |+>.
FLIP_QUBIT1 = np.array([2, 3, 0, 1])
FLIP_QUBIT2 = np.array([1, 0, 3, 2])
FLIP_BOTH = np.array([3, 2, 1, 0])

# Diagonal values of sigma_1^x and sigma_2^x in the ordered basis.
SIGMA_X_DIAG = np.array([[1.0, 1.0, -1.0, -1.0],
                         [1.0, -1.0, 1.0, -1.0]])


@dataclass(frozen=True)
class ModelParams:
    """Configuration of the two qubits and the Ohmic waveguide."""

    alpha: float
    omega_c: float = 5.0
    v_g: float = 1.0
    x1: float = 0.0
    x2: float = 0.0
    initial_state: str = "Psi0"
    omega0: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.v_g <= 0:
            raise ValueError(f"v_g must be > 0, got {self.v_g}")
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")
        if self.initial_state not in STATE_LABELS:
            raise ValueError(
                f"initial_state must be one of {STATE_LABELS}, got {self.initial_state!r}")

    @property
    def d(self) -> float:
        """Qubit separation x1 - x2 (only |d| matters physically)."""
        return self.x1 - self.x2

    @property
    def length_unit(self) -> float:
        """L0 = v_g/omega0."""
        return self.v_g / self.omega0


def spectral_density(omega, params: ModelParams):
    """Ohmic density J(w) = 2*alpha*w on (0, omega_c), 0 elsewhere (hard cutoff).

    Accepts scalars or arrays; J(0) = J(omega_c) = 0 by convention.
    """
    w = np.asarray(omega, dtype=float)
    j = np.where((w > 0) & (w < params.omega_c), 2.0 * params.alpha * w, 0.0)
    if np.isscalar(omega) or w.ndim == 0:
        return float(j)
    return j


@dataclass(frozen=True)
class InitialQubitAmplitudes:
    """Two-qubit amplitudes over the ordered sigma^x product basis."""

    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=complex)
        if c.shape != (4,):
            raise ValueError(f"need 4 amplitudes, got shape {c.shape}")
        n = np.sum(np.abs(c) ** 2)
        if abs(n - 1.0) > 1e-14:
            raise ValueError(f"amplitudes not normalized: sum |c|^2 = {n!r}")
        object.__setattr__(self, "c", c)


def initial_amplitudes(state: str) -> InitialQubitAmplitudes:
    """Expand the named initial state in the sigma^x product basis.

    Psi0 = |eg>, PsiPlus/PsiMinus = (|eg> +- |ge>)/sqrt(2), with
    |e> = (|+> + |->)/sqrt(2) and |g> = (|+> - |->)/sqrt(2).
    """
    s = 1.0 / np.sqrt(2.0)
    if state == "Psi0":
        c = np.array([0.5, -0.5, 0.5, -0.5], dtype=complex)
    elif state == "PsiPlus":
        c = np.array([s, 0.0, 0.0, -s], dtype=complex)
    elif state == "PsiMinus":
        c = np.array([0.0, -s, s, 0.0], dtype=complex)
    else:
        raise ValueError(f"unknown initial state {state!r}")
    return InitialQubitAmplitudes(c)


def _perm_matrix(perm) -> np.ndarray:
    m = np.zeros((4, 4))
    for col, row in enumerate(perm):
        m[row, col] = 1.0
    return m


@dataclass(frozen=True)
class SystemMatrices:
    """4x4 system operators in the ordered sigma^x product basis.

    h_s is the free two-qubit Hamiltonian (omega0/2)(sigma_1^z + sigma_2^z),
    purely off-diagonal here because sigma^z flips the sigma^x labels.
    """

    h_s: np.ndarray
    sigma1x: np.ndarray
    sigma2x: np.ndarray
    sx1sx2: np.ndarray
    sigma1z: np.ndarray
    sigma2z: np.ndarray
    h_s_sq: np.ndarray
    omega0: float


def system_matrix_elements(omega0: float = 1.0) -> SystemMatrices:
    """Build the system operators used by the equations of motion."""
    s1z = _perm_matrix(FLIP_QUBIT1)
    s2z = _perm_matrix(FLIP_QUBIT2)
    h_s = 0.5 * omega0 * (s1z + s2z)
    s1x = np.diag(SIGMA_X_DIAG[0])
    s2x = np.diag(SIGMA_X_DIAG[1])
    # H_S^2 = (omega0^2/2)(1 + sigma_1^z sigma_2^z)
    h_s_sq = 0.5 * omega0 ** 2 * (np.eye(4) + _perm_matrix(FLIP_BOTH))
    return SystemMatrices(
        h_s=h_s,
        sigma1x=s1x,
        sigma2x=s2x,
        sx1sx2=s1x @ s2x,
        sigma1z=s1z,
        sigma2z=s2z,
        h_s_sq=h_s_sq,
        omega0=omega0,
    )
