"""Linear discretization of the Ohmic waveguide into 2*N_b propagating modes.

The frequency axis [0, omega_c] is split into N_b equal bins; each bin
contributes one right- and one left-propagating mode.  Per-branch couplings
carry half the bin-integrated spectral weight, and the mode frequency is the
J-weighted mean of the bin, so the first two spectral moments are exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .model import ModelParams


@dataclass(frozen=True)
class DiscretizedBath:
    """2*n_b modes; entries [0:n_b] are the right branch (k>0), [n_b:] the
    mirror left branch, both in ascending frequency order."""

    n_b: int
    omega: np.ndarray
    lam: np.ndarray
    k: np.ndarray
    branch: np.ndarray

    @property
    def n_modes(self) -> int:
        return 2 * self.n_b

    @property
    def right_omega(self) -> np.ndarray:
        return self.omega[: self.n_b]

    def mirror_sum(self, per_mode: np.ndarray) -> np.ndarray:
        """Sum a per-mode quantity over each (+k, -k) pair."""
        return per_mode[..., : self.n_b] + per_mode[..., self.n_b:]


def discretize(params: ModelParams, n_b: int) -> DiscretizedBath:
    """Build the 2*n_b-mode bath for the given model parameters.

    Right-branch couplings and frequencies per bin [x_{n-1}, x_n]:
        lambda_n^2 = (alpha/2) (x_n^2 - x_{n-1}^2)
        omega_n    = (2/3) (x_n^3 - x_{n-1}^3) / (x_n^2 - x_{n-1}^2)
    The left branch mirrors the right one (same omega and lambda, k -> -k).
    """
    if n_b < 1:
        raise ValueError(f"n_b must be >= 1, got {n_b}")
    edges = np.linspace(0.0, params.omega_c, n_b + 1)
    lo, hi = edges[:-1], edges[1:]
    d2 = hi ** 2 - lo ** 2
    lam2 = 0.5 * params.alpha * d2
    omega = (2.0 / 3.0) * (hi ** 3 - lo ** 3) / d2
    lam = np.sqrt(lam2)

    omega_all = np.concatenate([omega, omega])
    lam_all = np.concatenate([lam, lam])
    branch = np.concatenate([np.ones(n_b), -np.ones(n_b)])
    k_all = branch * omega_all / params.v_g
    return DiscretizedBath(n_b=n_b, omega=omega_all, lam=lam_all,
                           k=k_all, branch=branch)


def bath_table_csv(bath: DiscretizedBath) -> str:
    """Render the mode table as CSV (index, branch, k, omega, lambda)."""
    buf = io.StringIO()
    buf.write("index,branch,k,omega,lambda\n")
    for i in range(bath.n_modes):
        buf.write("%d,%d,%.17g,%.17g,%.17g\n"
                  % (i, int(bath.branch[i]), bath.k[i], bath.omega[i], bath.lam[i]))
    return buf.getvalue()
