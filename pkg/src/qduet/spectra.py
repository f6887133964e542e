"""Closed-form steady-state emission spectra.

Two analytic routes are implemented:

* the transformed-frame treatment ("TRWA"): a polaron-like unitary
  renormalizes the qubit frequency to eta*omega0 and induces a dipole-dipole
  coupling V_c; the line shape follows from resolvent transition amplitudes
  with renormalized couplings, and

* the bare second-order treatment ("SP") built on the untransformed
  Hamiltonian.

Both reduce each mode's occupation to |amplitude|^2 times a coupling weight;
the weight is either the bin-integrated lambda^2 of a comparison bath grid
(overlayable with multi-D1 spectra) or the continuum density J(omega)/2 per
branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .analysis import SpectrumSeries
from .bath import DiscretizedBath
from .model import ModelParams, spectral_density

PV_ABS_TOL = 1e-10
ETA_TOL = 1e-13
ETA_MAX_ITER = 200
ETA_DAMPING = 0.5
DEFAULT_GRID_POINTS = 2001


class ConvergenceError(RuntimeError):
    """Fixed-point or bracketing failure in a kernel solve."""


def _coupling_integral(a: float, alpha: float, omega_c: float) -> float:
    """int_0^wc J(x)/(x+a)^2 dx in closed form for the cutoff-Ohmic J."""
    if alpha == 0.0:
        return 0.0
    return 2.0 * alpha * (np.log((omega_c + a) / a) + a / (omega_c + a) - 1.0)


def _eta_map(eta: float, params: ModelParams) -> float:
    a = eta * params.omega0
    return float(np.exp(-0.5 * _coupling_integral(a, params.alpha, params.omega_c)))


def solve_eta(params: ModelParams, method: str = "fixed-point",
              tol: float = ETA_TOL, max_iter: int = ETA_MAX_ITER) -> float:
    """Renormalization factor eta, the fixed point of
    eta = exp[-1/2 int_0^wc J(x)/(x + eta*omega0)^2 dx]."""
    if params.alpha == 0.0:
        return 1.0
    if method == "fixed-point":
        eta = 1.0
        for _ in range(max_iter):
            new = (1.0 - ETA_DAMPING) * eta + ETA_DAMPING * _eta_map(eta, params)
            if abs(new - eta) < tol:
                return new
            eta = new
        raise ConvergenceError(
            f"eta fixed point did not converge in {max_iter} iterations "
            f"(alpha={params.alpha})")
    if method == "bisection":
        g = lambda e: e - _eta_map(e, params)
        lo, hi = 1e-8, 1.0
        if g(lo) >= 0 or g(hi) <= 0:
            raise ConvergenceError("eta root not bracketed in (1e-8, 1]")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) < 0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15:
                break
        return 0.5 * (lo + hi)
    raise ValueError(f"unknown method {method!r}")


def dipole_coupling_vc(params: ModelParams, eta: float) -> float:
    """Reservoir-induced dipole-dipole coupling V_c (negative at d=0).

    Continuum form of sum_k (lambda_k^2 / 2 omega_k)(xi_k^2 - 2 xi_k) cos(kd):
        V_c = -int_0^wc J(x) (x + 2a) / (2 (x + a)^2) cos(x d/v_g) dx,
    with a = eta*omega0.
    """
    if params.alpha == 0.0:
        return 0.0
    a = eta * params.omega0
    d_time = params.d * params.length_unit / params.v_g

    def integrand(x):
        return (spectral_density(x, params) * (x + 2.0 * a)
                / (2.0 * (x + a) ** 2) * np.cos(x * d_time))

    val, _ = quad(integrand, 0.0, params.omega_c,
                  epsabs=PV_ABS_TOL, epsrel=1e-9, limit=400)
    return -val


@lru_cache(maxsize=200000)
def _pv_cached(omega: float, d_time: float, alpha: float, omega_c: float,
               a: float, kind: str) -> float:
    if alpha == 0.0:
        return 0.0

    def gfun(x):
        if x <= 0.0 or x >= omega_c:
            return 0.0
        w = (a / (x + a)) ** 2 if kind == "trwa" else 0.25
        return 2.0 * alpha * x * np.cos(x * d_time) * w

    if omega >= omega_c:
        # hard-cutoff edge: treat as the one-sided limit from inside
        omega = omega_c * (1.0 - 1e-12)
    if 0.0 < omega < omega_c:
        g_w = gfun(omega)

        def subtracted(x):
            dx = omega - x
            if abs(dx) < 1e-13:
                h = 1e-7
                return -(gfun(omega + h) - gfun(omega - h)) / (2.0 * h)
            return (gfun(x) - g_w) / dx

        val, _ = quad(subtracted, 0.0, omega_c, points=[omega],
                      epsabs=PV_ABS_TOL, epsrel=1e-9, limit=400)
        return val + g_w * np.log(omega / (omega_c - omega))

    # omega <= 0: no singularity inside the support
    def plain(x):
        return gfun(x) / (omega - x) if x != omega else 0.0

    val, _ = quad(plain, 0.0, omega_c, epsabs=PV_ABS_TOL, epsrel=1e-9, limit=400)
    return val


def lamb_shift_pv(omega: float, d: float, params: ModelParams,
                  eta: Optional[float] = None, kind: str = "trwa") -> float:
    """Principal-value reservoir shift at frequency omega and separation d.

    kind="trwa" uses the renormalized weight (a/(x+a))^2 with a = eta*omega0;
    kind="sp" uses the bare 1/4 weight.
    """
    if kind not in ("trwa", "sp"):
        raise ValueError(f"unknown kind {kind!r}")
    a = (eta if eta is not None else 1.0) * params.omega0
    d_time = d * params.length_unit / params.v_g
    return _pv_cached(float(omega), float(d_time), params.alpha,
                      params.omega_c, float(a), kind)


def linewidth(omega, d: float, params: ModelParams,
              eta: Optional[float] = None, kind: str = "trwa"):
    """Closed-form decay kernel at (omega, d); zero outside (0, omega_c)."""
    if kind not in ("trwa", "sp"):
        raise ValueError(f"unknown kind {kind!r}")
    w = np.asarray(omega, dtype=float)
    d_time = d * params.length_unit / params.v_g
    j = spectral_density(w, params)
    if kind == "trwa":
        a = (eta if eta is not None else 1.0) * params.omega0
        out = np.pi * (a / (w + a)) ** 2 * j * np.cos(w * d_time)
    else:
        out = 0.25 * np.pi * j * np.cos(w * d_time)
    if np.isscalar(omega) or w.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TrwaKernels:
    """Cached transformed-frame ingredients for one parameter set."""

    params: ModelParams
    eta: float
    v_c: float

    @classmethod
    def build(cls, params: ModelParams) -> "TrwaKernels":
        eta = solve_eta(params)
        return cls(params=params, eta=eta,
                   v_c=dipole_coupling_vc(params, eta))

    def delta(self, omega: float, d: Optional[float] = None) -> float:
        d = self.params.d if d is None else d
        return lamb_shift_pv(omega, d, self.params, self.eta, "trwa")

    def gamma(self, omega, d: Optional[float] = None):
        d = self.params.d if d is None else d
        return linewidth(omega, d, self.params, self.eta, "trwa")

    def omega_tilde(self, omega_k):
        return omega_k - self.v_c ** 2 / (2.0 * self.eta * self.params.omega0)

    def a_fun(self, omega: float) -> complex:
        return (omega - self.eta * self.params.omega0 - self.delta(omega, 0.0)
                + 1j * self.gamma(omega, 0.0))

    def b_fun(self, omega: float, d: Optional[float] = None) -> complex:
        d = self.params.d if d is None else d
        return self.v_c + self.delta(omega, d) - 1j * self.gamma(omega, d)

    def amplitude(self, omega_k: float, branch_sign: int, state: str) -> complex:
        """Per-branch transition amplitude (weight factor left out).

        branch_sign = +1 for right movers (k > 0), -1 for left movers; the
        phase e^{-ikd} becomes e^{-i sign * omega_k d / v_g}.
        """
        wt = self.omega_tilde(omega_k)
        av = self.a_fun(wt)
        d_time = self.params.d * self.params.length_unit / self.params.v_g
        phase = np.exp(-1j * branch_sign * omega_k * d_time)
        direct = 1.0 / (2.0 * self.eta * self.params.omega0)
        if state == "Psi0":
            bv = self.b_fun(wt)
            return (av + phase * bv) / (av ** 2 - bv ** 2) + direct
        if state in ("PsiPlus", "PsiMinus"):
            sign = 1.0 if state == "PsiPlus" else -1.0
            bv = self.b_fun(wt)
            return ((1.0 + sign * phase) / np.sqrt(2.0)
                    * (1.0 / (av - sign * bv) + direct))
        raise ValueError(f"unknown state {state!r}")

    def coupling_weight(self, omega_k, base_weight):
        """lambda_tilde^2 given the bare per-branch weight lambda^2."""
        a = self.eta * self.params.omega0
        return base_weight * (a / (a + omega_k)) ** 2


@dataclass(frozen=True)
class SpKernels:
    """Bare second-order ingredients for one parameter set."""

    params: ModelParams

    @classmethod
    def build(cls, params: ModelParams) -> "SpKernels":
        return cls(params=params)

    def delta(self, omega: float, d: Optional[float] = None) -> float:
        d = self.params.d if d is None else d
        return lamb_shift_pv(omega, d, self.params, None, "sp")

    def gamma(self, omega, d: Optional[float] = None):
        d = self.params.d if d is None else d
        return linewidth(omega, d, self.params, None, "sp")

    def omega_prime(self, omega_k):
        return omega_k + 2.0 * self.delta(-self.params.omega0, 0.0)

    def a_fun(self, omega: float) -> complex:
        w0 = self.params.omega0
        return (omega - w0 - self.delta(omega, 0.0) - self.delta(omega - 2.0 * w0, 0.0)
                + 1j * (self.gamma(omega, 0.0) + self.gamma(omega - 2.0 * w0, 0.0)))

    def b_fun(self, omega: float, d: Optional[float] = None) -> complex:
        d = self.params.d if d is None else d
        w0 = self.params.omega0
        return (self.delta(omega, d) + self.delta(omega - 2.0 * w0, d)
                - 1j * (self.gamma(omega, d) + self.gamma(omega - 2.0 * w0, d)))

    def amplitude(self, omega_k: float, branch_sign: int, state: str) -> complex:
        wp = self.omega_prime(omega_k)
        av = self.a_fun(wp)
        d_time = self.params.d * self.params.length_unit / self.params.v_g
        phase = np.exp(-1j * branch_sign * omega_k * d_time)
        if state == "Psi0":
            bv = self.b_fun(wp)
            return (av + phase * bv) / (av ** 2 - bv ** 2)
        if state in ("PsiPlus", "PsiMinus"):
            sign = 1.0 if state == "PsiPlus" else -1.0
            bv = self.b_fun(wp)
            return (1.0 + sign * phase) / np.sqrt(2.0) / (av - sign * bv)
        raise ValueError(f"unknown state {state!r}")

    def coupling_weight(self, omega_k, base_weight):
        return base_weight / 4.0


def default_grid(params: ModelParams, n: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform grid on (0, omega_c]."""
    return np.linspace(0.0, params.omega_c, n + 1)[1:]


def _grid_and_weights(params: ModelParams, grid, bath):
    if bath is not None:
        return bath.right_omega.copy(), (bath.lam[: bath.n_b] ** 2).copy(), "bath-bins"
    if grid is None:
        grid = default_grid(params)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0.0) or np.any(grid > params.omega_c):
        raise ValueError("spectrum grid must lie in (0, omega_c]")
    return grid, spectral_density(grid, params) / 2.0, "density"


def _spectrum(kernels, params: ModelParams, grid, bath, method: str,
              state: Optional[str]) -> SpectrumSeries:
    omega, base_w, convention = _grid_and_weights(params, grid, bath)
    state = params.initial_state if state is None else state
    value = np.empty_like(omega)
    for i, w in enumerate(omega):
        weight = kernels.coupling_weight(w, base_w[i])
        n_pair = sum(abs(kernels.amplitude(w, s, state)) ** 2 for s in (+1, -1))
        value[i] = weight * n_pair
    meta = {"method": method, "state": state, "alpha": params.alpha,
            "omega_c": params.omega_c, "d": params.d,
            "weight_convention": convention}
    if method == "TRWA":
        meta["eta"] = kernels.eta
        meta["v_c"] = kernels.v_c
    return SpectrumSeries(omega, value, meta)


def trwa_spectrum(params: ModelParams, grid=None, bath: Optional[DiscretizedBath] = None,
                  kernels: Optional[TrwaKernels] = None,
                  state: Optional[str] = None) -> SpectrumSeries:
    """Steady-state spectrum from the transformed-frame theory.

    With `bath` given, the spectrum is evaluated on the bath's right-branch
    frequencies with bin-integrated weights (directly overlayable with a
    multi-D1 snapshot); otherwise on `grid` (default 2001 points) with the
    continuum density weight.
    """
    if kernels is None:
        kernels = TrwaKernels.build(params)
    return _spectrum(kernels, params, grid, bath, "TRWA", state)


def sp_spectrum(params: ModelParams, grid=None, bath: Optional[DiscretizedBath] = None,
                kernels: Optional[SpKernels] = None,
                state: Optional[str] = None) -> SpectrumSeries:
    """Steady-state spectrum from the bare second-order theory."""
    if kernels is None:
        kernels = SpKernels.build(params)
    return _spectrum(kernels, params, grid, bath, "SP", state)
