"""Equations of motion for the variational parameters and their integration.

The stationarity conditions of the time-dependent variational principle are
assembled per qubit branch j: projecting the Schroedinger residual on
<phi_j|<f_mj| gives the amplitude rows, and on <phi_j|<f_mj| b_q (weighted by
A*_mj) the displacement rows.  Each branch yields a square Hermitian block of
size M*(1+2N_b) acting on the unknowns (a_nj, fdot_njk); the branches couple
only through the inhomogeneous side (H_S terms).

Two solvers produce identical derivatives: a dense Tikhonov-regularized block
solve (reference, used at small scale), and a structured elimination that
reduces each block to an (M + M^2)-dimensional system by exploiting the
"Gram (x) identity + rank-structured" form of the displacement block.  The
structured path makes production-size propagation tractable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bath import DiscretizedBath
from .model import (FLIP_QUBIT1, FLIP_QUBIT2, SIGMA_X_DIAG, ModelParams,
                    SystemMatrices, initial_amplitudes, system_matrix_elements)
from .state import (MultiD1State, NumericalDiagnostic, ObservableRecord,
                    cross_overlaps)

EOM_RESIDUAL_TOL = 1e-6
NORM_DRIFT_ABORT = 1e-3
EPS_ESCALATION_CAP = 1e-6


class IntegrationError(RuntimeError):
    """Numerical failure of the propagation, carrying the failing time."""

    def __init__(self, message: str, t: float = float("nan")):
        super().__init__(message)
        self.t = t


@dataclass
class EomSystem:
    """One branch block of the matrix equation i*M*y = I."""

    matrix: np.ndarray
    rhs: np.ndarray  # -i * I, so that matrix @ y = rhs
    epsilon: float
    multiplicity: int
    n_modes: int


@dataclass
class IntegratorConfig:
    """Fixed-step RK4 settings and the multi-D1 initialization knobs."""

    dt: float = 0.01
    t_final: float = 300.0
    epsilon_reg: float = 1e-10
    noise_seed: int = 0
    noise_scale: float = 1e-3
    output_stride: int = 10
    solver: str = "auto"  # auto|reduced|dense

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.epsilon_reg < 0:
            raise ValueError(f"epsilon_reg must be >= 0, got {self.epsilon_reg}")
        if self.output_stride < 1:
            raise ValueError(f"output_stride must be >= 1, got {self.output_stride}")
        if self.solver not in ("auto", "reduced", "dense"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class Derivatives:
    """Raw (a_nj) and displacement velocities plus the reconstructed Adot."""

    a: np.ndarray       # (4, M)
    f_dot: np.ndarray   # (4, M, K)
    a_dot: np.ndarray   # (4, M)


@dataclass
class EomContext:
    """Precomputed bath/system quantities shared by assembly and observables."""

    params: ModelParams
    bath: DiscretizedBath
    sys: SystemMatrices
    lam: np.ndarray = field(init=False)
    omega: np.ndarray = field(init=False)
    phase_x: np.ndarray = field(init=False)   # (2, K) e^{i k x_h}
    sx: np.ndarray = field(init=False)        # (2, 4) sigma_h^x diagonals
    sxx: np.ndarray = field(init=False)       # (4,) sigma_1^x sigma_2^x diagonal
    acomm: np.ndarray = field(init=False)     # (2, 4, 4) {H_S, sigma_h^x}
    sum_lam2_4: float = field(init=False)
    sum_lam2_cos_4: float = field(init=False)

    def __post_init__(self):
        self.lam = self.bath.lam
        self.omega = self.bath.omega
        unit = self.params.length_unit
        pos = np.array([self.params.x1, self.params.x2]) * unit
        self.phase_x = np.exp(1j * np.outer(pos, self.bath.k))
        self.sx = SIGMA_X_DIAG
        self.sxx = SIGMA_X_DIAG[0] * SIGMA_X_DIAG[1]
        hs = self.sys.h_s
        self.acomm = np.stack([hs @ self.sys.sigma1x + self.sys.sigma1x @ hs,
                               hs @ self.sys.sigma2x + self.sys.sigma2x @ hs])
        self.sum_lam2_4 = 0.25 * float(np.sum(self.lam ** 2))
        d_phys = self.params.d * unit
        self.sum_lam2_cos_4 = 0.25 * float(
            np.sum(self.lam ** 2 * np.cos(self.bath.k * d_phys)))


def build_context(params: ModelParams, bath: DiscretizedBath,
                  sys: Optional[SystemMatrices] = None) -> EomContext:
    if sys is None:
        sys = system_matrix_elements(params.omega0)
    return EomContext(params=params, bath=bath, sys=sys)


def initial_state(params: ModelParams, bath: DiscretizedBath, multiplicity: int,
                  seed: int = 0, noise_scale: float = 1e-3) -> MultiD1State:
    """Vacuum-reservoir initial state with degeneracy-breaking jitter.

    The first coherent state per branch carries the qubit amplitude and sits
    exactly at the vacuum; extra rows start with zero amplitude and tiny
    seeded complex-Gaussian displacements so the initial Gram matrices are
    nonsingular.
    """
    c = initial_amplitudes(params.initial_state).c
    m, k = multiplicity, bath.n_modes
    a = np.zeros((4, m), dtype=complex)
    a[:, 0] = c
    f = np.zeros((4, m, k), dtype=complex)
    if m > 1 and noise_scale > 0:
        rng = np.random.default_rng(seed)
        jitter = rng.standard_normal((4, m - 1, k)) + 1j * rng.standard_normal((4, m - 1, k))
        f[:, 1:, :] = noise_scale * jitter / np.sqrt(2.0)
    return MultiD1State(a, f, 0.0)


# ---------------------------------------------------------------------------
# assembly

def _drive(ctx: EomContext, t: float) -> np.ndarray:
    """g[h, k] = (lambda_k/2) e^{i(k x_h + omega_k t)}."""
    return 0.5 * ctx.lam * ctx.phase_x * np.exp(1j * ctx.omega * t)


def _rhs_pieces(a_amp, f, ctx: EomContext, t: float):
    """Cross overlaps, Gram matrices, drive projections, and the -i*I sides."""
    o = cross_overlaps(f)
    g = np.einsum("jjmn->jmn", o)
    drv = _drive(ctx, t)
    uh = np.einsum("jmk,hk->hjm", np.conj(f), drv)
    u = np.einsum("hj,hjm->jm", ctx.sx, uh)
    w = u[:, :, None] + np.conj(u)[:, None, :]

    hs = ctx.sys.h_s
    h_a = np.einsum("jl,ln,jlmn->jm", hs, a_amp, o)
    e = a_amp[:, None, :] * g * w
    r_a = -1j * (h_a + e.sum(axis=2))

    d_q = np.einsum("hj,hq->jq", ctx.sx, drv)
    h_f = np.einsum("jl,ln,lnq,jlmn->jmq", hs, a_amp, f, o)
    ga = np.einsum("jmn,jn->jm", g, a_amp)
    drive_f = np.einsum("jmn,jnq->jmq", e, f) + ga[:, :, None] * d_q[:, None, :]
    rho = -1j * np.conj(a_amp)[:, :, None] * (h_f + drive_f)
    return o, g, uh, u, r_a, rho


def assemble_eom(state: MultiD1State, ctx: EomContext, t: Optional[float] = None,
                 epsilon: float = 1e-10) -> list:
    """Dense branch blocks of the stationarity equations at time t.

    Row/column ordering per branch: (a_1..a_M, fdot_{1,1}..fdot_{1,K}, ...,
    fdot_{M,K}).  The matrix is Hermitian because the displacement rows keep
    their A*_mj weights.
    """
    if t is None:
        t = state.t
    a_amp, f = state.a, state.f
    m, k = state.multiplicity, state.n_modes
    _, g, _, _, r_a, rho = _rhs_pieces(a_amp, f, ctx, t)

    blocks = []
    eye_k = np.eye(k)
    for j in range(4):
        gj = g[j]
        aj = a_amp[j]
        fj = f[j]
        n = m * (1 + k)
        mat = np.zeros((n, n), dtype=complex)
        mat[:m, :m] = gj
        # <a_m | fdot_{n,k}> block: A_n G_mn f*_mk
        af = aj[None, :, None] * gj[:, :, None] * np.conj(fj)[:, None, :]
        mat[:m, m:] = af.reshape(m, m * k)
        # <f_{m,q} | a_n> block: A*_m G_mn f_nq
        fa = np.conj(aj)[:, None, None] * gj[:, :, None] * fj[None, :, :]
        mat[m:, :m] = fa.transpose(0, 2, 1).reshape(m * k, m)
        # <f_{m,q} | fdot_{n,k}> block: A*_m A_n G_mn (delta_kq + f*_mk f_nq)
        s = np.conj(aj)[:, None] * aj[None, :] * gj
        ff = np.empty((m, k, m, k), dtype=complex)
        for mm in range(m):
            for nn in range(m):
                ff[mm, :, nn, :] = s[mm, nn] * (eye_k + np.outer(fj[nn], np.conj(fj[mm])))
        mat[m:, m:] = ff.reshape(m * k, m * k)
        rhs = np.concatenate([r_a[j], rho[j].reshape(m * k)])
        blocks.append(EomSystem(matrix=mat, rhs=rhs, epsilon=epsilon,
                                multiplicity=m, n_modes=k))
    return blocks


def _solve_block(block: EomSystem) -> np.ndarray:
    """Direct solve when well conditioned, else Tikhonov with escalation."""
    mat, rhs = block.matrix, block.rhs
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    scale = np.mean(np.abs(np.diag(mat)))
    if scale == 0.0:
        scale = 1.0
    eps = block.epsilon * scale
    cond = np.linalg.cond(mat)
    if np.isfinite(cond) and eps > 0 and cond < 1.0 / block.epsilon:
        y = np.linalg.solve(mat, rhs)
        if np.linalg.norm(mat @ y - rhs) / rhs_norm <= EOM_RESIDUAL_TOL:
            return y
    mh = np.conj(mat.T)
    gram = mh @ mat
    rhs2 = mh @ rhs
    while True:
        y = np.linalg.solve(gram + eps * np.eye(mat.shape[0]), rhs2)
        resid = np.linalg.norm(mat @ y - rhs) / rhs_norm
        if resid <= EOM_RESIDUAL_TOL:
            return y
        eps *= 10.0
        if eps > EPS_ESCALATION_CAP * scale:
            raise IntegrationError(
                f"equation-of-motion residual {resid:.3e} exceeds "
                f"{EOM_RESIDUAL_TOL} after regularized solve")


def solve_eom(blocks: list, state: MultiD1State) -> Derivatives:
    """Solve the four branch blocks and reconstruct Adot from a_nj."""
    m = state.multiplicity
    k = state.n_modes
    a = np.zeros((4, m), dtype=complex)
    f_dot = np.zeros((4, m, k), dtype=complex)
    for j, block in enumerate(blocks):
        y = _solve_block(block)
        a[j] = y[:m]
        f_dot[j] = y[m:].reshape(m, k)
    a_dot = a + state.a * np.einsum("jmk,jmk->jm", f_dot, np.conj(state.f)).real
    return Derivatives(a=a, f_dot=f_dot, a_dot=a_dot)


# ---------------------------------------------------------------------------
# structured per-branch solver

def _reduced_solve(a_amp, f, g, r_a, rho, eps_reg):
    """Eliminate the displacement rows analytically, solve the remaining
    (M + M^2) system per branch, and back-substitute the velocities.

    Per branch the unknowns are a_n and the projections C_mn = f_m^dag fdot_n;
    the displacement rows give  S V = rho - T F  with S_mn = A*_m A_n G_mn and
    T_mn = A*_m G_mn a_n + S_mn C_mn, which closes linearly on (a, C).
    """
    four, m, k = f.shape
    n_small = m + m * m

    s = np.conj(a_amp)[:, :, None] * a_amp[:, None, :] * g
    z = np.einsum("jmk,jnk->jmn", np.conj(f), f)
    p = np.einsum("jmk,jpk->jmp", np.conj(f), rho)

    eye_m = np.eye(m)
    diag_s = np.einsum("jmm->jm", s).real
    eps_s = eps_reg * np.maximum(diag_s.mean(axis=1), 1e-2)
    eps_g = eps_reg * np.ones(four)
    s_reg = s + eps_s[:, None, None] * eye_m
    g_reg = g + eps_g[:, None, None] * eye_m

    # Probe the affine map on (a, C): batch 0 is the zero probe (constant
    # part), batches 1..n_small are unit vectors (linear part columns).
    nb = n_small + 1
    a_b = np.zeros((nb, m), dtype=complex)
    c_b = np.zeros((nb, m, m), dtype=complex)
    for pidx in range(n_small):
        if pidx < m:
            a_b[pidx + 1, pidx] = 1.0
        else:
            c_b[pidx + 1, (pidx - m) // m, (pidx - m) % m] = 1.0

    ca = np.conj(a_amp)
    t_b = (ca[:, None, :, None] * g[:, None, :, :] * a_b[None, :, None, :]
           + s[:, None, :, :] * c_b[None, :, :, :])
    x_b = p[:, None, :, :] - np.einsum("jmn,jbpn->jbmp", z, t_b)
    c_new = np.linalg.solve(s_reg[:, None], x_b.transpose(0, 1, 3, 2)).transpose(0, 1, 3, 2)
    rhs_a = r_a[:, None, :] - np.einsum("jmn,jn,jbmn->jbm", g, a_amp, c_b)
    a_new = np.linalg.solve(g_reg[:, None], rhs_a[..., None])[..., 0]

    out_b = np.concatenate([a_new, c_new.reshape(four, nb, m * m)], axis=2)
    const = out_b[:, 0, :]
    lin = (out_b[:, 1:, :] - const[:, None, :]).transpose(0, 2, 1)
    sys_mat = np.eye(n_small)[None] - lin
    try:
        x = np.linalg.solve(sys_mat, const[..., None])[..., 0]
    except np.linalg.LinAlgError:
        x = np.stack([np.linalg.lstsq(sys_mat[j], const[j], rcond=None)[0]
                      for j in range(four)])

    a_out = x[:, :m]
    c_out = x[:, m:].reshape(four, m, m)
    t_mat = ca[:, :, None] * g * a_out[:, None, :] + s * c_out
    v = np.linalg.solve(s_reg, rho - t_mat @ f)

    # residual of the unregularized equations
    c_true = np.einsum("jmk,jnk->jmn", np.conj(f), v)
    res_a = (np.einsum("jmn,jn->jm", g, a_out)
             + np.einsum("jmn,jn,jmn->jm", g, a_amp, c_true) - r_a)
    t_true = ca[:, :, None] * g * a_out[:, None, :] + s * c_true
    res_f = np.einsum("jmn,jnq->jmq", s, v) + t_true @ f - rho
    num = np.sqrt(np.sum(np.abs(res_a) ** 2, axis=1)
                  + np.sum(np.abs(res_f) ** 2, axis=(1, 2)))
    den = np.sqrt(np.sum(np.abs(r_a) ** 2, axis=1)
                  + np.sum(np.abs(rho) ** 2, axis=(1, 2)))
    rel = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
    return a_out, v, rel


def _derivatives_reduced(a_amp, f, ctx, t, eps_reg):
    o, g, uh, u, r_a, rho = _rhs_pieces(a_amp, f, ctx, t)
    eps = eps_reg
    while True:
        a, v, rel = _reduced_solve(a_amp, f, g, r_a, rho, eps)
        if np.all(rel <= EOM_RESIDUAL_TOL):
            break
        eps *= 10.0
        if eps > EPS_ESCALATION_CAP:
            raise IntegrationError(
                f"equation-of-motion residual {np.max(rel):.3e} exceeds "
                f"{EOM_RESIDUAL_TOL} after regularized solve", t=t)
    aux = {"o": o, "g": g, "uh": uh, "u": u}
    return a, v, aux


def _derivatives_dense(state_a, state_f, ctx, t, eps_reg):
    st = MultiD1State(state_a, state_f, t)
    blocks = assemble_eom(st, ctx, t, epsilon=eps_reg)
    try:
        der = solve_eom(blocks, st)
    except IntegrationError as err:
        raise IntegrationError(str(err), t=t) from None
    o = cross_overlaps(state_f)
    g = np.einsum("jjmn->jmn", o)
    drv = _drive(ctx, t)
    uh = np.einsum("jmk,hk->hjm", np.conj(state_f), drv)
    u = np.einsum("hj,hjm->jm", ctx.sx, uh)
    return der.a, der.f_dot, {"o": o, "g": g, "uh": uh, "u": u}


def compute_derivatives(state: MultiD1State, ctx: EomContext,
                        t: Optional[float] = None, eps_reg: float = 1e-10,
                        solver: str = "auto") -> Derivatives:
    """Public entry point: assemble and solve at (state, t)."""
    if t is None:
        t = state.t
    if solver == "dense":
        a, v, _ = _derivatives_dense(state.a, state.f, ctx, t, eps_reg)
    else:
        a, v, _ = _derivatives_reduced(state.a, state.f, ctx, t, eps_reg)
    a_dot = a + state.a * np.einsum("jmk,jmk->jm", v, np.conj(state.f)).real
    return Derivatives(a=a, f_dot=v, a_dot=a_dot)


# ---------------------------------------------------------------------------
# observables along the trajectory

def _mean_h_squared(a_amp, f, ctx, t, o, g, uh):
    """<Htilde^2(t)> over the multi-D1 state (interaction picture)."""
    ca = np.conj(a_amp)
    w = uh[:, :, None, :, None] + np.conj(uh)[:, None, :, None, :]
    wd = np.einsum("hjjmn->hjmn", w)
    t1 = np.einsum("jm,jl,ln,jlmn->", ca, ctx.sys.h_s_sq, a_amp, o)
    t2 = np.einsum("jm,hjl,ln,hjlmn,jlmn->", ca, ctx.acomm, a_amp, w, o)
    g_quad = np.einsum("jm,jn,jmn->", ca, a_amp, g)
    t3 = (np.einsum("jm,jn,hjmn,jmn->", ca, a_amp, wd * wd, g)
          + 2.0 * ctx.sum_lam2_4 * g_quad)
    sxx_quad = np.einsum("jm,jn,j,jmn->", ca, a_amp, ctx.sxx, g)
    t4 = 2.0 * (np.einsum("jm,jn,j,jmn,jmn->", ca, a_amp, ctx.sxx,
                          wd[0] * wd[1], g)
                + ctx.sum_lam2_cos_4 * sxx_quad)
    return (t1 + t2 + t3 + t4).real


def _ddot_norm(a_amp, f, a, v, g):
    """<Ddot|Ddot> from the solved derivatives."""
    ca, caa = np.conj(a), np.conj(a_amp)
    cfv = np.einsum("jmk,jnk->jmn", np.conj(f), v)
    cvv = np.einsum("jmk,jnk->jmn", np.conj(v), v)
    cfv_t = np.conj(cfv.transpose(0, 2, 1))
    e = (ca[:, :, None] * a[:, None, :]
         + ca[:, :, None] * a_amp[:, None, :] * cfv
         + caa[:, :, None] * a[:, None, :] * cfv_t
         + caa[:, :, None] * a_amp[:, None, :] * (cvv + cfv * cfv_t))
    return float(np.einsum("jmn,jmn->", e, g).real)


def deviation_norm(state: MultiD1State, ctx: EomContext, der: Derivatives,
                   t: Optional[float] = None) -> float:
    """Scaled squared norm of the Schroedinger residual, sigma^2(t)."""
    if t is None:
        t = state.t
    o = cross_overlaps(state.f)
    g = np.einsum("jjmn->jmn", o)
    drv = _drive(ctx, t)
    uh = np.einsum("jmk,hk->hjm", np.conj(state.f), drv)
    return _sigma2_from_parts(state.a, state.f, ctx, t, der.a, der.f_dot, o, g, uh)


def _sigma2_from_parts(a_amp, f, ctx, t, a, v, o, g, uh):
    h2 = _mean_h_squared(a_amp, f, ctx, t, o, g, uh)
    dd = _ddot_norm(a_amp, f, a, v, g)
    sigma2 = (h2 - dd) / ctx.sys.omega0 ** 2
    if sigma2 < -1e-8:
        warnings.warn(f"deviation norm came out negative: {sigma2:.3e}",
                      NumericalDiagnostic)
    return max(sigma2, 0.0)


def lab_frame_energy(a_amp, f, ctx, o, g, uh, n_k) -> float:
    """<H_S> + <Htilde_I(t)> + sum_k omega_k N_k (conserved by the dynamics)."""
    ca = np.conj(a_amp)
    hs_exp = np.einsum("jm,jl,ln,jlmn->", ca, ctx.sys.h_s, a_amp, o).real
    u = np.einsum("hj,hjm->jm", ctx.sx, uh)
    w = u[:, :, None] + np.conj(u)[:, None, :]
    hint = np.einsum("jm,jn,jmn,jmn->", ca, a_amp, w, g).real
    return float(hs_exp + hint + np.sum(ctx.omega * n_k))


def _record(a_amp, f, ctx, t, a, v, aux) -> ObservableRecord:
    o, g, uh = aux["o"], aux["g"], aux["uh"]
    ca = np.conj(a_amp)
    norm = float(np.einsum("jm,jmn,jn->", ca, g, a_amp).real)
    p_e = np.empty(2)
    for q, flip in enumerate((FLIP_QUBIT1, FLIP_QUBIT2)):
        val = 0.0 + 0.0j
        for l in range(4):
            val += np.einsum("m,mn,n->", ca[flip[l]], o[flip[l], l], a_amp[l])
        p_e[q] = 0.5 * (1.0 + val.real)
    n_k = np.einsum("jm,jmk,jmn,jnk,jn->k", ca, np.conj(f), g, f, a_amp).real
    sigma2 = _sigma2_from_parts(a_amp, f, ctx, t, a, v, o, g, uh)
    energy = lab_frame_energy(a_amp, f, ctx, o, g, uh, n_k)
    return ObservableRecord(t=t, p_e=p_e, n_k=n_k, norm=norm,
                            sigma2=sigma2, energy=energy)


def propagate(state: MultiD1State, ctx: EomContext, config: IntegratorConfig):
    """Fixed-step RK4 propagation; returns (records, final_state).

    Observables (including sigma^2 and the lab-frame energy) are sampled
    every `output_stride` steps and at the final time.  Aborts with
    IntegrationError if the norm drifts beyond 1e-3 or a parameter turns
    non-finite.
    """
    solver = config.solver
    if solver == "auto":
        solver = "reduced"
    deriv = _derivatives_dense if solver == "dense" else _derivatives_reduced

    a_amp = state.a.copy()
    f = state.f.copy()
    t0 = state.t
    n_steps = int(round(config.t_final / config.dt))
    dt = config.dt
    records = []

    def check(a_arr, f_arr, t, norm=None):
        if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(f_arr))):
            raise IntegrationError("non-finite variational parameter", t=t)
        if norm is not None and abs(norm - 1.0) > NORM_DRIFT_ABORT:
            raise IntegrationError(
                f"norm drifted to {norm!r}", t=t)

    def full_deriv(a_arr, f_arr, t):
        a, v, aux = deriv(a_arr, f_arr, ctx, t, config.epsilon_reg)
        a_dot = a + a_arr * np.einsum("jmk,jmk->jm", v, np.conj(f_arr)).real
        return a, v, a_dot, aux

    for step in range(n_steps):
        t = t0 + step * dt
        a1, v1, ad1, aux1 = full_deriv(a_amp, f, t)
        if step % config.output_stride == 0:
            rec = _record(a_amp, f, ctx, t, a1, v1, aux1)
            check(a_amp, f, t, rec.norm)
            records.append(rec)
        a2, v2, ad2, _ = full_deriv(a_amp + 0.5 * dt * ad1, f + 0.5 * dt * v1, t + 0.5 * dt)
        a3, v3, ad3, _ = full_deriv(a_amp + 0.5 * dt * ad2, f + 0.5 * dt * v2, t + 0.5 * dt)
        a4, v4, ad4, _ = full_deriv(a_amp + dt * ad3, f + dt * v3, t + dt)
        a_amp = a_amp + (dt / 6.0) * (ad1 + 2.0 * ad2 + 2.0 * ad3 + ad4)
        f = f + (dt / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        check(a_amp, f, t + dt)

    t_end = t0 + n_steps * dt
    a1, v1, _, aux1 = full_deriv(a_amp, f, t_end)
    rec = _record(a_amp, f, ctx, t_end, a1, v1, aux1)
    check(a_amp, f, t_end, rec.norm)
    records.append(rec)
    return records, MultiD1State(a_amp, f, t_end)
