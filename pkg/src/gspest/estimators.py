"""Online estimators that track a bandlimited graph signal from noisy samples.

Both estimators keep a vector of band coefficients s_hat and refine it from
the sampled, noisy observation error. The LMS update takes a fixed step
along the projected error; the RLS update weights the error by the inverse
noise covariance through a fixed gain matrix and forgets the past
geometrically. Estimation error is tracked as the squared node-domain
deviation (MSD), which equals the squared coefficient deviation because the
band basis is orthonormal.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import BandBasis
from .noise import NoiseModel
from .sampling import SamplingSet, check_recoverability


@dataclass(frozen=True)
class SignalModel:
    """Everything fixed during a run: target signal, sampling set, noise law."""

    band: BandBasis
    s_f: np.ndarray  # true band coefficients, shape (f,)
    x_o: np.ndarray  # true bandlimited node signal, shape (n,)
    sampling: SamplingSet
    noise: NoiseModel

    def __post_init__(self):
        s_f = np.asarray(self.s_f, dtype=float)
        x_o = np.asarray(self.x_o, dtype=float)
        s_f.setflags(write=False)
        x_o.setflags(write=False)
        object.__setattr__(self, "s_f", s_f)
        object.__setattr__(self, "x_o", x_o)
        n, f = self.band.n, self.band.f
        if s_f.shape != (f,):
            raise ValueError(f"s_f shape {s_f.shape} != ({f},)")
        if x_o.shape != (n,):
            raise ValueError(f"x_o shape {x_o.shape} != ({n},)")
        if self.sampling.n != n:
            raise ValueError("sampling set node count does not match basis")
        if self.noise.n != n:
            raise ValueError("noise model node count does not match basis")
        resid = np.max(np.abs(self.band.u_f @ s_f - x_o))
        if resid > 1e-10 * (1.0 + float(np.max(np.abs(x_o)))):
            raise ValueError("x_o must be the band reconstruction of s_f")

    @property
    def n(self) -> int:
        return self.band.n

    @property
    def f(self) -> int:
        return self.band.f


@dataclass(frozen=True)
class LmsState:
    s_hat: np.ndarray
    mu: float
    t: int

    def __post_init__(self):
        s_hat = np.asarray(self.s_hat, dtype=float)
        s_hat.setflags(write=False)
        object.__setattr__(self, "s_hat", s_hat)
        if self.t < 1:
            raise ValueError("iteration counter starts at 1")


@dataclass(frozen=True)
class RlsState:
    s_hat: np.ndarray
    lam: float
    m_mat: np.ndarray
    t: int

    def __post_init__(self):
        s_hat = np.asarray(self.s_hat, dtype=float)
        m_mat = np.asarray(self.m_mat, dtype=float)
        s_hat.setflags(write=False)
        m_mat.setflags(write=False)
        object.__setattr__(self, "s_hat", s_hat)
        object.__setattr__(self, "m_mat", m_mat)
        if self.t < 1:
            raise ValueError("iteration counter starts at 1")
        if m_mat.shape != (s_hat.shape[0], s_hat.shape[0]):
            raise ValueError("gain matrix shape does not match state")
        if np.max(np.abs(m_mat - m_mat.T)) > 1e-10 * (1.0 + float(np.max(np.abs(m_mat)))):
            raise ValueError("gain matrix must be symmetric")
        np.linalg.cholesky(m_mat + m_mat.T)  # raises if not positive definite


def lms_init(model: SignalModel, mu: float) -> LmsState:
    """Zero initial estimate at t = 1. Any finite mu is allowed; stability is
    the caller's concern (divergence studies are legitimate)."""
    if not np.isfinite(mu):
        raise ValueError("step size must be finite")
    return LmsState(s_hat=np.zeros(model.f), mu=float(mu), t=1)


def rls_gain_matrix(band: BandBasis, sampling: SamplingSet, c_w: np.ndarray) -> np.ndarray:
    """Inverse of the noise-weighted sampled Gram matrix, obtained by solving.

    Requires a recoverable sampling set and strictly positive variances
    (the weighting divides by them).
    """
    c_w = np.asarray(c_w, dtype=float)
    if c_w.shape != (band.n,):
        raise ValueError(f"c_w shape {c_w.shape} != ({band.n},)")
    if np.any(c_w <= 0):
        raise ValueError("RLS weighting needs strictly positive noise variances")
    ok, lam_min = check_recoverability(band, sampling)
    if not ok:
        raise ValueError(f"sampling set not recoverable (lambda_min={lam_min:.3e})")
    sel = list(sampling.indices)
    rows = band.u_f[sel, :] / np.sqrt(c_w[sel])[:, None]
    m_inv = rows.T @ rows
    m_inv = (m_inv + m_inv.T) / 2
    m_mat = np.linalg.solve(m_inv, np.eye(band.f))
    return (m_mat + m_mat.T) / 2


def rls_init(model: SignalModel, lam: float) -> RlsState:
    """Zero initial estimate at t = 1 with the precomputed gain matrix.

    The forgetting factor must satisfy 0 < lam <= 1; values below 0.5 are
    accepted with a warning since they barely average the noise.
    """
    if not 0 < lam <= 1:
        raise ValueError(f"forgetting factor must satisfy 0 < lam <= 1, got {lam}")
    if lam < 0.5:
        warnings.warn(f"forgetting factor {lam} is unusually small", stacklevel=2)
    m_mat = rls_gain_matrix(model.band, model.sampling, model.noise.c_w)
    return RlsState(s_hat=np.zeros(model.f), lam=float(lam), m_mat=m_mat, t=1)


def error_signal(model: SignalModel, s_hat: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Observation error on the sampled nodes, zero elsewhere."""
    resid = model.x_o + w - model.band.u_f @ s_hat
    out = np.zeros(model.n)
    sel = list(model.sampling.indices)
    out[sel] = resid[sel]
    return out


def lms_step(state: LmsState, model: SignalModel, w: np.ndarray) -> LmsState:
    """One fixed-step update along the band projection of the error."""
    e = error_signal(model, state.s_hat, w)
    s_next = state.s_hat + state.mu * (model.band.u_f.T @ e)
    return LmsState(s_hat=s_next, mu=state.mu, t=state.t + 1)


def rls_step(state: RlsState, model: SignalModel, w: np.ndarray) -> RlsState:
    """One geometrically weighted update of the noise-whitened error."""
    e = error_signal(model, state.s_hat, w)
    g = model.band.u_f.T @ (e / model.noise.c_w)
    s_next = state.s_hat + (1.0 - state.lam) * (state.m_mat @ g)
    return RlsState(s_hat=s_next, lam=state.lam, m_mat=state.m_mat, t=state.t + 1)


def msd(model: SignalModel, s_hat: np.ndarray) -> float:
    """Squared node-domain deviation of the reconstruction from the target."""
    r = model.band.u_f @ np.asarray(s_hat, dtype=float) - model.x_o
    return float(r @ r)


def msd_db(value):
    """Map squared deviations to decibels; exact zero maps to -inf."""
    v = np.asarray(value, dtype=float)
    if np.any(v < 0):
        raise ValueError("squared deviation cannot be negative")
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(v)
    return float(out) if np.isscalar(value) or v.ndim == 0 else out


def _noise_block(model: SignalModel, rng: np.random.Generator, steps: int,
                 frozen_noise: bool) -> np.ndarray:
    """Noise for a whole run, rows in iteration order.

    Row t is the draw used by step t; with frozen noise one draw is reused
    for every step. Filling a block this way consumes the generator exactly
    like per-step draws, so stepwise and batched runs see identical noise.
    """
    sqrt_cw = np.sqrt(model.noise.c_w)
    if frozen_noise:
        w = sqrt_cw * rng.standard_normal(model.n)
        return np.broadcast_to(w, (steps, model.n))
    return rng.standard_normal((steps, model.n)) * sqrt_cw[None, :]


def lms_msd_trajectory(model: SignalModel, mu: float, n_iter: int,
                       rng: np.random.Generator, frozen_noise: bool = False) -> np.ndarray:
    """MSD curve of one LMS run, computed in band coordinates.

    Entry 0 is the error of the zero initial estimate at t = 1; each later
    entry follows one update with a fresh noise draw. Algebraically
    identical to iterating lms_step and recording msd.
    """
    if n_iter < 1:
        raise ValueError("need at least one iteration")
    sel = list(model.sampling.indices)
    u_s = model.band.u_f[sel, :]
    a_mat = np.eye(model.f) - mu * (u_s.T @ u_s)
    noise = _noise_block(model, rng, n_iter - 1, frozen_noise)
    inject = mu * (noise[:, sel] @ u_s)
    delta = -model.s_f.copy()
    vals = np.empty(n_iter)
    vals[0] = delta @ delta
    for t in range(1, n_iter):
        delta = a_mat @ delta + inject[t - 1]
        vals[t] = delta @ delta
    return vals


def rls_msd_trajectory(model: SignalModel, lam: float, n_iter: int,
                       rng: np.random.Generator, frozen_noise: bool = False) -> np.ndarray:
    """MSD curve of one RLS run, computed in band coordinates.

    Same conventions as the LMS trajectory; algebraically identical to
    iterating rls_step and recording msd.
    """
    if n_iter < 1:
        raise ValueError("need at least one iteration")
    if not 0 < lam <= 1:
        raise ValueError(f"forgetting factor must satisfy 0 < lam <= 1, got {lam}")
    m_mat = rls_gain_matrix(model.band, model.sampling, model.noise.c_w)
    sel = list(model.sampling.indices)
    gain = (1.0 - lam) * ((model.band.u_f[sel, :] / model.noise.c_w[sel][:, None]) @ m_mat)
    noise = _noise_block(model, rng, n_iter - 1, frozen_noise)
    inject = noise[:, sel] @ gain
    delta = -model.s_f.copy()
    vals = np.empty(n_iter)
    vals[0] = delta @ delta
    for t in range(1, n_iter):
        delta = lam * delta + inject[t - 1]
        vals[t] = delta @ delta
    return vals
