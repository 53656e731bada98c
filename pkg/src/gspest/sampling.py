"""Sampling sets over graph nodes and recoverability of bandlimited signals.

A sampling set S keeps observations on a subset of nodes. Estimation in a
band of width f is well posed when the f x f Gram matrix of the selected
basis rows has smallest eigenvalue bounded away from zero; that eigenvalue
also fixes the stable range of adaptation step sizes.
"""

from dataclasses import dataclass

import numpy as np

from .graph import BandBasis

RECOVERABILITY_TOL = 1e-8

_BISECT_ITERS = 80


@dataclass(frozen=True)
class SamplingSet:
    """Sorted node indices observed out of n graph nodes."""

    indices: tuple[int, ...]
    n: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) == 0:
            raise ValueError("sampling set must not be empty")
        if len(set(idx)) != len(idx):
            raise ValueError("sampling indices must be unique")
        if list(idx) != sorted(idx):
            raise ValueError("sampling indices must be sorted ascending")
        if idx[0] < 0 or idx[-1] >= self.n:
            raise ValueError(f"indices must lie in [0, {self.n})")

    @property
    def size(self) -> int:
        return len(self.indices)

    def mask(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[list(self.indices)] = True
        return out

    def indicator(self) -> np.ndarray:
        return self.mask().astype(float)


def apply_sampling(sampling: SamplingSet, x: np.ndarray) -> np.ndarray:
    """Zero a node signal outside the sampling set. Idempotent."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sampling.n,):
        raise ValueError(f"signal shape {x.shape} != ({sampling.n},)")
    out = np.zeros_like(x)
    sel = list(sampling.indices)
    out[sel] = x[sel]
    return out


def sampled_gram(band: BandBasis, sampling: SamplingSet) -> np.ndarray:
    """Gram matrix of the selected basis rows (f x f, PSD, eigenvalues <= 1)."""
    if sampling.n != band.n:
        raise ValueError("sampling set and basis disagree on node count")
    rows = band.u_f[list(sampling.indices), :]
    gram = rows.T @ rows
    return (gram + gram.T) / 2


def check_recoverability(band: BandBasis, sampling: SamplingSet) -> tuple[bool, float]:
    """Whether the sampled Gram matrix is invertible in practice.

    Returns (ok, lambda_min) where ok requires lambda_min > 1e-8. Fewer
    samples than the bandwidth forces rank deficiency and ok = False.
    """
    vals = np.linalg.eigvalsh(sampled_gram(band, sampling))
    lam_min = float(vals[0])
    return lam_min > RECOVERABILITY_TOL, lam_min


def stable_step_range(band: BandBasis, sampling: SamplingSet) -> tuple[float, float]:
    """Open interval (0, mu_max) of LMS step sizes with a stable mean recursion.

    mu_max = 2 / lambda_max of the sampled Gram matrix. Raises on a
    non-recoverable sampling set.
    """
    ok, lam_min = check_recoverability(band, sampling)
    if not ok:
        raise ValueError(f"sampling set not recoverable (lambda_min={lam_min:.3e})")
    lam_max = float(np.linalg.eigvalsh(sampled_gram(band, sampling))[-1])
    return 0.0, 2.0 / lam_max


def _arrowhead_min_eig(d: np.ndarray, beta: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of [[W, b], [b^T, delta]] for many borders at once.

    d is the ascending spectrum of W; beta holds each border vector rotated
    into W's eigenbasis, one candidate per column. The smallest eigenvalue is
    the unique root of the secular function below d[0] (Cauchy interlacing),
    bracketed by a Gershgorin bound and found by bisection. The function is
    strictly decreasing there, so the bisection is safe.
    """
    k = beta.shape[1]
    beta_sq = beta * beta
    # Gershgorin lower bound in the rotated coordinates
    abs_beta = np.abs(beta)
    lo_rows = np.min(d[:, None] - abs_beta, axis=0)
    lo_corner = delta - abs_beta.sum(axis=0)
    lo = np.minimum(lo_rows, lo_corner) - 1e-12
    hi = np.full(k, d[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(_BISECT_ITERS):
            theta = 0.5 * (lo + hi)
            gap = d[:, None] - theta[None, :]
            fval = delta - theta - np.sum(beta_sq / gap, axis=0)
            above = fval > 0  # root is above theta
            lo = np.where(above, theta, lo)
            hi = np.where(above, hi, theta)
    return 0.5 * (lo + hi)


def _rank_one_min_eig(lam: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of G + u u^T for many update vectors at once.

    lam is the ascending spectrum of G, z the updates rotated into G's
    eigenbasis (one per column). For a positive rank-one update the smallest
    eigenvalue sits in [lam[0], lam[1]]; on that interval the secular
    function is strictly increasing, so bisection converges to it. A zero
    first component (or a repeated lowest eigenvalue) collapses the bracket
    onto lam[0], which is then exactly right.
    """
    k = z.shape[1]
    z_sq = z * z
    lo = np.full(k, lam[0])
    if lam.shape[0] > 1:
        hi = np.full(k, lam[1])
    else:
        hi = lam[0] + z_sq.sum(axis=0)  # 1x1 case: exact eigenvalue
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(_BISECT_ITERS):
            theta = 0.5 * (lo + hi)
            gap = lam[:, None] - theta[None, :]
            fval = 1.0 + np.sum(z_sq / gap, axis=0)
            below = fval < 0  # root is above theta
            lo = np.where(below, theta, lo)
            hi = np.where(below, hi, theta)
    return 0.5 * (lo + hi)


def greedy_max_lambda_min(band: BandBasis, m: int) -> SamplingSet:
    """Grow a sampling set node by node, maximizing the smallest eigenvalue.

    Each step adds the node whose addition maximizes the smallest eigenvalue
    of the sampled Gram matrix; exact ties resolve to the lower node index.
    While fewer than f nodes are selected that eigenvalue is zero for every
    candidate, so the selection maximizes the smallest eigenvalue restricted
    to the span of the chosen rows (the compact Gram of the selected rows),
    which is the same criterion once the set reaches full rank.

    Deterministic. Requires f <= m <= n.
    """
    n, f = band.n, band.f
    if not f <= m <= n:
        raise ValueError(f"sample count must satisfy {f} <= m <= {n}, got {m}")
    u = band.u_f
    row_sq = np.einsum("ij,ij->i", u, u)
    selected: list[int] = []
    cross = np.empty((0, n))  # cross[a, j] = <row selected[a], row j>
    full_gram: np.ndarray | None = None
    for _ in range(m):
        s = len(selected)
        if s == 0:
            scores = row_sq.copy()
        elif s < f:
            compact = cross[:, selected]
            compact = (compact + compact.T) / 2
            d, q = np.linalg.eigh(compact)
            scores = _arrowhead_min_eig(d, q.T @ cross, row_sq)
        else:
            if full_gram is None:
                rows = u[selected, :]
                full_gram = rows.T @ rows
                full_gram = (full_gram + full_gram.T) / 2
            lam, q = np.linalg.eigh(full_gram)
            scores = _rank_one_min_eig(lam, q.T @ u.T)
        scores[selected] = -np.inf
        j = int(np.argmax(scores))
        selected.append(j)
        cross = np.vstack([cross, (u @ u[j])[None, :]])
        if full_gram is not None:
            full_gram = full_gram + np.outer(u[j], u[j])
    return SamplingSet(indices=tuple(sorted(selected)), n=n)


def random_sampling(band: BandBasis, m: int, seed, max_attempts: int = 100) -> SamplingSet:
    """Uniform random sampling set, retried until recoverable.

    Draws size-m subsets without replacement and returns the first one whose
    Gram matrix passes the recoverability check; raises after max_attempts
    failures. Deterministic given the seed.
    """
    n, f = band.n, band.f
    if not f <= m <= n:
        raise ValueError(f"sample count must satisfy {f} <= m <= {n}, got {m}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        idx = np.sort(rng.choice(n, size=m, replace=False))
        cand = SamplingSet(indices=tuple(int(i) for i in idx), n=n)
        ok, _ = check_recoverability(band, cand)
        if ok:
            return cand
    raise RuntimeError(f"no recoverable sampling set found in {max_attempts} attempts")
