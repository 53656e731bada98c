"""Per-node observation noise with a fixed diagonal covariance.

The covariance diagonal is assembled once per experiment from two
coefficients: a random part (n_a times the absolute value of a standard
normal draw per node, kept nonnegative by construction) and a uniform part
(n_b on every node). Individual noise vectors are then zero-mean Gaussian
with that fixed diagonal covariance.
"""

from dataclasses import dataclass

import numpy as np

# Named variance profiles: (n_a, n_b)
SCENARIOS = {
    "i": (0.012, 0.0),
    "ii": (0.05, 0.0),
    "iii": (0.05, 0.05),
}


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal noise covariance c_w plus the recipe that produced it."""

    c_w: np.ndarray
    n_a: float
    n_b: float
    seed: int

    def __post_init__(self):
        c_w = np.asarray(self.c_w, dtype=float)
        c_w.setflags(write=False)
        object.__setattr__(self, "c_w", c_w)
        if c_w.ndim != 1 or c_w.shape[0] < 1:
            raise ValueError("c_w must be a non-empty vector")
        if not np.isfinite(c_w).all() or np.any(c_w < 0):
            raise ValueError("variances must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.c_w.shape[0]

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.c_w == 0))


def build_cw(n_a: float, n_b: float, n: int, seed: int) -> NoiseModel:
    """Draw the covariance diagonal c_w = n_a * |a| + n_b * 1, a ~ N(0, I).

    The draw happens once; the same seed always yields the same covariance.
    Coefficients must be nonnegative and not both zero (an all-zero
    covariance breaks estimators that weight by its inverse; use
    ``noiseless`` for deliberate noise-free studies).
    """
    if n_a < 0 or n_b < 0:
        raise ValueError("noise coefficients must be nonnegative")
    if n_a == 0 and n_b == 0:
        raise ValueError("noise coefficients must not both be zero")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(n)
    c_w = n_a * np.abs(a) + n_b * np.ones(n)
    return NoiseModel(c_w=c_w, n_a=float(n_a), n_b=float(n_b), seed=int(seed))


def noiseless(n: int) -> NoiseModel:
    """All-zero covariance for deterministic (noise-free) runs."""
    return NoiseModel(c_w=np.zeros(n), n_a=0.0, n_b=0.0, seed=0)


def scenario_coefficients(scenario) -> tuple[float, float]:
    """Resolve a named profile ('i', 'ii', 'iii') or an explicit (n_a, n_b) pair."""
    if isinstance(scenario, str):
        key = scenario.strip().lower()
        if key not in SCENARIOS:
            raise ValueError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
        return SCENARIOS[key]
    pair = tuple(float(v) for v in scenario)
    if len(pair) != 2:
        raise ValueError("scenario pair must have exactly two entries")
    return pair


def draw_noise(model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """One fresh noise vector w with E[w] = 0 and E[w w^T] = diag(c_w)."""
    return np.sqrt(model.c_w) * rng.standard_normal(model.n)
