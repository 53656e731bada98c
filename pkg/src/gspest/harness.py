"""Monte Carlo harness: configured experiments, averaged runs, deviations.

An experiment fixes the graph, band, sampling set, noise law and estimator
parameters, then averages the per-iteration squared error over independent
runs. Averaging happens in linear units; decibels are taken of the average.
Every random ingredient derives from one master seed, so identical configs
reproduce bit-identical results no matter how runs are scheduled.

Seed layout: the covariance draw uses child key (1,), random sampling child
key (2,), and run r the child key (3, r) of the master seed.
"""

import hashlib
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import SignalModel, lms_msd_trajectory, rls_msd_trajectory
from .graph import (BandBasis, Graph, StationTable, band_select, build_knn_graph,
                    gft_basis, laplacian, project_bandlimited)
from .noise import build_cw, noiseless, scenario_coefficients
from .sampling import (SamplingSet, check_recoverability, greedy_max_lambda_min,
                       random_sampling, stable_step_range)
from .theory import (TheoryCurve, lms_theory_exact, lms_theory_paper,
                     rls_theory_exact, rls_theory_paper)

_COV_KEY = 1
_SAMPLING_KEY = 2
_RUN_KEY = 3

DEFAULT_BURN_IN = 0.5


class ConfigError(ValueError):
    """Invalid experiment configuration; carries every failure at once."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(f"- {e}" for e in self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete recipe for one experiment."""

    algorithm: str  # "lms" | "rls"
    param: float  # step size (lms) or forgetting factor (rls)
    k: int  # neighbours per station
    bandwidth: int  # band width f
    sample_size: int  # observed nodes
    scenario: object  # "i" | "ii" | "iii" or explicit (n_a, n_b)
    iterations: int
    runs: int
    master_seed: int
    sampling_strategy: str = "greedy"  # "greedy" | "random"
    noise_protocol: str = "iid"  # "iid" | "frozen"
    workers: int = 1
    stations_csv: str | None = None
    n_stations: int = 299
    stations_seed: int = 2018
    store_per_run: bool = True

    def scenario_pair(self) -> tuple[float, float]:
        return scenario_coefficients(self.scenario)

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        return replace(self, **kwargs)


def validate_config(config: ExperimentConfig, n_nodes: int | None = None) -> None:
    """Raise ConfigError listing every problem with the configuration."""
    errors: list[str] = []
    if config.algorithm not in ("lms", "rls"):
        errors.append(f"algorithm must be 'lms' or 'rls', got {config.algorithm!r}")
    if not isinstance(config.param, (int, float)) or not math.isfinite(config.param):
        errors.append(f"param must be a finite number, got {config.param!r}")
    elif config.algorithm == "rls" and not 0 < config.param <= 1:
        errors.append(f"forgetting factor must satisfy 0 < param <= 1, got {config.param}")
    elif config.algorithm == "lms" and config.param <= 0:
        errors.append(f"step size must be positive, got {config.param}")
    for name in ("k", "bandwidth", "sample_size", "iterations", "runs", "workers"):
        value = getattr(config, name)
        if not isinstance(value, int) or value < 1:
            errors.append(f"{name} must be a positive integer, got {value!r}")
    if isinstance(config.sample_size, int) and isinstance(config.bandwidth, int):
        if config.sample_size < config.bandwidth:
            errors.append(
                f"sample_size ({config.sample_size}) must be at least bandwidth ({config.bandwidth})")
    if not isinstance(config.master_seed, int) or config.master_seed < 0:
        errors.append(f"master_seed must be a nonnegative integer, got {config.master_seed!r}")
    if not isinstance(config.stations_seed, int) or config.stations_seed < 0:
        errors.append(f"stations_seed must be a nonnegative integer, got {config.stations_seed!r}")
    try:
        n_a, n_b = scenario_coefficients(config.scenario)
        if n_a < 0 or n_b < 0:
            errors.append("scenario coefficients must be nonnegative")
        elif n_a == 0 and n_b == 0 and config.algorithm == "rls":
            errors.append("zero-noise scenario is incompatible with rls (needs invertible covariance)")
    except (ValueError, TypeError) as exc:
        errors.append(f"scenario: {exc}")
    if config.sampling_strategy not in ("greedy", "random"):
        errors.append(f"sampling_strategy must be 'greedy' or 'random', got {config.sampling_strategy!r}")
    if config.noise_protocol not in ("iid", "frozen"):
        errors.append(f"noise_protocol must be 'iid' or 'frozen', got {config.noise_protocol!r}")
    if config.stations_csv is None and (not isinstance(config.n_stations, int) or config.n_stations < 2):
        errors.append(f"n_stations must be an integer >= 2, got {config.n_stations!r}")
    if not isinstance(config.store_per_run, bool):
        errors.append(f"store_per_run must be a boolean, got {config.store_per_run!r}")
    if n_nodes is not None and isinstance(config.k, int) and isinstance(config.bandwidth, int):
        if config.k > n_nodes - 1:
            errors.append(f"k ({config.k}) must be at most n-1 ({n_nodes - 1})")
        if config.bandwidth > n_nodes:
            errors.append(f"bandwidth ({config.bandwidth}) must be at most n ({n_nodes})")
        if isinstance(config.sample_size, int) and config.sample_size > n_nodes:
            errors.append(f"sample_size ({config.sample_size}) must be at most n ({n_nodes})")
    if errors:
        raise ConfigError(errors)


def covariance_seed(master_seed: int) -> int:
    seq = np.random.SeedSequence(master_seed, spawn_key=(_COV_KEY,))
    return int(seq.generate_state(1, np.uint64)[0])


def sampling_seed(master_seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(_SAMPLING_KEY,))


def run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(_RUN_KEY, run_index)))


def synthetic_stations(n: int, seed: int) -> StationTable:
    """Stations scattered over a continental box with a smooth field.

    Coordinates are uniform over a South-American latitude/longitude box;
    the value at each station is a sum of low-frequency spatial harmonics
    plus a north-south gradient, so it is close to bandlimited on the
    nearest-neighbour graph.
    """
    if n < 2:
        raise ValueError(f"need at least 2 stations, got {n}")
    rng = np.random.default_rng(seed)
    lat = rng.uniform(-33.0, -1.0, n)
    lon = rng.uniform(-73.0, -35.0, n)
    u = (lat + 33.0) / 32.0
    v = (lon + 73.0) / 38.0
    signal = (
        24.0
        + 4.0 * np.sin(2 * np.pi * u)
        + 2.5 * np.cos(2 * np.pi * v)
        + 1.5 * np.sin(2 * np.pi * (u + v))
        + 3.0 * (u - 0.5)
    )
    ids = tuple(f"stn{i:04d}" for i in range(n))
    return StationTable(ids=ids, coords=np.column_stack([lat, lon]), signal=signal)


@dataclass(frozen=True)
class Experiment:
    """Deterministic part of a run: everything except the noise draws."""

    config: ExperimentConfig
    stations: StationTable
    graph: Graph
    band: BandBasis
    sampling: SamplingSet
    model: SignalModel


def prepare_experiment(config: ExperimentConfig, stations: StationTable | None = None,
                       basis=None) -> Experiment:
    """Build graph, band, sampling set, noise law and target signal.

    ``stations`` defaults to the synthetic table; ``basis`` may carry a
    cached eigendecomposition of the graph Laplacian.
    """
    validate_config(config)
    if stations is None:
        if config.stations_csv is not None:
            raise ValueError("stations_csv is set; load the table and pass it in")
        stations = synthetic_stations(config.n_stations, config.stations_seed)
    validate_config(config, n_nodes=stations.n)
    graph = build_knn_graph(stations, config.k)
    if basis is None:
        basis = gft_basis(laplacian(graph))
    elif basis.n != stations.n:
        raise ValueError("cached basis does not match the station table")
    band = band_select(basis, config.bandwidth)
    if config.sampling_strategy == "greedy":
        sampling = greedy_max_lambda_min(band, config.sample_size)
    else:
        sampling = random_sampling(band, config.sample_size, sampling_seed(config.master_seed))
    ok, lam_min = check_recoverability(band, sampling)
    if not ok:
        raise ValueError(f"sampling set not recoverable (lambda_min={lam_min:.3e})")
    n_a, n_b = config.scenario_pair()
    if n_a == 0 and n_b == 0:
        noise = noiseless(stations.n)
    else:
        noise = build_cw(n_a, n_b, stations.n, covariance_seed(config.master_seed))
    s_f, x_o = project_bandlimited(band, stations.signal)
    model = SignalModel(band=band, s_f=s_f, x_o=x_o, sampling=sampling, noise=noise)
    return Experiment(config=config, stations=stations, graph=graph, band=band,
                      sampling=sampling, model=model)


@dataclass(frozen=True)
class DeviationStats:
    """Tail agreement between the empirical curve and each theory mode."""

    burn_in_fraction: float
    n_tail: int
    paper_max_abs_db: float
    paper_mean_abs_db: float
    exact_max_abs_db: float
    exact_mean_abs_db: float
    tail_se_db: float  # average dB uncertainty of the empirical tail, delta method
    exact_tail_z: float  # |tail mean error vs exact theory| / its standard error


@dataclass
class RunResult:
    """Averaged Monte Carlo output plus both theory curves."""

    config: ExperimentConfig
    t: np.ndarray  # iteration index, starts at 1
    msd_mean: np.ndarray  # linear average over runs
    msd_mean_db: np.ndarray
    msd_se: np.ndarray  # per-iteration standard error of the mean, linear
    theory_paper: TheoryCurve
    theory_exact: TheoryCurve
    theory_paper_db: np.ndarray
    theory_exact_db: np.ndarray
    deviation: DeviationStats
    metadata: dict = field(default_factory=dict)
    per_run: np.ndarray | None = None


def _to_db(values: np.ndarray) -> np.ndarray:
    """Decibel transform with explicit edge handling.

    Zero maps to -inf.  Negative values (the literal transient expression can
    dip below zero mid-transient because its cross term is not matched to its
    quadratic term) have no decibel representation and map to NaN.
    """
    v = np.asarray(values, dtype=float)
    out = np.full(v.shape, np.nan)
    out[v == 0.0] = -np.inf
    pos = v > 0.0
    out[pos] = 10.0 * np.log10(v[pos])
    return out


def compare(result: RunResult, burn_in_fraction: float = DEFAULT_BURN_IN) -> DeviationStats:
    """Tail deviation report; the tail starts after the burn-in fraction."""
    if not 0 <= burn_in_fraction < 1:
        raise ValueError(f"burn-in fraction must lie in [0, 1), got {burn_in_fraction}")
    t_count = result.t.shape[0]
    start = int(math.floor(burn_in_fraction * t_count))
    tail = slice(start, t_count)
    n_tail = t_count - start
    emp_db = result.msd_mean_db[tail]
    paper_dev = np.abs(emp_db - result.theory_paper_db[tail])
    exact_dev = np.abs(emp_db - result.theory_exact_db[tail])
    mean_lin = result.msd_mean[tail]
    se_lin = result.msd_se[tail]
    with np.errstate(divide="ignore", invalid="ignore"):
        se_db = (10.0 / np.log(10.0)) * se_lin / mean_lin
    tail_se_db = float(np.mean(se_db)) if np.all(np.isfinite(se_db)) else float("inf")
    if result.per_run is not None and result.per_run.shape[0] > 1:
        run_tail_means = result.per_run[:, tail].mean(axis=1)
        se_tail = float(run_tail_means.std(ddof=1) / math.sqrt(run_tail_means.shape[0]))
        gap = abs(float(run_tail_means.mean()) - float(np.mean(result.theory_exact.values[tail])))
        exact_tail_z = gap / se_tail if se_tail > 0 else (0.0 if gap == 0 else float("inf"))
    else:
        # no per-run curves kept: bound the tail-mean error with per-t errors
        gap = abs(float(np.mean(mean_lin)) - float(np.mean(result.theory_exact.values[tail])))
        bound = float(np.mean(se_lin))
        exact_tail_z = gap / bound if bound > 0 else (0.0 if gap == 0 else float("inf"))
    return DeviationStats(
        burn_in_fraction=float(burn_in_fraction),
        n_tail=n_tail,
        paper_max_abs_db=float(np.max(paper_dev)),
        paper_mean_abs_db=float(np.mean(paper_dev)),
        exact_max_abs_db=float(np.max(exact_dev)),
        exact_mean_abs_db=float(np.mean(exact_dev)),
        tail_se_db=tail_se_db,
        exact_tail_z=exact_tail_z,
    )


def run_experiment(config: ExperimentConfig, stations: StationTable | None = None,
                   basis=None) -> RunResult:
    """Run the full pipeline: prepare, simulate R runs, average, compare.

    Per-run noise comes from child seeds of (master_seed, run index), so the
    result is bit-identical for a given config regardless of the worker
    count; runs are reduced in ascending index order.
    """
    exp = prepare_experiment(config, stations, basis)
    model, cfg = exp.model, exp.config
    t_count, n_runs = cfg.iterations, cfg.runs
    frozen = cfg.noise_protocol == "frozen"
    if cfg.algorithm == "lms":
        theory_paper = lms_theory_paper(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                        cfg.param, t_count)
        theory_exact = lms_theory_exact(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                        cfg.param, t_count)

        def one_run(r: int) -> np.ndarray:
            return lms_msd_trajectory(model, cfg.param, t_count, run_rng(cfg.master_seed, r),
                                      frozen_noise=frozen)
    else:
        theory_paper = rls_theory_paper(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                        cfg.param, t_count)
        theory_exact = rls_theory_exact(exp.band, exp.sampling, model.s_f, model.noise.c_w,
                                        cfg.param, t_count)

        def one_run(r: int) -> np.ndarray:
            return rls_msd_trajectory(model, cfg.param, t_count, run_rng(cfg.master_seed, r),
                                      frozen_noise=frozen)

    per_run = np.empty((n_runs, t_count))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            for r, row in enumerate(pool.map(one_run, range(n_runs))):
                per_run[r] = row
    else:
        for r in range(n_runs):
            per_run[r] = one_run(r)
    msd_mean = per_run.mean(axis=0)
    if n_runs > 1:
        msd_se = per_run.std(axis=0, ddof=1) / math.sqrt(n_runs)
    else:
        msd_se = np.zeros(t_count)
    ok, lam_min = check_recoverability(exp.band, exp.sampling)
    metadata = {
        "scenario": cfg.scenario if isinstance(cfg.scenario, str) else list(cfg.scenario_pair()),
        "scenario_coefficients": list(cfg.scenario_pair()),
        "sampling_indices": list(exp.sampling.indices),
        "lambda_min": lam_min,
        "n_stations": exp.stations.n,
        "n_edges": exp.graph.n_edges,
        "signal_energy": float(model.s_f @ model.s_f),
        "cw_digest": hashlib.sha256(np.ascontiguousarray(model.noise.c_w).tobytes()).hexdigest(),
    }
    if cfg.algorithm == "lms":
        mu_max = stable_step_range(exp.band, exp.sampling)[1]
        metadata["mu_max"] = mu_max
        metadata["stable"] = bool(cfg.param < mu_max)
        if cfg.param >= mu_max:
            # Divergence studies are legitimate, so an unstable step is
            # flagged rather than rejected.
            warnings.warn(
                f"step size {cfg.param} is at or above the stability limit "
                f"{mu_max:.6g}; the mean trajectory will diverge",
                RuntimeWarning,
                stacklevel=2,
            )
    result = RunResult(
        config=cfg,
        t=np.arange(1, t_count + 1),
        msd_mean=msd_mean,
        msd_mean_db=_to_db(msd_mean),
        msd_se=msd_se,
        theory_paper=theory_paper,
        theory_exact=theory_exact,
        theory_paper_db=_to_db(theory_paper.values),
        theory_exact_db=_to_db(theory_exact.values),
        deviation=None,  # filled below
        metadata=metadata,
        per_run=per_run,
    )
    result.deviation = compare(result, DEFAULT_BURN_IN)
    if not cfg.store_per_run:
        result.per_run = None
    return result
