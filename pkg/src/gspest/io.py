"""File interfaces: station tables, configs, result curves, manifests, caches.

All numeric CSV output uses shortest round-trip float formatting, so readers
recover the exact binary values and byte-level comparison of two runs is
meaningful.
"""

import csv
import dataclasses
import hashlib
import json
import math
import os

import numpy as np

from ._version import __version__
from .graph import GftBasis, Graph, StationTable
from .harness import ConfigError, ExperimentConfig, RunResult, validate_config

STATION_HEADER = ("id", "lat", "lon", "value")
RESULTS_HEADER = ("t", "msd_emp_db", "msd_theory_paper_db", "msd_theory_exact_db")
THEORY_HEADER = ("t", "msd_theory_paper_db", "msd_theory_exact_db")

_REQUIRED_CONFIG_KEYS = (
    "algorithm", "param", "k", "bandwidth", "sample_size", "scenario",
    "iterations", "runs", "master_seed",
)


class DataError(ValueError):
    """Malformed input data; carries every failure at once."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid data:\n" + "\n".join(f"- {e}" for e in self.errors))


def _fmt(value: float) -> str:
    return repr(float(value))


def read_station_csv(path) -> StationTable:
    """Load a station table; header must be exactly id,lat,lon,value.

    Every malformed row is reported with its line number in one error.
    """
    errors: list[str] = []
    ids: list[str] = []
    coords: list[tuple[float, float]] = []
    values: list[float] = []
    seen: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError([f"{path}: empty file, expected header {','.join(STATION_HEADER)}"])
        if tuple(h.strip().lower() for h in header) != STATION_HEADER:
            raise DataError(
                [f"{path}: header must be {','.join(STATION_HEADER)}, got {','.join(header)}"])
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                errors.append(f"line {line_no}: expected 4 fields, got {len(row)}")
                continue
            sid = row[0].strip()
            if not sid:
                errors.append(f"line {line_no}: empty station id")
                continue
            if sid in seen:
                errors.append(f"line {line_no}: duplicate station id {sid!r} (first at line {seen[sid]})")
                continue
            try:
                lat, lon, value = (float(row[i]) for i in (1, 2, 3))
            except ValueError:
                errors.append(f"line {line_no}: non-numeric lat/lon/value")
                continue
            if not all(map(math.isfinite, (lat, lon, value))):
                errors.append(f"line {line_no}: non-finite lat/lon/value")
                continue
            seen[sid] = line_no
            ids.append(sid)
            coords.append((lat, lon))
            values.append(value)
    if errors:
        raise DataError([f"{path}: {e}" for e in errors])
    try:
        return StationTable(ids=tuple(ids), coords=np.array(coords, dtype=float),
                            signal=np.array(values, dtype=float))
    except ValueError as exc:
        raise DataError([f"{path}: {exc}"]) from exc


def write_station_csv(path, stations: StationTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATION_HEADER)
        for i, sid in enumerate(stations.ids):
            writer.writerow([sid, _fmt(stations.coords[i, 0]), _fmt(stations.coords[i, 1]),
                             _fmt(stations.signal[i])])


def station_digest(stations: StationTable) -> str:
    """Content hash of a station table (ids, coordinates, values)."""
    h = hashlib.sha256()
    h.update("\x1f".join(stations.ids).encode("utf-8"))
    h.update(np.ascontiguousarray(stations.coords).tobytes())
    h.update(np.ascontiguousarray(stations.signal).tobytes())
    return h.hexdigest()


def array_digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(np.asarray(values, dtype=float)).tobytes()).hexdigest()


def parse_config(data: dict, source: str = "config") -> ExperimentConfig:
    """Build a validated ExperimentConfig from a flat JSON object.

    Unknown keys, missing keys, wrongly typed values and semantic problems
    are all collected and raised together.
    """
    if not isinstance(data, dict):
        raise ConfigError([f"{source}: top level must be a JSON object"])
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    errors = [f"{source}: unknown key {k!r}" for k in sorted(set(data) - known)]
    missing = [k for k in _REQUIRED_CONFIG_KEYS if k not in data]
    errors += [f"{source}: missing required key {k!r}" for k in missing]
    if errors:
        raise ConfigError(errors)
    kwargs = dict(data)
    if isinstance(kwargs.get("scenario"), list):
        kwargs["scenario"] = tuple(kwargs["scenario"])
    if isinstance(kwargs.get("param"), bool) or any(
            isinstance(kwargs.get(k), bool) for k in ("k", "bandwidth", "sample_size",
                                                      "iterations", "runs", "master_seed")):
        raise ConfigError([f"{source}: boolean given where a number is required"])
    if isinstance(kwargs.get("param"), int):
        kwargs["param"] = float(kwargs["param"])
    try:
        config = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc
    validate_config(config)
    return config


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError([f"{path}: not valid JSON ({exc})"]) from exc
    return parse_config(data, source=str(path))


def config_to_dict(config: ExperimentConfig) -> dict:
    out = dataclasses.asdict(config)
    if isinstance(out["scenario"], tuple):
        out["scenario"] = list(out["scenario"])
    return out


def write_results_csv(path, result: RunResult) -> None:
    """Empirical and theory curves, one row per iteration."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(RESULTS_HEADER) + "\n")
        for i in range(result.t.shape[0]):
            fh.write(f"{int(result.t[i])},{_fmt(result.msd_mean_db[i])},"
                     f"{_fmt(result.theory_paper_db[i])},{_fmt(result.theory_exact_db[i])}\n")


def write_theory_csv(path, t: np.ndarray, paper_db: np.ndarray, exact_db: np.ndarray) -> None:
    """Theory-only curves: the run schema minus the empirical column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(THEORY_HEADER) + "\n")
        for i in range(t.shape[0]):
            fh.write(f"{int(t[i])},{_fmt(paper_db[i])},{_fmt(exact_db[i])}\n")


def read_results_csv(path) -> dict[str, np.ndarray]:
    """Read a results CSV back into column arrays, validating the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise DataError([f"{path}: empty file"])
        if header != RESULTS_HEADER:
            raise DataError(
                [f"{path}: header must be {','.join(RESULTS_HEADER)}, got {','.join(header)}"])
        rows = [row for row in reader if row]
    errors = []
    parsed = []
    for offset, row in enumerate(rows):
        if len(row) != len(RESULTS_HEADER):
            errors.append(f"line {offset + 2}: expected {len(RESULTS_HEADER)} fields, got {len(row)}")
            continue
        try:
            parsed.append([float(c) for c in row])
        except ValueError:
            errors.append(f"line {offset + 2}: non-numeric field")
    if errors:
        raise DataError([f"{path}: {e}" for e in errors])
    if not parsed:
        raise DataError([f"{path}: no data rows"])
    cols = np.array(parsed, dtype=float).T
    return {name: cols[i] for i, name in enumerate(RESULTS_HEADER)}


def build_manifest(result: RunResult, stations: StationTable, duration_seconds: float) -> dict:
    """Reproduction record for one run: effective config plus provenance."""
    return {
        "format": "gspest-run-manifest/1",
        "package_version": __version__,
        "config": config_to_dict(result.config),
        "station_digest": station_digest(stations),
        "covariance_digest": result.metadata.get("cw_digest"),
        "sampling_indices": list(result.metadata.get("sampling_indices", [])),
        "lambda_min": result.metadata.get("lambda_min"),
        "duration_seconds": float(duration_seconds),
    }


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "config" not in data:
        raise DataError([f"{path}: not a run manifest"])
    return data


def _cache_basename(digest: str, k: int) -> str:
    return f"graph_{digest[:16]}_k{k}"


def load_graph_cache(cache_dir, stations: StationTable, k: int):
    """Return (Graph, GftBasis) from cache, or None on miss/mismatch."""
    digest = station_digest(stations)
    path = os.path.join(cache_dir, _cache_basename(digest, k) + ".npz")
    if not os.path.exists(path):
        return None
    with np.load(path, allow_pickle=False) as data:
        if str(data["digest"]) != digest or int(data["k"]) != k:
            return None
        graph = Graph(adjacency=data["adjacency"])
        basis = GftBasis(eigenvalues=data["eigenvalues"], vectors=data["vectors"])
    return graph, basis


def save_graph_cache(cache_dir, stations: StationTable, k: int,
                     graph: Graph, basis: GftBasis) -> str:
    os.makedirs(cache_dir, exist_ok=True)
    digest = station_digest(stations)
    path = os.path.join(cache_dir, _cache_basename(digest, k) + ".npz")
    np.savez(path, digest=digest, k=k, adjacency=graph.adjacency,
             eigenvalues=basis.eigenvalues, vectors=basis.vectors)
    return path


def write_node_list(path, stations: StationTable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "lat", "lon"])
        for i, sid in enumerate(stations.ids):
            writer.writerow([sid, _fmt(stations.coords[i, 0]), _fmt(stations.coords[i, 1])])


def write_edge_list(path, stations: StationTable, graph: Graph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "target"])
        for i, j in graph.edge_list():
            writer.writerow([stations.ids[i], stations.ids[j]])
