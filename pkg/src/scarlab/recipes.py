"""Experiment recipes behind the CLI subcommands.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes its tables
under ``out_dir`` and returns a summary dict with a ``passed`` flag where the
command has an acceptance gate.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tables
from .basis import enumerate_basis
from .cache import cache_path, default_cache_dir, read_spectrum, write_spectrum
from .config import ExperimentConfig
from .cumulants import (
    crossing_term,
    factorization_test,
    make_pair,
    time_pattern,
    uniform_grid,
)
from .decomposition import decompose_scar_correlator
from .errors import CacheError, DomainError
from .haar import (
    check_first_moment,
    check_second_moment,
    check_typicality_scaling,
    random_hermitian,
    random_unit_vector,
)
from .scars import ScarSet, adjacent_scar, central_scar, select_scars
from .sector import SECTOR_ID, SectorBasis, build_sector
from .spectral import (
    EigenObservable,
    Spectrum,
    build_hamiltonian,
    diagonalize,
    observable_in_eigenbasis,
)


@dataclass(frozen=True)
class Solved:
    sector: SectorBasis
    spectrum: Spectrum
    observable: EigenObservable
    cache_file: Path
    checksum: int
    cache_hit: bool


def _cache_dir(cfg: ExperimentConfig) -> Path:
    return Path(cfg.cache_dir) if cfg.cache_dir else default_cache_dir()


def load_or_solve(cfg: ExperimentConfig, n_sites: int | None = None) -> Solved:
    """Spectrum from the cache when intact, otherwise diagonalize and (re)write it."""
    n = cfg.n_sites if n_sites is None else n_sites
    sector = build_sector(enumerate_basis(n))
    path = cache_path(_cache_dir(cfg), n, SECTOR_ID, cfg.observable)
    expect = {"N": n, "sector_id": SECTOR_ID, "observable_id": cfg.observable,
              "dim": sector.dim_sector}
    spec = None
    hit = False
    if path.exists():
        try:
            spec, _ = read_spectrum(path, expect)
            hit = True
        except CacheError as exc:
            warnings.warn(f"discarding cache {path}: {exc}; recomputing", stacklevel=2)
            spec = None
    if spec is None:
        spec = diagonalize(build_hamiltonian(sector), sector)
        checksum = write_spectrum(path, spec, cfg.observable)
    else:
        checksum = int.from_bytes(path.read_bytes()[-8:], "little")
    obs = observable_in_eigenbasis(spec, sector, cfg.observable)
    return Solved(sector, spec, obs, path, checksum, hit)


def _scars(cfg: ExperimentConfig, solved: Solved, count: int | None = None) -> ScarSet:
    return select_scars(solved.spectrum, solved.sector, method=cfg.scar_method,
                        count=cfg.scar_count if count is None else count,
                        band_fraction=cfg.band_fraction)


def _out(cfg: ExperimentConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


# ------------------------------------------------------------------ commands

def run_spectrum(cfg: ExperimentConfig) -> dict:
    t0 = time.perf_counter()
    solved = load_or_solve(cfg)
    spec = solved.spectrum
    diag = np.diagonal(solved.observable.matrix)
    path = tables.write_csv(_out(cfg, f"spectrum_N{spec.n_sites}.csv"), "spectrum",
                            ["index", "energy", "observable_diag"],
                            ([m, spec.energies[m], diag[m]] for m in range(spec.dim)))
    return {"N": spec.n_sites, "dim": spec.dim, "E_min": float(spec.energies[0]),
            "E_max": float(spec.energies[-1]), "wall_time_s": time.perf_counter() - t0,
            "cache_file": str(solved.cache_file), "checksum": f"{solved.checksum:016x}",
            "cache_hit": solved.cache_hit, "table": str(path)}


def run_scars(cfg: ExperimentConfig) -> dict:
    solved = load_or_solve(cfg)
    scarset = _scars(cfg, solved)
    path = tables.write_csv(_out(cfg, f"scars_N{cfg.n_sites}.csv"), "scars",
                            tables.SCAR_HEADER, tables.scar_rows(solved.spectrum, scarset))
    ent = scarset.entanglement_entropy
    scar_mean = float(ent[scarset.scar_indices].mean()) if len(scarset.scar_indices) else math.nan
    thermal_mean = float(ent[scarset.thermal_indices].mean()) if len(scarset.thermal_indices) else math.nan
    return {"N": cfg.n_sites, "scars": [int(s) for s in scarset.scar_indices],
            "scar_mean_entropy": scar_mean, "thermal_mean_entropy": thermal_mean,
            "table": str(path)}


def run_factorization(cfg: ExperimentConfig) -> dict:
    solved = load_or_solve(cfg)
    scarset = _scars(cfg, solved)
    report = factorization_test(solved.spectrum, solved.observable, scarset,
                                ens_kind=cfg.ensemble, window_fraction=cfg.window_fraction)
    path = tables.write_csv(_out(cfg, f"factorization_N{cfg.n_sites}.csv"), "factorization",
                            tables.FACTORIZATION_HEADER, tables.factorization_rows(report))
    err = report.frobenius_error
    summary = {"N": cfg.n_sites, "ensemble": cfg.ensemble,
               "scars": [int(s) for s in report.scars], "frobenius_rel_error": err,
               "gate": cfg.factorization_gate, "passed": bool(err <= cfg.factorization_gate)}
    tables.write_json(_out(cfg, f"factorization_N{cfg.n_sites}.json"), summary)
    summary["table"] = str(path)
    return summary


def _resolve_pair(cfg: ExperimentConfig, solved: Solved, scarset: ScarSet, adjacent: bool):
    if cfg.pair is not None:
        a, b = cfg.pair
    else:
        a = central_scar(solved.spectrum, scarset)
        b = adjacent_scar(solved.spectrum, scarset, a) if adjacent else a
    return make_pair(solved.spectrum, a, b, scarset.scar_indices)


def _run_decomposition(cfg: ExperimentConfig, q: int, pattern: str, adjacent: bool,
                       command: str) -> dict:
    solved = load_or_solve(cfg)
    scarset = _scars(cfg, solved)
    if len(scarset.scar_indices) == 0:
        raise DomainError("no scars selected")
    pair = _resolve_pair(cfg, solved, scarset, adjacent)
    times = time_pattern(pattern, uniform_grid(cfg.t_max, cfg.n_points))
    kwargs = dict(ens_kind=cfg.ensemble, window_fraction=cfg.window_fraction)
    report = decompose_scar_correlator(solved.spectrum, solved.observable, scarset, pair,
                                       times, q, factorized=True, **kwargs)
    exact_variant = decompose_scar_correlator(solved.spectrum, solved.observable, scarset, pair,
                                              times, q, factorized=False, **kwargs)
    header, rows = tables.decomposition_table(report, exact_variant)
    path = tables.write_csv(_out(cfg, f"{command}_N{cfg.n_sites}.csv"), command, header, rows)
    summary = {"N": cfg.n_sites, "q": q, "pattern": pattern, "a": pair.a, "b": pair.b,
               "beta_ab": pair.beta_ab, "ensemble": cfg.ensemble,
               "max_abs_error": report.max_abs_error, "max_rel_error": report.max_rel_error,
               "unfactorized_max_abs_error": exact_variant.max_abs_error,
               "terms": [t.label for t in report.terms]}
    tables.write_json(_out(cfg, f"{command}_N{cfg.n_sites}.json"), summary)
    summary["table"] = str(path)
    return summary


def run_threepoint(cfg: ExperimentConfig) -> dict:
    """F_aa^(3) on the configured pattern for the central scar (or ``cfg.pair``)."""
    return _run_decomposition(cfg, 3, cfg.threepoint_pattern, adjacent=False, command="threepoint")


def run_fourpoint(cfg: ExperimentConfig) -> dict:
    """F_ab^(4) for the central scar and its nearest scar neighbour (or ``cfg.pair``)."""
    return _run_decomposition(cfg, 4, cfg.fourpoint_pattern, adjacent=True, command="fourpoint")


def loglog_slope(dims, values) -> float:
    """Least-squares slope of log|value| against log D; NaN for fewer than two points."""
    dims = np.asarray(dims, dtype=float)
    vals = np.abs(np.asarray(values))
    if len(dims) < 2:
        warnings.warn("a single system size cannot define a scaling slope; reporting NaN",
                      stacklevel=2)
        return math.nan
    return float(np.polyfit(np.log(dims), np.log(vals), 1)[0])


def run_crossing(cfg: ExperimentConfig) -> dict:
    rows = []
    for n in cfg.n_sweep:
        solved = load_or_solve(cfg, n)
        scarset = _scars(cfg, solved, cfg.crossing_scar_count)
        a = central_scar(solved.spectrum, scarset)
        b = adjacent_scar(solved.spectrum, scarset, a)
        T = scarset.thermal_indices
        c_aa = abs(crossing_term(solved.spectrum, solved.observable, T, a, a))
        c_ab = abs(crossing_term(solved.spectrum, solved.observable, T, a, b))
        rows.append([n, solved.spectrum.dim, a, b, c_aa, c_ab])
    path = tables.write_csv(_out(cfg, "crossing.csv"), "crossing", tables.CROSSING_HEADER, rows)
    dims = [r[1] for r in rows]
    fit = {"n_sweep": list(cfg.n_sweep), "scar_count": cfg.crossing_scar_count,
           "slope_aa": loglog_slope(dims, [r[4] for r in rows]),
           "slope_ab": loglog_slope(dims, [r[5] for r in rows])}
    tables.write_json(_out(cfg, "crossing_fit.json"), fit)
    fit["table"] = str(path)
    return fit


def run_haar(cfg: ExperimentConfig) -> dict:
    d, n = cfg.haar_dim, cfg.haar_samples
    seeds = np.random.SeedSequence(cfg.seed).generate_state(5)
    rng = np.random.default_rng(int(seeds[4]))
    X = rng.standard_normal((d, d))
    O = random_hermitian(d, rng)
    a, b = random_unit_vector(d, rng), random_unit_vector(d, rng)
    reports = [
        check_first_moment(d, n, X, seed=int(seeds[0])),
        check_second_moment(d, n, seed=int(seeds[1])),
        check_typicality_scaling(d, n, O, a, b, 1, seed=int(seeds[2])),
        check_typicality_scaling(d, n, O, a, b, 2, seed=int(seeds[3])),
    ]
    data = {r.name: r.to_dict() for r in reports}
    data["exact_checks"] = {k: v for r in reports for k, v in r.exact_checks.items()}
    path = tables.write_json(_out(cfg, "haar.json"), data)
    passed = all(r.passed(cfg.sigma_gate) for r in reports)
    return {"d": d, "n_samples": n, "sigma_gate": cfg.sigma_gate,
            "worst_sigmas": {r.name: r.worst_sigmas() for r in reports},
            "passed": passed, "report": str(path)}


RECIPES = {
    "spectrum": run_spectrum,
    "scars": run_scars,
    "factorization": run_factorization,
    "threepoint": run_threepoint,
    "fourpoint": run_fourpoint,
    "crossing": run_crossing,
    "haar": run_haar,
}
