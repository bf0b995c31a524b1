"""Benchmark harness: convergence sweeps over (eps, h, method), error-dip
detection, extrapolation-rule comparison and CSV output.
"""

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core, dynamics, geometry, nearest, richardson
from .errors import InvalidParameterError, NearSingularSystemError

CSV_COLUMNS = [
    "shape", "method", "eps1", "eps2", "eps3", "h", "sdof", "quad_points",
    "observable", "value", "reference", "rel_error", "wall_seconds", "status",
]


@dataclass
class SweepConfig:
    shape: str = "sphere"                  # sphere | spheroid | torus
    method: str = "ny"                     # ny | nyr | nearest
    eps_values: tuple = (0.1,)             # eps for ny/nearest, eps_base for nyr
    h_values: tuple = (0.2,)
    rule: richardson.ExtrapolationRule = richardson.DEFAULT_RULE
    observable: str = "grm_error"          # grm_error | torus_z
    a: float = 5.0
    c: float = 1.0
    R: float = 2.5
    r: float = 1.0
    mu: float = 1.0
    t_end: float = 98.7
    rtol: float = 1e-6
    atol: float = 1e-8
    quad_refine: float = 4.0
    filter_fraction: float = 0.1
    reference_file: str = None
    out: str = None
    workers: int = 1
    rcond_threshold: float = core.RCOND_THRESHOLD

    def __post_init__(self):
        if not self.eps_values or not self.h_values:
            raise InvalidParameterError("eps and h lists must be nonempty")
        if self.method == "nyr":
            self.rule = _as_rule(self.rule)


def _as_rule(rule):
    if isinstance(rule, richardson.ExtrapolationRule):
        return rule
    return richardson.ExtrapolationRule.parse(rule)


@dataclass
class ResultRow:
    shape: str
    method: str
    eps1: float
    eps2: float = None
    eps3: float = None
    h: float = None
    sdof: int = None
    quad_points: int = None
    observable: str = ""
    value: float = None
    reference: float = None
    rel_error: float = None
    wall_seconds: float = None
    status: str = "ok"


def shape_generator(config):
    if config.shape == "sphere":
        return lambda h: geometry.discretise_sphere(h)
    if config.shape == "spheroid":
        return lambda h: geometry.discretise_spheroid(config.a, config.c, h)
    if config.shape == "torus":
        return lambda h: geometry.discretise_torus(config.R, config.r, h)
    raise InvalidParameterError(f"unknown shape {config.shape!r}")


def analytic_reference(config):
    if config.shape == "sphere":
        return core.analytic_sphere_grm(mu=config.mu)
    if config.shape == "spheroid":
        return core.analytic_spheroid_grm(config.a, config.c, mu=config.mu)
    raise InvalidParameterError(f"no analytic reference for shape {config.shape!r}")


def _grm_cell(config, disc, pair, eps):
    if config.method == "ny":
        A = core.grand_resistance(disc, core.RegParam(eps, config.mu),
                                  rcond_threshold=config.rcond_threshold)
        eps_triple = (eps, None, None)
    elif config.method == "nyr":
        A = richardson.nyr_grand_resistance(disc, eps, rule=config.rule, mu=config.mu,
                                            rcond_threshold=config.rcond_threshold)
        eps_triple = config.rule.epsilons(eps)
    else:
        system, nmap = nearest.assemble_nearest(pair, core.RegParam(eps, config.mu))
        factored = core.FactoredSystem(system, config.rcond_threshold)
        W = nearest.coarse_weights(nmap, pair.quad.weights)
        x0 = pair.force.centroid()
        A = np.empty((6, 6))
        n = pair.force.n_points
        rhs = np.zeros((3 * n, 6))
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            rhs[:, i] = core._rigid_velocity_rhs(pair.force.points, e, np.zeros(3), x0)
            rhs[:, 3 + i] = core._rigid_velocity_rhs(pair.force.points, np.zeros(3), e, x0)
        sol = factored.solve(rhs)
        for col in range(6):
            f = sol[:, col].reshape(-1, 3) * W[:, None]
            A[:3, col] = f.sum(axis=0)
            A[3:, col] = np.cross(pair.force.points - x0, f).sum(axis=0)
        A = core.GrandResistanceMatrix(A)
        eps_triple = (eps, None, None)
    ref = analytic_reference(config)
    err = core.relative_error_2norm(A, ref)
    return err, None, err, eps_triple


def _torus_cell(config, disc, pair, eps, reference_value):
    mcfg = dynamics.MethodConfig(
        method=config.method, epsilon=eps, eps_base=eps, rule=config.rule,
        mu=config.mu, pair=pair, rcond_threshold=config.rcond_threshold,
    )
    traj = dynamics.sediment_torus(config.R, config.r, disc.h if disc else pair.force.h,
                                   mcfg, t_end=config.t_end,
                                   rtol=config.rtol, atol=config.atol)
    z_end = float(traj.states[-1].x0[2])
    rel = None
    if reference_value is not None:
        rel = abs(z_end - reference_value) / abs(reference_value)
    if config.method == "nyr":
        eps_triple = config.rule.epsilons(eps)
    else:
        eps_triple = (eps, None, None)
    return z_end, reference_value, rel, eps_triple


def run_sweep(config):
    """One result row per (eps, h) cell; failed cells are recorded in-status
    and never abort siblings. Output order is deterministic: sorted by h then
    eps, independent of worker count."""
    gen = shape_generator(config)
    discs = {}
    pairs = {}
    for h in config.h_values:
        if config.method == "nearest":
            pairs[h] = geometry.make_nearest_pair(
                gen, h, quad_refine=config.quad_refine,
                filter_fraction=config.filter_fraction,
            )
        else:
            discs[h] = gen(h)

    reference_value = None
    if config.observable == "torus_z" and config.reference_file:
        record = nearest.load_reference_record(config.reference_file)
        reference_value = float(record["value"])

    def cell(h, eps):
        disc = discs.get(h)
        pair = pairs.get(h)
        actual_h = disc.h if disc is not None else pair.force.h
        row = ResultRow(
            shape=config.shape, method=config.method, eps1=eps, h=actual_h,
            sdof=disc.sdof if disc is not None else pair.force.sdof,
            quad_points=pair.quad.n_points if pair is not None else None,
            observable=config.observable,
        )
        start = time.perf_counter()
        try:
            if config.observable == "grm_error":
                value, ref, rel, eps_triple = _grm_cell(config, disc, pair, eps)
            elif config.observable == "torus_z":
                value, ref, rel, eps_triple = _torus_cell(
                    config, disc, pair, eps, reference_value)
            else:
                raise InvalidParameterError(
                    f"unknown observable {config.observable!r}")
            row.value, row.reference, row.rel_error = value, ref, rel
            row.eps1, row.eps2, row.eps3 = eps_triple
        except NearSingularSystemError:
            row.status = "near_singular"
            if config.method == "nyr":
                row.eps1, row.eps2, row.eps3 = config.rule.epsilons(eps)
        except InvalidParameterError:
            raise
        except Exception:
            row.status = "failed"
        row.wall_seconds = time.perf_counter() - start
        return row

    jobs = [(h, eps) for h in config.h_values for eps in config.eps_values]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda je: cell(*je), jobs))
    else:
        rows = [cell(*je) for je in jobs]
    rows.sort(key=lambda r: (r.h, r.eps1))
    if config.out:
        write_csv(config.out, rows, config)
    return rows


@dataclass
class DipResult:
    h_dip: float
    plateau_error: float
    monotone: bool


def detect_error_dip(rows):
    """Locate the error minimum over h at fixed eps, and the small-h plateau
    estimate (mean of the errors at the two smallest h)."""
    usable = [r for r in rows if r.status == "ok" and r.rel_error is not None]
    if len(usable) < 4:
        raise InvalidParameterError("need at least 4 rows at distinct h")
    usable.sort(key=lambda r: r.h)
    errors = [r.rel_error for r in usable]
    i_min = int(np.argmin(errors))
    plateau = 0.5 * (errors[0] + errors[1])
    monotone = i_min in (0, len(usable) - 1)
    return DipResult(usable[i_min].h, plateau, monotone)


def compare_rules(config, eps_base, h, rules):
    """NyR grand-resistance error per extrapolation rule at a common (eps, h)."""
    rules = [_as_rule(r) for r in rules]
    gen = shape_generator(config)
    disc = gen(h)
    ref = analytic_reference(config)
    table = []
    for rule in rules:
        A = richardson.nyr_grand_resistance(disc, eps_base, rule=rule, mu=config.mu)
        table.append((rule, core.relative_error_2norm(A, ref)))
    return table


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def config_comment(config):
    parts = []
    for key in ("shape", "method", "observable", "a", "c", "R", "r", "mu",
                "t_end", "rtol", "atol", "quad_refine", "filter_fraction",
                "workers"):
        parts.append(f"{key}={getattr(config, key)}")
    parts.append("rule=" + str(config.rule))
    parts.append("eps=" + ",".join(f"{e:g}" for e in config.eps_values))
    parts.append("h=" + ",".join(f"{h:g}" for h in config.h_values))
    return "# " + " ".join(parts)


def write_csv(path_or_file, rows, config=None):
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        if config is not None:
            fh.write(config_comment(config) + "\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(getattr(row, col)) for col in CSV_COLUMNS])
    finally:
        if own:
            fh.close()


def read_csv(path_or_file):
    own = isinstance(path_or_file, (str, bytes))
    fh = open(path_or_file, newline="") if own else path_or_file
    try:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            kwargs = {}
            for col in CSV_COLUMNS:
                raw = rec[col]
                if raw == "":
                    kwargs[col] = None
                elif col in ("shape", "method", "observable", "status"):
                    kwargs[col] = raw
                elif col in ("sdof", "quad_points"):
                    kwargs[col] = int(raw)
                else:
                    kwargs[col] = float(raw)
            rows.append(ResultRow(**kwargs))
        return rows
    finally:
        if own:
            fh.close()


def load_config_file(path):
    """Plain key=value config file; keys match SweepConfig field names."""
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, raw = (part.strip() for part in line.split("=", 1))
            values[key] = raw
    return values
