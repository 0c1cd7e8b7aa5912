"""Named experiment pipelines: each maps parameters to per-scale rows, fits and verdicts.

Every pipeline computes its predicted exponent through :mod:`paralab.exponents`
(or from measured dimensions of the inputs) so no prediction is hard-coded.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .arithmetic import count_energy_check, fit_exponent, sumset_cover, vinogradov_bruteforce, vinogradov_count
from .cache import cached_convolve_power
from .exponents import gamma_exponent, sharp_exponent, sumset_exponent, zeta_exponent
from .fourier import discretization_sandwich, fourier_lp_norm, l2_norm_sq, mollified_power_l2
from .incidence import count_incidences, fu_ren_rhs, furstenberg_check, generate_fu_ren_instance
from .measures import (
    arc_measure,
    cantor_dimension,
    cantor_parabola_measure,
    lattice_parabola_measure,
    planar_cantor_measure,
    sum_measure,
)
from .psi import line_of_translated_parabola, psi, tangent_line, transfer_neighbourhood

__all__ = [
    "Param",
    "Pipeline",
    "Verdict",
    "ExperimentRecord",
    "PIPELINES",
    "list_pipelines",
    "resolve_params",
    "run",
]


@dataclass(frozen=True)
class Param:
    kind: str  # float, int, str, float_list, int_list, cells
    default: Any
    help: str


@dataclass(frozen=True)
class Verdict:
    """One pass/fail comparison: ``measured relation predicted`` within ``tolerance``."""

    name: str
    measured: float
    predicted: float
    tolerance: float
    relation: str  # "<=", ">=", "abs"
    passed: bool

    @classmethod
    def check(cls, name: str, measured: float, predicted: float, tolerance: float, relation: str) -> "Verdict":
        if relation == "<=":
            ok = measured <= predicted + tolerance
        elif relation == ">=":
            ok = measured >= predicted - tolerance
        elif relation == "abs":
            ok = abs(measured - predicted) <= tolerance
        else:
            raise ValueError(f"unknown relation {relation!r}")
        return cls(name, float(measured), float(predicted), float(tolerance), relation, bool(ok))


@dataclass
class ExperimentRecord:
    pipeline: str
    claim: str
    params: dict
    columns: list[str]
    rows: list[list]
    fits: dict = field(default_factory=dict)
    predicted: dict = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    plot: tuple[str, str] | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "claim": self.claim,
            "params": self.params,
            "columns": self.columns,
            "rows": self.rows,
            "fits": self.fits,
            "predicted": self.predicted,
            "verdicts": [v.__dict__ for v in self.verdicts],
            "passed": self.passed,
            "timings": self.timings,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_jsonable)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def to_plotdata(self) -> str:
        """Two whitespace-separated columns of log2 pairs for the record's plot axes."""
        if self.plot is None:
            return ""
        xi, yi = self.columns.index(self.plot[0]), self.columns.index(self.plot[1])
        lines = [f"# log2({self.plot[0]}) log2({self.plot[1]})"]
        for row in self.rows:
            x, y = float(row[xi]), float(row[yi])
            if x > 0 and y > 0:
                lines.append(f"{math.log2(x)!r} {math.log2(y)!r}")
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


@dataclass(frozen=True)
class Pipeline:
    name: str
    claim: str
    params: dict[str, Param]
    randomized: bool
    runner: Callable[[dict], ExperimentRecord]


def _coerce(name: str, spec: Param, value):
    try:
        if spec.kind == "float":
            return float(value)
        if spec.kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if spec.kind == "str":
            return str(value)
        if spec.kind == "float_list":
            return [float(v) for v in value]
        if spec.kind == "int_list":
            return [int(v) for v in value]
        if spec.kind == "cells":
            return [[int(a), int(b)] for a, b in value]
    except (TypeError, ValueError):
        pass
    raise ValueError(f"parameter {name!r} expects {spec.kind}, got {value!r}")


def resolve_params(name: str, overrides: dict | None = None) -> dict:
    """Defaults of pipeline ``name`` updated by ``overrides``, type-checked."""
    pipe = _get(name)
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(pipe.params) - {"seed"})
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name}: {', '.join(unknown)}; "
                         f"accepted: {', '.join(sorted(pipe.params))}")
    out = {k: _coerce(k, p, overrides.get(k, p.default)) for k, p in pipe.params.items()}
    if pipe.randomized:
        if overrides.get("seed") is None:
            raise ValueError(f"pipeline {name} is randomized: pass a seed (--seed N)")
        out["seed"] = int(overrides["seed"])
    return out


def _get(name: str) -> Pipeline:
    if name not in PIPELINES:
        raise ValueError(f"unknown pipeline {name!r}; available: {', '.join(sorted(PIPELINES))}")
    return PIPELINES[name]


def run(name: str, params: dict | None = None) -> ExperimentRecord:
    """Run a registered pipeline with validated parameters."""
    pipe = _get(name)
    resolved = resolve_params(name, params)
    start = time.perf_counter()
    record = pipe.runner(resolved)
    record.timings["total_seconds"] = time.perf_counter() - start
    return record


def list_pipelines() -> list[dict]:
    """Catalog of pipelines: name, the claim it reproduces, its parameters and whether it needs a seed."""
    return [
        {
            "name": p.name,
            "claim": p.claim,
            "randomized": p.randomized,
            "params": {k: {"kind": v.kind, "default": v.default, "help": v.help} for k, v in p.params.items()},
        }
        for p in PIPELINES.values()
    ]


def _levels(values: list[int], what: str, minimum: int = 3) -> list[int]:
    lv = sorted(set(values))
    if len(lv) < minimum:
        raise ValueError(f"{what} needs at least {minimum} distinct levels")
    if lv[0] < 0:
        raise ValueError(f"{what} must be nonnegative")
    return lv


def _fit(rows, xi: int, yi: int) -> tuple[float, float]:
    return fit_exponent([(row[xi], row[yi]) for row in rows])


# ---------------------------------------------------------------- pipelines


def _fourier_decay(p: dict) -> ExperimentRecord:
    if p["p"] < 1:
        raise ValueError("p must be at least 1")
    rows = []
    timings = {}
    for k in _levels(p["R_levels"], "R_levels"):
        R = 2.0**k
        t0 = time.perf_counter()
        m = arc_measure(1.0 / (2.0 * R))
        norm = fourier_lp_norm(m, p["p"], R, freq_spacing=p["freq_spacing"])
        timings[f"R=2^{k}"] = time.perf_counter() - t0
        rows.append([1.0 / R, R, len(m), norm])
    slope, resid = _fit(rows, 0, 3)
    predicted = (2.0 - p["t"]) / p["p"]
    verdict = Verdict.check("lp_norm_slope", slope, predicted, p["tolerance"], "<=")
    return ExperimentRecord("fourier-decay", PIPELINES["fourier-decay"].claim, p,
                            ["inv_R", "R", "atoms", "lp_norm"], rows,
                            {"slope": slope, "residual": resid}, {"slope_bound": predicted}, [verdict], timings,
                            plot=("R", "lp_norm"))


def _sharpness(p: dict) -> ExperimentRecord:
    s = p["s"]
    if p["n"] != 3:
        raise ValueError("the sharpness prediction concerns the 3-fold power; set n=3")
    rows = []
    timings = {}
    for lv in _levels(p["levels"], "levels"):
        d = 2.0**-lv
        t0 = time.perf_counter()
        m = lattice_parabola_measure(d, s)
        val = mollified_power_l2(m, p["n"], d)
        timings[f"delta=2^-{lv}"] = time.perf_counter() - t0
        rows.append([d, len(m), val])
    slope, resid = _fit(rows, 0, 2)
    predicted = 2.0 - sharp_exponent(s)
    verdict = Verdict.check("l2_slope", slope, predicted, p["tolerance"], "abs")
    return ExperimentRecord("sharpness", PIPELINES["sharpness"].claim, p, ["delta", "atoms", "l2_norm_sq"], rows,
                            {"slope": slope, "residual": resid}, {"slope": predicted}, [verdict], timings,
                            plot=("delta", "l2_norm_sq"))


def _sumset_growth(p: dict) -> ExperimentRecord:
    base = p["base"]
    s = cantor_dimension(p["digits"], base)
    rows = []
    timings = {}
    for m in _levels(p["levels"], "levels"):
        d = float(base) ** -m
        K = cantor_parabola_measure(d, p["digits"], base)
        for n in p["ns"]:
            t0 = time.perf_counter()
            cover = sumset_cover(K.points, n, d, budget=int(p["budget"]),
                                 route=None if p["route"] == "auto" else p["route"])
            timings[f"m={m},n={n}"] = time.perf_counter() - t0
            rows.append([n, d, len(K), len(cover), cover.route])
    fits, predicted, verdicts = {}, {}, []
    for n in p["ns"]:
        sub = [r for r in rows if r[0] == n]
        slope, resid = fit_exponent([(r[1], r[3]) for r in sub])
        fits[f"slope_n{n}"] = slope
        fits[f"residual_n{n}"] = resid
        predicted[f"slope_n{n}"] = sumset_exponent(s, n)
        verdicts.append(Verdict.check(f"box_slope_n{n}", slope, predicted[f"slope_n{n}"], p["tolerance"], ">="))
    predicted["dimension"] = s
    return ExperimentRecord("sumset-growth", PIPELINES["sumset-growth"].claim, p,
                            ["n", "delta", "points", "cover", "route"], rows, fits, predicted, verdicts, timings,
                            plot=None)


def _vinogradov(p: dict) -> ExperimentRecord:
    s, n = p["s"], p["n"]
    exponent = sharp_exponent(s) - p["margin"]
    rows = []
    timings = {}
    for lv in _levels(p["levels"], "levels"):
        d = 2.0**-lv
        t0 = time.perf_counter()
        P = lattice_parabola_measure(d, s).points
        rep = count_energy_check(P, n, d, constant=p["energy_constant"], budget=int(p["budget"]))
        ratio = rep.count / (d**exponent * float(len(P)) ** (2 * n))
        timings[f"delta=2^-{lv}"] = time.perf_counter() - t0
        rows.append([d, len(P), rep.count, ratio, rep.lhs, rep.rhs, rep.ratio])
    verdicts = [
        Verdict.check("count_ratio_max", max(r[3] for r in rows), p["count_constant"], 0.0, "<="),
        Verdict.check("energy_ratio_max", max(r[6] for r in rows), p["energy_constant"], 0.0, "<="),
    ]
    lhs_slope, _ = _fit(rows, 0, 4)
    rhs_slope, _ = _fit(rows, 0, 5)
    verdicts.append(Verdict.check("energy_slope_gap", lhs_slope - rhs_slope, 0.0, p["slope_tolerance"], "abs"))
    # randomized oracle instances: exact counter against brute force
    rng = np.random.default_rng(p["seed"])
    mismatches = 0
    t0 = time.perf_counter()
    for _ in range(p["oracle_instances"]):
        size = int(rng.integers(2, 7))
        nn = int(rng.integers(1, 4))
        while size ** (2 * nn) > 10**7:
            nn -= 1
        lv = int(rng.integers(3, 7))
        grid = rng.choice(2**lv, size=size, replace=False)
        x = (grid + 0.5) / 2**lv * 2.0 - 1.0
        pts = np.column_stack([x, x * x])
        d = 2.0 ** -(lv + 2)
        if vinogradov_count(pts, nn, d) != vinogradov_bruteforce(pts, nn, d):
            mismatches += 1
    timings["oracle"] = time.perf_counter() - t0
    verdicts.append(Verdict.check("oracle_mismatches", mismatches, 0.0, 0.0, "abs"))
    fits = {"count_exponent_used": exponent, "lhs_slope": lhs_slope, "rhs_slope": rhs_slope}
    return ExperimentRecord("vinogradov", PIPELINES["vinogradov"].claim, p,
                            ["delta", "points", "count", "count_ratio", "lhs", "rhs", "energy_ratio"], rows,
                            fits, {"count_exponent": sharp_exponent(s)}, verdicts, timings,
                            plot=("delta", "lhs"))


def _smoothing(p: dict) -> ExperimentRecord:
    base = p["base"]
    rows = []
    timings = {}
    s = t = None
    for m in _levels(p["levels"], "levels"):
        d = float(base) ** -m
        t0 = time.perf_counter()
        mu = planar_cantor_measure(d, [tuple(c) for c in p["cells"]], base)
        sigma = cantor_parabola_measure(d, p["digits"], base)
        s, t = sigma.dimension, mu.dimension
        val = mollified_power_l2(sum_measure(mu, sigma), 1, d)
        timings[f"m={m}"] = time.perf_counter() - t0
        rows.append([d, len(mu), len(sigma), val])
    slope, resid = _fit(rows, 0, 3)
    predicted = 2.0 - zeta_exponent(s, t)
    verdict = Verdict.check("l2_slope", slope, predicted, p["tolerance"], "<=")
    return ExperimentRecord("smoothing", PIPELINES["smoothing"].claim, p,
                            ["delta", "mu_atoms", "sigma_atoms", "l2_norm_sq"], rows,
                            {"slope": slope, "residual": resid, "s": s, "t": t}, {"slope_bound": predicted},
                            [verdict], timings, plot=("delta", "l2_norm_sq"))


def _furstenberg(p: dict) -> ExperimentRecord:
    s, t = p["s"], p["t"]
    rows = []
    timings = {}
    for lv in _levels(p["levels"], "levels"):
        d = 2.0**-lv
        t0 = time.perf_counter()
        inst = generate_fu_ren_instance(p["kind"], s, t, d, seed=p["seed"] * 1000 + lv)
        rep = furstenberg_check(inst, s, t, p["kappa"])
        timings[f"delta=2^-{lv}"] = time.perf_counter() - t0
        rows.append([d, len(inst.anchors), rep.union_size, rep.threshold, int(rep.passed),
                     rep.anchor_constant, rep.family_constant])
    slope, resid = _fit(rows, 0, 2)
    gamma = gamma_exponent(s, t)
    verdicts = [
        Verdict.check("threshold_failures", sum(1 - r[4] for r in rows), 0.0, 0.0, "abs"),
        Verdict.check("union_slope", slope, gamma, p["tolerance"], ">="),
    ]
    return ExperimentRecord("furstenberg", PIPELINES["furstenberg"].claim, p,
                            ["delta", "anchors", "union", "threshold", "passed", "anchor_constant",
                             "family_constant"], rows, {"slope": slope, "residual": resid}, {"gamma": gamma},
                            verdicts, timings, plot=("delta", "union"))


def _fu_ren(p: dict) -> ExperimentRecord:
    rng = np.random.default_rng(p["seed"])
    levels = _levels(p["levels"], "levels", minimum=1)
    rows = []
    t0 = time.perf_counter()
    for i in range(p["instances"]):
        kind = ("tube", "parabola")[i % 2]
        lv = int(levels[i % len(levels)])
        d = 2.0**-lv
        t_max = min(2.0, p["anchor_budget_bits"] / lv)
        t = float(rng.uniform(0.2, t_max))
        s = float(rng.uniform(0.1, min(1.0, 2.0 - t)))
        inst = generate_fu_ren_instance(kind, s, t, d, seed=int(rng.integers(2**31)))
        counted, _ = count_incidences(inst)
        union = len(inst.union())
        rhs = fu_ren_rhs(inst.C1, inst.C2, max(union, 1), len(inst.anchors), d, p["eps"])
        rows.append([i, kind, d, round(s, 6), round(t, 6), len(inst.anchors), union, counted,
                     inst.C1, inst.C2, rhs, counted / rhs])
    worst = max(r[-1] for r in rows)
    verdicts = [Verdict.check("max_ratio", worst, p["constant"], 0.0, "<=")]
    return ExperimentRecord("fu-ren", PIPELINES["fu-ren"].claim, p,
                            ["instance", "kind", "delta", "s", "t", "anchors", "union", "incidences", "C1", "C2",
                             "rhs", "ratio"], rows, {"max_ratio": worst}, {"constant": p["constant"]}, verdicts,
                            {"instances": time.perf_counter() - t0}, plot=None)


def _flattening(p: dict) -> ExperimentRecord:
    rows = []
    timings = {}
    verdicts = []
    kmax = p["kmax"]
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    for lv in sorted(set(p["r_levels"])):
        r = 2.0**-lv
        h = r / 4.0
        arc = arc_measure(r)
        J = []
        worst_sandwich = True
        for k in range(kmax + 1):
            n = 2 ** (k + 1)  # (arc * arc)^(2^k)
            cells = (n * 2.0 / h + 64) * (n * 1.0 / h + 64)
            if cells > p["max_grid_cells"]:
                raise ValueError(f"budget exceeded: k={k} at r=2^-{lv} needs ~{cells:.3g} grid cells "
                                 f"(> max_grid_cells={p['max_grid_cells']:.3g}); lower kmax or r_levels")
            t0 = time.perf_counter()
            fine = cached_convolve_power(arc, n, r, h=h, margin=8.0 * r)
            J.append(math.sqrt(l2_norm_sq(fine)))
            sandwich = None
            if k < kmax:
                coarse = cached_convolve_power(arc, n, 8.0 * r, h=h, margin=8.0 * r)
                sandwich = discretization_sandwich(fine, coarse, r, constant=p["sandwich_constant"])
                worst_sandwich = worst_sandwich and sandwich.ok
            timings[f"r=2^-{lv},k={k}"] = time.perf_counter() - t0
            rows.append([r, k, n, J[-1],
                         float("nan") if sandwich is None else sandwich.lower_ratio,
                         float("nan") if sandwich is None else sandwich.upper_ratio,
                         float("nan") if sandwich is None else sandwich.core_ratio,
                         "" if sandwich is None else int(sandwich.ok)])
        growth = max(J[k + 1] / J[k] for k in range(kmax))
        verdicts.append(Verdict.check(f"J_growth_r2^-{lv}", growth, 1.0, p["tolerance"], "<="))
        verdicts.append(Verdict.check(f"sandwich_r2^-{lv}", float(worst_sandwich), 1.0, 0.0, "abs"))
    return ExperimentRecord("flattening-monotone", PIPELINES["flattening-monotone"].claim, p,
                            ["r", "k", "power", "J", "lower_ratio", "upper_ratio", "core_ratio", "sandwich_ok"],
                            rows, {}, {"J_growth": 1.0}, verdicts, timings, plot=("power", "J"))


def _psi_audit(p: dict) -> ExperimentRecord:
    rng = np.random.default_rng(p["seed"])
    lo, hi = -p["box"], p["box"]
    N = p["samples"]
    t0 = time.perf_counter()
    pts = rng.uniform(lo, hi, size=(N, 2))
    involution = float(np.max(np.abs(psi(psi(pts)) - pts)))
    # translated parabola z + P maps into the line of z
    z = rng.uniform(lo, hi, size=(p["anchors"], 2))
    u = rng.uniform(lo, hi, size=(p["anchors"], N // p["anchors"]))
    par_err = 0.0
    tan_err = 0.0
    for zi, ui in zip(z, u):
        curve = np.column_stack([zi[0] + ui, zi[1] + ui * ui])
        line = line_of_translated_parabola(zi)
        par_err = max(par_err, float(np.max(np.abs(line.signed_distance(psi(curve))))))
        # Psi of the parabola through Psi(z) is the tangent line at z
        c = psi(zi)
        through = np.column_stack([c[0] + ui, c[1] + ui * ui])
        tan_err = max(tan_err, float(np.max(np.abs(tangent_line(zi).signed_distance(psi(through))))))
    escaped = 0
    worst_ratio = 0.0
    box = ((lo, hi), (lo, hi))
    for i, zi in enumerate(z[: p["transfer_anchors"]]):
        _, audit = transfer_neighbourhood(zi, p["delta"], box, samples=2000, seed=p["seed"] + i)
        escaped += audit.escaped
        worst_ratio = max(worst_ratio, audit.audited / audit.constant)
    tol = p["tolerance"]
    rows = [["involution", involution], ["parabola_to_line", par_err], ["tangent_line", tan_err],
            ["transfer_escaped", float(escaped)], ["transfer_worst_fraction", worst_ratio]]
    verdicts = [
        Verdict.check("involution", involution, 0.0, tol, "abs"),
        Verdict.check("parabola_to_line", par_err, 0.0, tol, "abs"),
        Verdict.check("tangent_line", tan_err, 0.0, tol, "abs"),
        Verdict.check("transfer_escaped", escaped, 0.0, 0.0, "abs"),
    ]
    return ExperimentRecord("psi-audit", PIPELINES["psi-audit"].claim, p, ["check", "value"], rows, {}, {},
                            verdicts, {"checks": time.perf_counter() - t0}, plot=None)


PIPELINES: dict[str, Pipeline] = {}


def _register(name, claim, params, randomized, runner):
    PIPELINES[name] = Pipeline(name, claim, params, randomized, runner)


_register("fourier-decay",
          "Lp(B(R)) norm of the Fourier transform of a Frostman measure on the parabola grows at most like "
          "R^((2-t)/p)",
          {"p": Param("float", 6.0, "Lebesgue exponent"),
           "t": Param("float", 1.8, "energy exponent in the predicted growth (2-t)/p"),
           "R_levels": Param("int_list", [4, 5, 6, 7, 8], "log2 of the radii R"),
           "freq_spacing": Param("float", 0.25, "frequency grid spacing"),
           "tolerance": Param("float", 0.1, "allowed excess slope")},
          False, _fourier_decay)
_register("sharpness",
          "lattice example on the parabola: the L2 norm of the mollified 3-fold power grows like "
          "delta^(min(3s, s+1) - 2)",
          {"s": Param("float", 0.5, "lattice exponent: step delta^s"),
           "n": Param("int", 3, "convolution power (must be 3)"),
           "levels": Param("int_list", [6, 7, 8, 9, 10, 11], "log2(1/delta) values"),
           "tolerance": Param("float", 0.15, "allowed slope deviation")},
          False, _sharpness)
_register("sumset-growth",
          "box dimension of the n-fold sumset of an s-dimensional set on the parabola is at least "
          "min(3s - s 2^-(n-2), s+1)",
          {"digits": Param("int_list", [0, 3], "kept digits of the Cantor set"),
           "base": Param("int", 4, "digit base"),
           "levels": Param("int_list", [2, 3, 4, 5, 6, 7], "Cantor generations m (delta = base^-m)"),
           "ns": Param("int_list", [2, 3], "sumset orders"),
           "route": Param("str", "recursive", "exact, recursive or auto"),
           "budget": Param("float", 1e8, "enumeration budget"),
           "tolerance": Param("float", 0.15, "allowed slope deficit")},
          False, _sumset_growth)
_register("vinogradov",
          "delta-discretized Vinogradov counts on the parabola lattice are at most delta^t |P|^(2n) for "
          "t below min(3s, s+1), and the count matches the L2 norm of the mollified power",
          {"s": Param("float", 0.5, "lattice exponent"),
           "n": Param("int", 3, "number of summands per side"),
           "levels": Param("int_list", [5, 6, 7, 8], "log2(1/delta) values"),
           "margin": Param("float", 0.2, "t = min(3s, s+1) - margin"),
           "count_constant": Param("float", 10.0, "allowed count / (delta^t |P|^(2n))"),
           "energy_constant": Param("float", 1e3, "allowed count-side / energy-side ratio"),
           "slope_tolerance": Param("float", 0.2, "allowed slope gap between the two sides"),
           "oracle_instances": Param("int", 20, "random brute-force comparisons"),
           "budget": Param("float", 1e8, "enumeration budget")},
          True, _vinogradov)
_register("smoothing",
          "the L2 norm of (mu * sigma) mollified at delta grows at most like delta^(zeta(s,t) - 2)",
          {"cells": Param("cells", [[0, 0], [1, 2], [2, 1], [3, 3]], "kept cells of the planar Cantor set"),
           "digits": Param("int_list", [0, 1, 3], "kept digits of the Cantor set on the parabola"),
           "base": Param("int", 4, "digit base"),
           "levels": Param("int_list", [2, 3, 4, 5], "generations m (delta = base^-m)"),
           "tolerance": Param("float", 0.15, "allowed excess slope")},
          False, _smoothing)
_register("furstenberg",
          "a union of s-dimensional families over a t-dimensional set of parabolas has at least "
          "delta^(-gamma(s,t) + kappa) squares",
          {"s": Param("float", 0.5, "family exponent"),
           "t": Param("float", 1.0, "anchor exponent"),
           "kappa": Param("float", 0.1, "threshold slack"),
           "kind": Param("str", "parabola", "parabola or tube"),
           "levels": Param("int_list", [4, 5, 6, 7, 8], "log2(1/delta) values"),
           "tolerance": Param("float", 0.15, "allowed slope deficit")},
          True, _furstenberg)
_register("fu-ren",
          "incidences between Katz-Tao families and tubes or parabola neighbourhoods are at most "
          "delta^-eps sqrt(delta^-1 C1 C2 |F| |anchors|)",
          {"instances": Param("int", 50, "number of generated instances"),
           "levels": Param("int_list", [6, 7, 8, 9, 10], "log2(1/delta) values, cycled"),
           "anchor_budget_bits": Param("float", 10.0, "t * log2(1/delta) cap (anchors <= 2^bits)"),
           "eps": Param("float", 0.1, "loss exponent"),
           "constant": Param("float", 10.0, "allowed counted / rhs")},
          True, _fu_ren)
_register("flattening-monotone",
          "J_r(k) = ||(arc*arc)^(2^k) * psi_r||_2 is non-increasing in k, with the dyadic staircase "
          "sandwiched between the field at r and 64 times the field at 8r",
          {"r_levels": Param("int_list", [4, 6], "log2(1/r) values"),
           "kmax": Param("int", 3, "largest k"),
           "tolerance": Param("float", 1e-6, "allowed relative growth of J"),
           "sandwich_constant": Param("float", 64.0, "upper sandwich constant"),
           "max_grid_cells": Param("float", 4e7, "grid size budget")},
          False, _flattening)
_register("psi-audit",
          "the map (x, y) -> (x, x^2 - y) is an involution sending translated parabolas to lines and "
          "delta-neighbourhoods into C delta-tubes",
          {"samples": Param("int", 100000, "random points"),
           "box": Param("float", 2.0, "half side of the sampling box"),
           "anchors": Param("int", 100, "translated parabolas tested"),
           "transfer_anchors": Param("int", 20, "anchors used for the neighbourhood audit"),
           "delta": Param("float", 2.0**-8, "neighbourhood scale"),
           "tolerance": Param("float", 1e-12, "identity tolerance")},
          True, _psi_audit)
