"""Check registry and the deterministic batch runner behind ``verify``."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gauge as G
from . import submersion as SM
from . import twistor as TW
from . import weyl as W
from .errors import WeylTwistError

__all__ = ["CheckSpec", "CHECKS", "RunConfig", "applicable_checks", "evaluate_scenario",
           "run", "render_text", "REPORT_VERSION"]

REPORT_VERSION = "1"


@dataclass(frozen=True)
class CheckSpec:
    name: str
    anchor: str
    applies: Callable
    residual: Callable  # (scenario, PointContext) -> float


def _dims(*pairs):
    return lambda s: (s.m, s.n) in pairs


def _always(s):
    return True


def _gauge(s):
    return (s.m, s.n) == (4, 3) and s.gauge is not None


def _ew(s, c):
    if s.m == 3:
        return W.einstein_weyl_residual(s.source, c.x, W.curvature_pack(s.source, c.X, c.g, c.weyl_jet))
    return W.einstein_weyl_residual(s.target, c.y)


def _canonical(s, c):
    G_can = c.canonical_christoffels
    return max(c.norm(c.trace_B_H(G_can)), c.norm(c.trace_B_V(G_can)))


def _verdict(fn):
    return lambda s, c: fn(s.submersion, c).worst


def _christoffel(s, c):
    return TW.check_4to3_christoffel(s.submersion, c).worst


def _asd_connection(s, c):
    T = G.pullback_connection(s.submersion, s.gauge)
    return G.asd_connection_residual(T, None, c)


_SPECS = [
    ("weyl_compatibility", "Weyl connection: Dg = -2 alpha g", _always,
     lambda s, c: W.metric_compatibility_residual(s.source, c.X, c.g, c.weyl_jet)),
    ("bianchi", "first Bianchi identity of the Weyl curvature", _always,
     lambda s, c: W.bianchi_residual(W.curvature_pack(s.source, c.X, c.g, c.weyl_jet))),
    ("einstein_weyl", "Einstein-Weyl: trace-free symmetric Ricci vanishes",
     lambda s: 3 in (s.m, s.n), _ew),
    ("asd_source", "anti-self-dual conformal structure on the source",
     lambda s: s.m == 4, lambda s, c: W.asd_residual(s.source, c.X, g=c.g, lc=c.lc_jet)),
    ("hwc", "horizontal weak conformality", _always, lambda s, c: c.hwc_residual),
    ("tension", "harmonic map: trace of D dphi vanishes", _always,
     lambda s, c: c.tension_norm),
    ("harmonic_morphism", "harmonic morphism = harmonic + horizontally weakly conformal",
     _always, lambda s, c: max(SM.harmonic_morphism_residual(s.submersion, c))),
    ("horizontal_integrability", "integrability tensor of the horizontal distribution",
     lambda s: s.m - s.n == 1, lambda s, c: max(c.norm(v) for v in c.integrability.reshape(-1, s.m))),
    ("horizontal_minimality", "trace of the second fundamental form of H",
     _always, lambda s, c: c.norm(c.trace_B_H(c.christoffels))),
    ("canonical_traces", "canonical Weyl connection: V and H both minimal", _always, _canonical),
    ("fundamental_equation", "fundamental equation of horizontally conformal maps",
     _always, lambda s, c: SM.fundamental_equation_residual(s.submersion, c)),
    ("check_3to2_frame", "twistorial maps to surfaces: frame criterion (3 to 2)",
     _dims((3, 2)), _verdict(TW.check_3to2_frame)),
    ("check_3to2_invariant", "twistorial maps to surfaces: invariant criterion (3 to 2)",
     _dims((3, 2)), _verdict(TW.check_3to2_invariant)),
    ("check_4to2_frame", "twistorial maps to surfaces: frame criterion (4 to 2)",
     _dims((4, 2)), _verdict(TW.check_4to2_frame)),
    ("check_4to2_invariant", "twistorial maps to surfaces: invariant criterion (4 to 2)",
     _dims((4, 2)), _verdict(TW.check_4to2_invariant)),
    ("check_4to3_es", "maps from 4D to Einstein-Weyl spaces: Lee-form clauses",
     _dims((4, 3)), _verdict(TW.check_4to3_es)),
    ("check_4to3_christoffel", "maps from 4D to 3D: adapted-frame Christoffel relations",
     _dims((4, 3)), _christoffel),
    ("check_4to3_ahs", "maps from 4D to 3D: pulled-back partial connection equals H D_+",
     _dims((4, 3)), _verdict(TW.check_4to3_ahs)),
    ("monopole", "monopole equation dGamma = *(da - a alpha_N)", _gauge,
     lambda s, c: G.monopole_residual(s.gauge, s.target, c.y)),
    ("asd_connection", "pulled-back monopole connection is anti-self-dual", _gauge,
     _asd_connection),
    ("curvature_decomposition", "curvature decomposition of the pulled-back connection",
     _gauge, lambda s, c: G.curvature_decomposition_residual(s.submersion, s.gauge, c)),
]

CHECKS = {name: CheckSpec(name, anchor, applies, fn) for name, anchor, applies, fn in _SPECS}


def applicable_checks(scenario) -> list[str]:
    if scenario.checks is not None:
        unknown = [c for c in scenario.checks if c not in CHECKS]
        if unknown:
            raise KeyError(f"unknown checks {unknown}")
        return [c for c in scenario.checks if CHECKS[c].applies(scenario)]
    return [name for name, spec in CHECKS.items() if spec.applies(scenario)]


def _point_residuals(scenario, names, x):
    c = SM.context(scenario.submersion, x)
    out = []
    for name in names:
        try:
            r = float(CHECKS[name].residual(scenario, c))
        except WeylTwistError:
            r = math.inf
        out.append(r if math.isfinite(r) else math.inf)
    return out


def _fmt(v):
    return None if not math.isfinite(v) else float(v)


def evaluate_scenario(scenario, points, tol=None, threads=1):
    """Per-check summaries; residuals are reduced in point order."""
    names = applicable_checks(scenario)
    tol = scenario.tol if tol is None else float(tol)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda p: _point_residuals(scenario, names, p), points))
    else:
        rows = [_point_residuals(scenario, names, p) for p in points]
    table = np.array(rows, dtype=float).reshape(len(points), len(names))
    checks = []
    for j, name in enumerate(names):
        col = table[:, j]
        finite = bool(np.all(np.isfinite(col)))
        mx = float(np.max(col)) if len(col) else 0.0
        mean = float(math.fsum(col) / len(col)) if len(col) and finite else math.inf
        passed = finite and mx < tol
        exp = scenario.expected.get(name)
        entry = {
            "name": f"{scenario.name}/{name}",
            "anchor": CHECKS[name].anchor,
            "points": int(len(col)),
            "max_residual": _fmt(mx),
            "mean_residual": _fmt(mean),
            "tol": tol,
            "pass": passed,
            "expected": None if exp is None else ("pass" if exp.passes else "fail"),
        }
        if exp is not None:
            entry["provenance"] = exp.provenance
        checks.append(entry)
    return checks


@dataclass(frozen=True)
class RunConfig:
    suite: str | None = "flat"
    scenario_path: str | None = None
    points: int = 64
    seed: int = 42
    tol: float | None = None
    format: str = "json"
    threads: int | str = 1

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.format not in ("json", "text"):
            raise ValueError("format must be json or text")

    @property
    def n_threads(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return max(1, int(self.threads))


def _scenarios(cfg: RunConfig):
    from . import zoo
    from .exprconf import load_scenario

    out = []
    if cfg.scenario_path:
        out.append(load_scenario(cfg.scenario_path))
    if cfg.suite:
        out.extend(zoo.suite(cfg.suite))
    return out


def run(cfg: RunConfig):
    """Build the report dict and the exit code (0 all as expected, 1 otherwise)."""
    scenarios = _scenarios(cfg)
    checks = []
    for i, s in enumerate(scenarios):
        pts = s.sample(cfg.points, (int(cfg.seed) + i) & (2 ** 64 - 1))
        checks.extend(evaluate_scenario(s, pts, cfg.tol, cfg.n_threads))
    report = {
        "version": REPORT_VERSION,
        "config": {"suite": cfg.suite, "scenario": cfg.scenario_path, "points": cfg.points,
                   "seed": cfg.seed, "tol": cfg.tol},
        "checks": checks,
    }
    ok = all(c["pass"] == (c["expected"] != "fail") for c in checks)
    return report, (0 if ok else 1)


def render_json(report) -> str:
    return json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n"


def render_text(report) -> str:
    lines = []
    for c in report["checks"]:
        mx = "n/a" if c["max_residual"] is None else f"{c['max_residual']:.3e}"
        verdict = "PASS" if c["pass"] else "FAIL"
        note = "" if c["expected"] is None else f" (expected {c['expected'].upper()})"
        lines.append(f"{verdict} {c['name']:<45} max={mx} tol={c['tol']:.1e}{note}")
    return "\n".join(lines) + "\n"
