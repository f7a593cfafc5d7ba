"""Acceptance suite: one test per criterion, each printing a single verdict line."""

import math
import time

import numpy as np
import pytest

from weyltwist import gauge as GA
from weyltwist import jets as J
from weyltwist import runner
from weyltwist import submersion as SM
from weyltwist import twistor as TW
from weyltwist import weyl as W
from weyltwist import zoo
from weyltwist.exprconf import BinOp, Call, Neg, Num, Var, compile_field, evaluate, parse, to_string

COORDS = "xyzt"


def report(n, ok, detail):
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def random_quadratic(rng, m, scale=0.3):
    terms = [f"{rng.uniform(-scale, scale):.6f}*{COORDS[i]}" for i in range(m)]
    terms += [f"{rng.uniform(-scale, scale):.6f}*{COORDS[i]}*{COORDS[j]}"
              for i in range(m) for j in range(i, m)]
    terms.append(f"{rng.uniform(-scale, scale):.6f}")
    return "+".join(terms).replace("+-", "-")


def rescale(S, f):
    k = S.k
    if k is not None and S.n == 2:  # k lives on the source only for maps to surfaces
        k = W.WeightedScalar(W._k_field(k), -1).gauge_transform(f)
    return SM.SubmersionScenario(W.lee_gauge_transform(S.source, f), S.target, S.phi, k)


def timed_run(suite):
    cfg = runner.RunConfig(suite=suite, points=64, seed=42)
    runner.run(cfg)  # warm-up: expression compilation and numpy dispatch
    t0 = time.perf_counter()
    rep, code = runner.run(cfg)
    return rep, code, time.perf_counter() - t0


@pytest.mark.criterion(1, "flat suite residuals < 1e-9 at 64 points, runtime < 1 s")
def test_criterion_1_flat_suite():
    rep, code, dt = timed_run("flat")
    worst = max(c["max_residual"] for c in rep["checks"])
    ok = code == 0 and worst < 1e-9 and all(c["pass"] for c in rep["checks"]) and dt < 1.0
    report(1, ok, f"{len(rep['checks'])} checks, worst residual {worst:.2e}, runtime {dt:.3f} s")
    assert all(c["pass"] for c in rep["checks"]) and worst < 1e-9
    assert dt < 1.0


GH_REQUIRED = ("harmonic_morphism", "monopole", "asd_connection", "asd_source",
               "check_4to3_ahs", "check_4to3_christoffel")


@pytest.mark.criterion(2, "Gibbons-Hawking suite residuals < 1e-7, runtime < 5 s")
def test_criterion_2_gibbons_hawking():
    rep, code, dt = timed_run("gh")
    by = {c["name"].split("/")[1]: c for c in rep["checks"]}
    worst = max(by[n]["max_residual"] for n in GH_REQUIRED)
    ok = code == 0 and worst < 1e-7 and dt < 5.0
    report(2, ok, f"worst of {len(GH_REQUIRED)} required residuals {worst:.2e}, runtime {dt:.3f} s")
    assert code == 0 and worst < 1e-7
    assert dt < 5.0


CASES_3TO2 = [
    (lambda: zoo.flat_projection(3, 2), True), (lambda: zoo.holomorphic2d([0, -1, 0, 1]), True),
    (lambda: zoo.holomorphic2d([1, 0.5, 0.25]), True), (zoo.heisenberg3, True),
    (lambda: zoo.heisenberg3(0.0), False), (lambda: zoo.holomorphic2d([0, -1, 0, 1], k=1.0), False),
    (zoo.warped_product, False),
]
CASES_4TO2 = [
    (lambda: zoo.flat_projection(4, 2), True), (zoo.holomorphic4d, True),
    (lambda: zoo.holomorphic4d("x+z^2-t^2", "y+2*z*t"), True),
    (lambda: zoo.holomorphic4d(orientation=-1), False), (zoo.heisenberg4, False),
    (lambda: zoo.warped_product(4), False),
]


@pytest.mark.criterion(3, "frame and invariant criteria agree on 20 rescalings per scenario")
def test_criterion_3_equivalence():
    rng = np.random.default_rng(3)
    disagreements, wrong, trials = [], [], 0
    for cases, frame, invariant in ((CASES_3TO2, TW.check_3to2_frame, TW.check_3to2_invariant),
                                    (CASES_4TO2, TW.check_4to2_frame, TW.check_4to2_invariant)):
        assert sum(not e for _, e in cases) >= 3
        for build, expected in cases:
            s = build()
            pts = s.sample(3, 7)
            for _ in range(20):
                S = rescale(s.submersion, random_quadratic(rng, s.m))
                fr = all(frame(S, p).passed for p in pts)
                inv = all(invariant(S, p).passed for p in pts)
                trials += 1
                if fr != inv:
                    disagreements.append(s.name)
                if fr != expected:
                    wrong.append(s.name)
    ok = not disagreements and not wrong
    report(3, ok, f"{trials} rescaled scenarios, {len(disagreements)} disagreements, "
                  f"{len(wrong)} unexpected verdicts")
    assert not disagreements and not wrong


@pytest.mark.criterion(4, "two-of-three on Gibbons-Hawking and three single-perturbation controls")
def test_criterion_4_two_of_three():
    cases = [(zoo.gibbons_hawking, set()),
             (zoo.control_nonharmonic_gh, {"twistorial", "asd"}),
             (zoo.control_wrong_higgs, {"monopole", "asd"}),
             (zoo.control_perturbed_target, {"twistorial", "monopole"})]
    lines, ok = [], True
    for build, predicted in cases:
        s = build()
        r = GA.two_of_three(s.submersion, s.gauge, s.sample(16, 4))
        vals = {"twistorial": r.twistorial, "monopole": r.monopole, "asd": r.asd}
        big = {k for k, v in vals.items() if v > 1e-3}
        small = {k for k, v in vals.items() if v < 1e-7}
        good = big == predicted and small == set(vals) - predicted and r.consistent
        ok &= good
        lines.append(f"{s.name}: " + ", ".join(f"{k}={v:.2g}" for k, v in vals.items()))
    report(4, ok, "; ".join(lines))
    assert ok


@pytest.mark.criterion(5, "curvature decomposition identity < 1e-7 for arbitrary quadratic A")
def test_criterion_5_curvature_decomposition():
    rng = np.random.default_rng(5)
    base = [zoo.gibbons_hawking(), zoo.gibbons_hawking("2+x+y", ("z", "0", "y"), name="gh2")]
    worst = 0.0
    for s in base:
        pts = s.sample(4, 5)
        for i in range(10):
            pair = GA.GaugePair.from_expressions(random_quadratic(rng, 3, 1.0),
                                                 [random_quadratic(rng, 3, 1.0) for _ in range(3)])
            S = s.submersion if i % 2 == 0 else rescale(s.submersion, random_quadratic(rng, 4))
            for p in pts:
                worst = max(worst, GA.curvature_decomposition_residual(S, pair, p))
    report(5, worst < 1e-7, f"worst residual {worst:.2e} over 20 random Higgs pairs")
    assert worst < 1e-7


def _twistor_verdicts(S, pts):
    m, n = S.m, S.n
    checks = {(3, 2): (TW.check_3to2_frame, TW.check_3to2_invariant),
              (4, 2): (TW.check_4to2_frame, TW.check_4to2_invariant),
              (4, 3): (TW.check_4to3_es, TW.check_4to3_ahs)}[(m, n)]
    return tuple(all(chk(S, p, tol=1e-7).passed for p in pts) for chk in checks)


@pytest.mark.criterion(6, "Weyl Christoffels gauge invariant to 1e-10; verdicts unchanged")
def test_criterion_6_gauge_invariance():
    rng = np.random.default_rng(6)
    worst, changed, count = 0.0, [], 0
    for s in zoo.suite("all"):
        pts = s.sample(3, 6)
        G0 = [W.weyl_christoffels(s.source, p) for p in pts]
        v0 = _twistor_verdicts(s.submersion, pts)
        for _ in range(10):
            S = rescale(s.submersion, random_quadratic(rng, s.m))
            for p, g0 in zip(pts, G0):
                worst = max(worst, float(np.max(np.abs(W.weyl_christoffels(S.source, p) - g0))))
            count += 1
            if _twistor_verdicts(S, pts) != v0:
                changed.append(s.name)
    ok = worst < 1e-10 and not changed
    report(6, ok, f"{count} rescalings, Christoffel drift {worst:.2e}, {len(changed)} verdict changes")
    assert worst < 1e-10 and not changed


@pytest.mark.criterion(7, "special Einstein-Weyl clause: k=0 passes, k=c0 misses by 3/2 c0^2")
def test_criterion_7_special_einstein_weyl():
    flat = W.WeylStructure.flat(3)
    s0, f0 = W.ew_special_residual(flat, 0.0, [0.1, 0.2, 0.3])
    errs = []
    for c0 in (0.5, 1.0, -2.0, 3.7):
        s, f = W.ew_special_residual(flat, c0, [0.4, -0.3, 0.2])
        errs.append(abs(s - 1.5 * c0 ** 2))
    ok = max(s0, f0) < 1e-12 and max(errs) <= 1e-12
    report(7, ok, f"k=0 residual {max(s0, f0):.1e}; |scalar - 3/2 c0^2| <= {max(errs):.1e}")
    assert max(s0, f0) < 1e-12 and max(errs) <= 1e-12


@pytest.mark.criterion(8, "monopole verdict on the Lee-difference grid passes only at (D'=D'', flat)")
def test_criterion_8_lee_difference_grid():
    pts = np.random.default_rng(8).uniform(-1, 1, (8, 3))
    grid = {}
    for beta in (False, True):
        for curved in (False, True):
            pair, N = zoo.lee_difference_pair(beta, curved)
            grid[(beta, curved)] = all(GA.monopole_residual(pair, N, p) < 1e-9 for p in pts)
    ok = grid == {(False, False): True, (False, True): False, (True, False): False, (True, True): False}
    report(8, ok, "pass cells: " + str([k for k, v in grid.items() if v]))
    assert ok


def _corpus(n, rng):
    def build(depth):
        if depth == 0 or rng.random() < 0.2:
            if rng.random() < 0.5:
                return Var(str(rng.choice(list("xyztr"))))
            return Num(float(rng.choice([0, 1, 2, 0.25, 7.5, 1e-4, 2.5e6])))
        kind = rng.integers(3)
        if kind == 0:
            return Neg(build(depth - 1))
        if kind == 1:
            return BinOp(str(rng.choice(list("+-*/^"))), build(depth - 1), build(depth - 1))
        return Call(str(rng.choice(["exp", "log", "sin", "cos", "sqrt"])), build(depth - 1))

    return [build(6) for _ in range(n)]


SMOOTH = ["x*y*z+t", "exp(x-y)*cos(z*t)", "sqrt(3+x^2-y)", "log(1+x^2+y^2+z^2)", "1/(1+r^2)",
          "x^5-10*x^3*y^2+5*x*y^4", "sin(x+2*y)^2", "(1+x)/(2+y*z)", "exp(-r)*t", "x^(1+y)"]


@pytest.mark.criterion(9, "parser round trip on 200 expressions; jet gradients vs FD to 1e-7")
def test_criterion_9_parser():
    rng = np.random.default_rng(9)
    corpus = _corpus(200, rng)
    failures = sum(parse(to_string(t)) != t for t in corpus)
    worst = 0.0
    for text in SMOOTH:
        tree = parse(text)
        f = compile_field(tree, 4)
        for p in rng.uniform(0.2, 1.0, (5, 4)):
            g = f(J.coordinates(p)).grad
            _, fd, _ = J.finite_difference(
                lambda q: evaluate(tree, dict(zip(COORDS, map(float, q)))), p, step=1e-5)
            worst = max(worst, float(np.max(np.abs(g - fd))) / max(1.0, float(np.max(np.abs(g)))))
    ok = failures == 0 and worst <= 1e-7
    report(9, ok, f"{failures} round-trip failures of {len(corpus)}, worst relative FD gap {worst:.1e}")
    assert failures == 0 and worst <= 1e-7


@pytest.mark.criterion(10, "byte-identical JSON across repeated runs with 1 and 8 threads")
def test_criterion_10_determinism():
    outs = []
    for threads in (1, 1, 8, 8):
        rep, _ = runner.run(runner.RunConfig(suite="all", points=64, seed=42, threads=threads))
        outs.append(runner.render_json(rep))
    ok = len(set(outs)) == 1
    report(10, ok, f"{len(outs)} runs, {len(set(outs))} distinct report(s), {len(outs[0])} bytes")
    assert ok
