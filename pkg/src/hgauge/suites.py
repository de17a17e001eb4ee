"""Suite orchestration: turn a scenario into independent checks and run them."""
from __future__ import annotations

import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .algebra import (
    DifferentialCrossedModule,
    conjugation_invariance,
    invpoly_validate,
    matinv,
    validate_dcm,
)
from .exact import VarRegistry
from .forms import BiGradedForm, d_t, d_x, face_restrict, simplex_integrate_form
from .gauge import (
    ConnectionFamily,
    TwoConnection,
    TwoCurvature,
    b_form,
    bianchi_residuals,
    chsas_form,
    chsas_n1_closed_form,
    curvature,
    invariance_check_P,
    invariant_form_P,
    q_boundary,
    random_gauge_pair,
    random_invertible,
    random_poly,
    transgression_Q,
    verify_gauge_covariance,
)
from .homotopy import (
    echf_check,
    expr_eval,
    graded_relations_check,
    lt_apply,
    pi_expr,
    sign_diagnosis,
)
from .report import CheckResult, Report
from .scenario import (
    Scenario,
    ScenarioError,
    build_algebra,
    build_pairing,
    connection_rng,
    materialize_connections,
)

__all__ = ["run_suite", "Job", "plan_jobs"]

CONVENTION = "F with 1/2 bracket"


@dataclass
class Job:
    name: str
    eq: str
    fn: Callable[[], tuple[list[list[BiGradedForm]], str]]


def _sum(pieces: list[BiGradedForm]) -> BiGradedForm:
    out = pieces[0]
    for p in pieces[1:]:
        out = out + p
    return out


class _Context:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.cm: DifferentialCrossedModule = build_algebra(sc)
        self.P = build_pairing(sc, self.cm)
        self.n = self.P.n
        if self.P.dims != (self.cm.g.dim, self.cm.h.dim):
            raise ScenarioError("pairing dimensions do not match the algebra")
        self.reg = VarRegistry.standard(sc.dim)
        need = sc.samples or 0
        if "descent" in sc.selected_suites() and sc.descent_p:
            need = max(need, max(sc.descent_p) + 2)
        self.conns = materialize_connections(sc, self.cm, self.reg, need or None)
        self.names = list(self.conns)

    def population(self) -> list[str]:
        k = self.sc.samples or len(self.names)
        return self.names[:k]

    def pairs(self) -> list[tuple[str, str]]:
        pop = self.population()
        return list(zip(pop, pop[1:]))

    def triples(self) -> list[tuple[str, str, str]]:
        pop = self.population()
        return list(zip(pop, pop[1:], pop[2:]))

    def rng(self, label: str) -> random.Random:
        return connection_rng(self.sc.seed or 0, label)


# ----------------------------------------------------------------------------
# suites


def _validate(ctx: _Context, skipped):
    cm, P = ctx.cm, ctx.P

    def dcm():
        rep = validate_dcm(cm)
        fails = rep.failures()
        note = "" if not fails else "; ".join(f"{f.name} at {f.witness}" for f in fails)
        return [], note, len(fails)

    def inv():
        rep = invpoly_validate(P, cm)
        fails = rep.failures()
        note = "" if not fails else "; ".join(f"{f.name} at {f.witness}" for f in fails)
        return [], note, len(fails)

    jobs = [Job("validate.crossed-module", "crossed-module axioms", dcm), Job("validate.pairing", "invariant-polynomial axioms", inv)]
    if cm.adjoint and cm.g.rep is not None and cm.g.label.startswith("gl"):
        N = cm.g.rep[0].shape[0]
        rng = ctx.rng("conjugation")
        mats = [random_invertible(N, rng) for _ in range(5)]

        def conj():
            bad = sum(0 if conjugation_invariance(P, cm, g, matinv(g)) else 1 for g in mats)
            return [], "5 random GL elements", bad

        jobs.append(Job("validate.conjugation", "<gXg^-1..>=<X..>", conj))
    else:
        skipped.append("validate.conjugation: needs a gl(N) adjoint module")
    return jobs


def _curv(ctx: _Context, name: str) -> TwoCurvature:
    c = ctx.conns[name]
    k = curvature(ctx.cm, c)
    if "corrupt-curvature" in ctx.sc.inject:
        X = BiGradedForm.basis_form(ctx.reg, "g", ctx.cm.g.dim, 0, I=(0, 1))
        k = TwoCurvature(k.F + X, k.G)
    return k


def _bianchi(ctx, skipped):
    jobs = []
    for name in ctx.population():
        def fn(name=name):
            r1, r2 = bianchi_residuals(ctx.cm, ctx.conns[name], _curv(ctx, name))
            return [[r1], [r2]], "corrupted curvature injected" if ctx.sc.inject else ""

        jobs.append(Job(f"bianchi[{name}]", "dF+[A,F]+a(G)=0; dG+A>G-F>B=0", fn))
    return jobs


def _closedness(ctx, skipped):
    jobs = []
    for name in ctx.population():
        def fn(name=name):
            _, dP = invariant_form_P(ctx.P, ctx.cm, ctx.conns[name])
            note = "P is a top form" if ctx.sc.dim <= 2 * ctx.n + 3 else ""
            return [[dP]], note

        jobs.append(Job(f"closedness[{name}]", "d<F^n,G>=0", fn))
    return jobs


def _gauge(ctx, skipped):
    cm = ctx.cm
    if not cm.adjoint or cm.g.rep is None or not cm.g.label.startswith("gl"):
        skipped.append("gauge: finite transformations need a gl(N) adjoint module")
        return []
    jobs = []
    for name in ctx.population():
        for kind in ("constant", "unipotent"):
            gp = random_gauge_pair(cm, ctx.reg, ctx.rng(f"gauge:{name}:{kind}"), kind)

            def cov(name=name, gp=gp):
                rF, rG = verify_gauge_covariance(cm, ctx.conns[name], gp)
                return [[rF], [rG]], "phi^phi as matrix wedge"

            def inv(name=name, gp=gp):
                return [[invariance_check_P(ctx.P, cm, ctx.conns[name], gp)]], ""

            jobs.append(Job(f"gauge.covariance[{name},{kind}]", "F'=g^-1Fg; G'=g^-1>G+F'>phi", cov))
            jobs.append(Job(f"gauge.invariance[{name},{kind}]", "<F'^n,G'>=<F^n,G>", inv))
    return jobs


def _chern_weil(ctx, skipped):
    jobs = []
    if not ctx.pairs():
        skipped.append("chern-weil: needs at least two connections")
    for a, b in ctx.pairs():
        def fn(a=a, b=b):
            c0, c1 = ctx.conns[a], ctx.conns[b]
            Q = transgression_Q(ctx.P, ctx.cm, c0, c1)
            P1, _ = invariant_form_P(ctx.P, ctx.cm, c1)
            P0, _ = invariant_form_P(ctx.P, ctx.cm, c0)
            return [[d_x(Q), -P1, P0]], CONVENTION

        def hom(a=a, b=b):
            c0, c1 = ctx.conns[a], ctx.conns[b]
            fam = ConnectionFamily([c0, c1])
            h = simplex_integrate_form(expr_eval(lt_apply(pi_expr(ctx.n)), fam, ctx.P, ctx.cm))
            return [[h, -transgression_Q(ctx.P, ctx.cm, c0, c1)]], "homotopy route vs closed form"

        jobs.append(Job(f"chern-weil[{a},{b}]", "P1-P0=dQ", fn))
        jobs.append(Job(f"chern-weil.homotopy[{a},{b}]", "int l_t Pi=Q", hom))
    return jobs


def _chsas(ctx, skipped):
    jobs = []
    for name in ctx.population():
        def fn(name=name):
            c = ctx.conns[name]
            C = chsas_form(ctx.P, ctx.cm, c)
            Pf, _ = invariant_form_P(ctx.P, ctx.cm, c)
            return [[d_x(C), -Pf]], ""

        jobs.append(Job(f"chsas[{name}]", "dC=P", fn))
        if ctx.n == 1:
            def closed(name=name):
                c = ctx.conns[name]
                return [[chsas_form(ctx.P, ctx.cm, c), -chsas_n1_closed_form(ctx.P, ctx.cm, c)]], ""

            jobs.append(Job(f"chsas.closed-form[{name}]", "C=<A,dB/2+A>B/3>+<dA/2+AA/3-a(B)/2,B>", closed))
    return jobs


def _triangle(ctx, skipped):
    jobs = []
    if not ctx.triples():
        skipped.append("triangle: needs at least three connections")
    P, cm = ctx.P, ctx.cm
    for a, b, c in ctx.triples():
        def fn(a=a, b=b, c=c):
            c0, c1, c2 = ctx.conns[a], ctx.conns[b], ctx.conns[c]
            pieces = [
                ("Q(c0,c2)", transgression_Q(P, cm, c0, c2)),
                ("-Q(c1,c2)", -transgression_Q(P, cm, c1, c2)),
                ("-Q(c0,c1)", -transgression_Q(P, cm, c0, c1)),
                ("dQ3", d_x(q_boundary(P, cm, c0, c1, c2))),
            ]
            return [[f for _, f in pieces]], sign_diagnosis(pieces) or "as printed"

        jobs.append(Job(f"triangle[{a},{b},{c}]", "Q02=Q12+Q01-dQ3", fn))
    for a, b in ctx.pairs()[:1]:
        def cor(a=a, b=b):
            c0, c1 = ctx.conns[a], ctx.conns[b]
            zero = TwoConnection.zero(cm, ctx.reg)
            pieces = [
                ("Q(c0,c1)", transgression_Q(P, cm, c0, c1)),
                ("-C(c1)", -chsas_form(P, cm, c1)),
                ("C(c0)", chsas_form(P, cm, c0)),
                ("-dQ3(c0,c1,0)", -d_x(q_boundary(P, cm, c0, c1, zero))),
            ]
            return [[f for _, f in pieces]], sign_diagnosis(pieces) or "as printed"

        jobs.append(Job(f"triangle.corollary[{a},{b}]", "Q01=C1-C0+dQ3(c0,c1,0)", cor))
    return jobs


def _descent(ctx, skipped):
    jobs = []
    for p in ctx.sc.descent_p:
        names = ctx.names[: p + 2]
        if len(names) < p + 2:
            skipped.append(f"descent p={p}: needs {p + 2} connections")
            continue

        def fn(p=p, names=tuple(names)):
            fam = ConnectionFamily([ctx.conns[x] for x in names])
            return [[echf_check(p, fam, ctx.P, ctx.cm)]], "l_t even derivation"

        jobs.append(Job(f"descent[p={p}]", f"descent p={p}", fn))
    return jobs


def _cartan(ctx, skipped):
    jobs = []
    P, cm = ctx.P, ctx.cm
    if not ctx.pairs():
        skipped.append("cartan: needs at least two connections")
    for a, b in ctx.pairs():
        def fn(a=a, b=b):
            c0, c1 = ctx.conns[a], ctx.conns[b]
            pieces = [
                ("Q(c0,c1)", transgression_Q(P, cm, c0, c1)),
                ("-C(c1)", -chsas_form(P, cm, c1)),
                ("C(c0)", chsas_form(P, cm, c0)),
                ("dB", d_x(b_form(P, cm, c0, c1))),
            ]
            return [[f for _, f in pieces]], sign_diagnosis(pieces) or "as printed"

        jobs.append(Job(f"cartan[{a},{b}]", "Q=C1-C0-dB", fn))
    return jobs


def _graded(ctx, skipped):
    if len(ctx.names) < 2:
        skipped.append("graded-relations: needs two connections")
        return []
    jobs = []
    fam_names = tuple(ctx.names[:2])
    cache = {}
    lock = threading.Lock()

    def rel():
        with lock:
            if "r" not in cache:
                fam = ConnectionFamily([ctx.conns[x] for x in fam_names])
                cache["r"] = graded_relations_check(fam, ctx.P, ctx.cm)
        return cache["r"]

    for key in (
        "d^2",
        "d_t^2",
        "d d_t + d_t d",
        "(l_t d - d l_t - d_t) Pi",
        "(l_t d_t - d_t l_t) Pi",
        "(l_t d - d l_t - d_t) l_t Pi",
        "formal d_t = d_t",
    ):
        def fn(key=key):
            return [[rel()[key]]], ""

        jobs.append(Job(f"graded[{key}]", key, fn))
    return jobs


def stokes_residual(k: int, m: int, rng: random.Random, degree: int = 3) -> BiGradedForm:
    """``sum_i (-1)^i int face_i(w) - int d_t w`` for a random dt-(k-1) form."""
    import itertools

    reg = VarRegistry.standard(m, k)
    comps = {}
    for J in itertools.combinations(range(k), k - 1):
        for I in ((), (0,)):
            comps[(I, J)] = [random_poly(reg, degree, rng, 4, names=reg.names)]
    w = BiGradedForm.from_components(reg, "scalar", 1, comps)
    total = BiGradedForm.zero(VarRegistry.standard(m))
    for i in range(k + 1):
        f = simplex_integrate_form(face_restrict(w, i))
        total = total + (f if i % 2 == 0 else -f)
    return total - simplex_integrate_form(d_t(w))


def _stokes(ctx, skipped):
    jobs = []
    for k in (1, 2, 3):
        def fn(k=k):
            return [[stokes_residual(k, 2, ctx.rng(f"stokes:{k}"))]], "dt-left orientation"

        jobs.append(Job(f"stokes[k={k}]", f"simplex-stokes k={k}", fn))
    return jobs


_SUITE_FNS = {
    "validate": _validate,
    "bianchi": _bianchi,
    "closedness": _closedness,
    "gauge": _gauge,
    "chern-weil": _chern_weil,
    "chsas": _chsas,
    "triangle": _triangle,
    "descent": _descent,
    "cartan": _cartan,
    "graded-relations": _graded,
    "stokes-selfcal": _stokes,
}


def plan_jobs(sc: Scenario) -> tuple[list[Job], list[str], _Context]:
    ctx = _Context(sc)
    skipped: list[str] = []
    jobs: list[Job] = []
    for s in sc.selected_suites():
        jobs += _SUITE_FNS[s](ctx, skipped)
    return jobs, skipped, ctx


def _run(job: Job):
    t0 = time.perf_counter()
    out = job.fn()
    if len(out) == 3:
        groups, notes, count = out
    else:
        groups, notes = out
        count = sum(_sum(g).nterms() for g in groups)
    ms = (time.perf_counter() - t0) * 1000
    return CheckResult(job.name, job.eq, count == 0, count, notes, ms), groups


def _spot(name: str, groups, rng: random.Random, points: int = 3) -> dict:
    ok = True
    for group in groups:
        reg = group[0].reg
        for _ in range(points):
            at = {v: Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for v in reg.names}
            acc: dict = {}
            for piece in group:
                for key, vals in piece.evaluate(at).items():
                    cur = acc.setdefault(key, [Fraction(0)] * len(vals))
                    acc[key] = [a + b for a, b in zip(cur, vals)]
            if any(v != 0 for vals in acc.values() for v in vals):
                ok = False
    return {"name": name, "points": points * len(groups), "ok": ok}


def run_suite(sc: Scenario, workers: int | None = None, spot_check: bool = False) -> Report:
    jobs, skipped, ctx = plan_jobs(sc)
    if workers is None:
        workers = int(os.environ.get("HGAUGE_WORKERS", "0")) or min(4, os.cpu_count() or 1)
    results: dict[str, tuple] = {}
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            results[job.name] = _run(job)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {job.name: pool.submit(_run, job) for job in jobs}
            for name, fut in futures.items():
                results[name] = fut.result()
    report = Report(sc.hash(), [results[j.name][0] for j in jobs], skipped, list(sc.warnings))
    if spot_check:
        for j in jobs:
            groups = results[j.name][1]
            if groups:
                report.spot_checks.append(_spot(j.name, groups, ctx.rng(f"spot:{j.name}")))
    return report
