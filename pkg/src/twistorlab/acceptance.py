"""Executable acceptance checks.

Each ``check_*`` function runs one criterion at its pinned tolerance and
returns a :class:`Check`.  ``details`` hold only seed-determined values so
that a report built from them is byte-for-byte reproducible; wall-clock
time is kept in a separate field that is never serialised.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import subspace_angles

from . import char_invariants as ci
from . import expr as ex
from . import homotopology as ho
from .charts import builtin_chart, conformal_rescale
from .curvature import curvature_at
from .sd_algebra import (
    acs_to_form,
    form_to_acs,
    hodge_star,
    make_frame,
    random_metric,
    random_sd_form,
    sd_projectors,
    star_matrix,
)
from .twistor import (
    TwistorField,
    TwistorPoint,
    nijenhuis,
    random_twistor_points,
    twistor_J,
)

STANDARD_J = np.array(
    [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=np.int64
)


@dataclass
class Check:
    id: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    time_limit: float | None = None

    @property
    def within_time(self):
        return self.time_limit is None or self.elapsed < self.time_limit

    def to_json(self):
        return {"id": self.id, "name": self.name, "passed": bool(self.passed),
                "details": self.details}

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id:2d}. {self.name}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        check = fn(*args, **kwargs)
        check.elapsed = time.perf_counter() - t0
        return check

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _sci(x):
    """Round a diagnostic magnitude to 3 significant digits for stable reports."""
    return float(f"{float(x):.3e}")


def random_polynomial(rng, degree=2, scale=0.3):
    """Random polynomial in x1..x4 of the given degree as an expression tree."""
    monomials = [()]
    for d in range(1, degree + 1):
        monomials += [m for m in _monomials(d)]
    node = None
    for mono in monomials:
        c = float(rng.uniform(-scale, scale))
        if not mono:
            term = ex.Const(abs(c))
        else:
            term = ex.Const(abs(c))
            for i in mono:
                term = ex.BinOp("*", term, ex.Var(i))
        if node is None:
            node = ex.Neg(term) if c < 0 else term
        else:
            node = ex.BinOp("-" if c < 0 else "+", node, term)
    return node


def _monomials(d, start=0):
    if d == 0:
        yield ()
        return
    for i in range(start, 4):
        for rest in _monomials(d - 1, i):
            yield (i,) + rest


# 1 ---------------------------------------------------------------------------

def check_standard_j(repeats=5):
    w = np.zeros((4, 4))
    w[0, 1], w[1, 0], w[2, 3], w[3, 2] = 1, -1, 1, -1
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        j = form_to_acs(w, np.eye(4)).j
        best = min(best, time.perf_counter() - t0)
    exact = bool(np.array_equal(j, STANDARD_J.astype(float)))
    check = Check(1, "standard j from e1^e2 + e3^e4", exact,
                  {"j": j.astype(int).tolist()}, time_limit=1e-3)
    check.elapsed = best
    return check


# 2 ---------------------------------------------------------------------------

@_timed
def check_hodge_algebra(n=100, seed=2, tol=1e-10):
    rng = np.random.default_rng(seed)
    worst = {"star_squared": 0.0, "idempotent": 0.0, "complementary": 0.0,
             "rank_gap": 0.0, "form_roundtrip": 0.0, "acs_roundtrip": 0.0}
    ranks_ok = True
    for _ in range(n):
        g = random_metric(rng)
        star = star_matrix(g)
        worst["star_squared"] = max(worst["star_squared"], np.max(np.abs(star @ star - np.eye(6))))
        pp, pm = sd_projectors(g)
        worst["idempotent"] = max(worst["idempotent"], np.max(np.abs(pp @ pp - pp)),
                                  np.max(np.abs(pm @ pm - pm)))
        worst["complementary"] = max(worst["complementary"], np.max(np.abs(pp @ pm)),
                                     np.max(np.abs(pp + pm - np.eye(6))))
        sv = np.linalg.svd(sd_projectors(g, orthonormal=True)[0], compute_uv=False)
        ranks_ok &= bool(np.sum(sv > 0.5) == 3)
        worst["rank_gap"] = max(worst["rank_gap"], np.max(np.abs(np.sort(sv) - [0, 0, 0, 1, 1, 1])))
        w = random_sd_form(rng, g)
        acs = form_to_acs(w, g)
        acs.check(g)
        worst["form_roundtrip"] = max(worst["form_roundtrip"], np.max(np.abs(acs_to_form(acs, g) - w)))
        j2 = form_to_acs(acs_to_form(acs, g), g).j
        worst["acs_roundtrip"] = max(worst["acs_roundtrip"], np.max(np.abs(j2 - acs.j)))
        # star of a random 2-form applied twice
        a = rng.standard_normal((4, 4))
        a = a - a.T
        worst["star_squared"] = max(worst["star_squared"],
                                    np.max(np.abs(hodge_star(hodge_star(a, g), g) - a)))
    passed = ranks_ok and all(v <= tol for v in worst.values())
    return Check(2, "Hodge star, projectors and omega<->j round trips", passed,
                 {k: _sci(v) for k, v in worst.items()} | {"metrics": n}, time_limit=1.0)


# 3 ---------------------------------------------------------------------------

@_timed
def check_constant_curvature(n=50, seed=3, tol=1e-8):
    chart = builtin_chart("s4_round")
    rng = np.random.default_rng(seed)
    err_r = err_s = err_w = 0.0
    for p in chart.domain.sample(rng, n):
        c = curvature_at(chart, p)
        g = c.g
        model = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
        err_r = max(err_r, np.max(np.abs(c.riemann_low - model)))
        err_s = max(err_s, abs(c.scalar - 12.0))
        err_w = max(err_w, np.max(np.abs(c.weyl_low)))
    passed = max(err_r, err_s, err_w) <= tol
    return Check(3, "round S4: constant curvature, scalar 12, Weyl 0", passed,
                 {"riemann_err": _sci(err_r), "scalar_err": _sci(err_s),
                  "weyl_max": _sci(err_w), "points": n}, time_limit=5.0)


# 4 ---------------------------------------------------------------------------

@_timed
def check_weyl_conformal(n_f=5, seed=4, tol=1e-6, charts=("flat", "s4_round")):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in charts:
        chart = builtin_chart(name)
        for _ in range(n_f):
            f = random_polynomial(rng)
            scaled = conformal_rescale(chart, f)
            p = chart.domain.sample(rng, 1)[0] * 0.5
            a = curvature_at(chart, p).weyl_mixed()
            b = curvature_at(scaled, p).weyl_mixed()
            worst = max(worst, np.max(np.abs(a - b)))
    return Check(4, "conformal invariance of the (1,3) Weyl tensor", worst <= tol,
                 {"max_diff": _sci(worst), "charts": list(charts), "functions": n_f})


# 5 ---------------------------------------------------------------------------

INTEGRABLE = ("flat", "s4_round", "cp2_fubini_study_reversed")
NON_INTEGRABLE = ("cp2_fubini_study", "s2xs2")


@_timed
def check_integrability(n=20, seed=5, low=1e-4, high=1e-2, step=1e-4):
    details = {}
    passed = True
    for name in INTEGRABLE + NON_INTEGRABLE:
        chart = builtin_chart(name)
        rng = np.random.default_rng(seed)
        values = [nijenhuis(chart, tp, step).max_abs
                  for tp in random_twistor_points(chart, n, rng, margin=2 * step)]
        lo, hi = min(values), max(values)
        if name in INTEGRABLE:
            ok = hi <= low
        else:
            ok = lo >= high
        passed &= ok
        details[name] = {"min": _sci(lo), "max": _sci(hi), "ok": ok}
    return Check(5, "twistor J integrable exactly on the W+ = 0 charts", passed, details,
                 time_limit=60.0)


# 6 ---------------------------------------------------------------------------

@_timed
def check_J_conformal(n_f=3, n_pts=4, seed=6, tol=1e-6, angle_min=1e-6):
    rng = np.random.default_rng(seed)
    worst = 0.0
    min_angle = np.inf
    for name in ("s4_round", "cp2_fubini_study"):
        chart = builtin_chart(name)
        for _ in range(n_f):
            f = random_polynomial(rng)
            scaled = conformal_rescale(chart, f)
            for tp in random_twistor_points(chart, n_pts, rng):
                tp = TwistorPoint.from_fiber(tp.base * 0.5, tp.fiber)
                Jg = twistor_J(chart, tp)
                # match the twistor point of the rescaled metric through j
                field = TwistorField(chart, tp.sigma)
                data = field.base_data(tp.base)
                j = form_to_acs(data.frame.form(tp.fiber), data.g)
                g2 = scaled.metric(tp.base)
                u2 = make_frame(g2).coefficients(acs_to_form(j, g2))
                tp2 = TwistorPoint.from_fiber(tp.base, u2 / np.linalg.norm(u2), tp.sigma)
                Jf = twistor_J(scaled, tp2)
                worst = max(worst, np.max(np.abs(Jg.J - Jf.J)), np.max(np.abs(u2 - tp.fiber)))
                ang = subspace_angles(Jg.horizontal, Jf.horizontal)
                min_angle = min(min_angle, float(np.max(ang)))
    passed = worst <= tol and min_angle > angle_min
    return Check(6, "twistor J conformally invariant, horizontal space is not", passed,
                 {"max_J_diff": _sci(worst), "min_horizontal_angle": _sci(min_angle)})


# 7 ---------------------------------------------------------------------------

@_timed
def check_prop1(n=200, seed=7):
    rng = np.random.default_rng(seed)
    agree = 0
    halving_ok = True
    nonzero = 0
    for _ in range(n):
        M = ho.random_manifold_homology(rng)
        Zb = ho.gysin_sequence(M)
        agree += ho.prop1_evaluate(M, Zb).all_equal()
        t3m = M.H[3].torsion_order
        t3z = Zb.HZ[3].torsion_order
        if M.euler_class_zero:
            halving_ok &= t3z == t3m
        else:
            nonzero += 1
            halving_ok &= 2 * t3z == t3m
    z2 = ho.manifold("z2", b2=1, torsion=(2,))
    z2 = ho.ManifoldHomology(z2.H, False, 0)
    halving_ok &= ho.torsion_T3(z2).is_trivial()
    s4 = ho.gysin_split(ho.PRESETS["s4"])
    cp3 = tuple(ho.Z if k % 2 == 0 else ho.TRIVIAL for k in range(7))
    s4_ok = s4.HZ == cp3 and ho.prop1_evaluate(ho.PRESETS["s4"], s4).values() == (True,) * 4
    passed = agree == n and halving_ok and s4_ok and nonzero > 0
    return Check(7, "four conditions equivalent; torsion halving; S4 gives CP3", passed,
                 {"agree": f"{agree}/{n}", "euler_nonzero_instances": nonzero,
                  "halving": halving_ok, "s4_cohomology": [str(g) for g in s4.HZ]},
                 time_limit=1.0)


# 8 ---------------------------------------------------------------------------

@_timed
def check_s4_example():
    lat = ci.PRESETS["s4"]
    inv = ci.invariants(lat)
    wu = ci.wu_search(lat)
    passed = (inv.todd == Fraction(1, 2) and not inv.todd_integral
              and not wu.found and wu.conclusive)
    return Check(8, "S4 admits no almost-complex structure", passed,
                 {"todd": str(inv.todd), "todd_integral": inv.todd_integral,
                  "wu_status": wu.to_json()["status"],
                  "almost_complex": "no" if passed else "undetermined"})


# 9 ---------------------------------------------------------------------------

@_timed
def check_wu_positive(bound=6):
    res = {}
    cp2 = ci.PRESETS["cp2"]
    wu = ci.wu_search(cp2, bound)
    idx = [ci.index_c2(c, cp2) for c in wu.solutions]
    ok_cp2 = set(wu.solutions) == {(3,), (-3,)} and wu.count == 2 and idx == [0, 0]
    res["cp2"] = {"solutions": [list(c) for c in wu.solutions], "index_c2": idx}
    s2 = ci.PRESETS["s2xs2"]
    wu = ci.wu_search(s2, bound)
    ok_s2 = set(wu.solutions) == {(2, 2), (-2, -2)} and wu.count == 2
    res["s2xs2"] = {"solutions": [list(c) for c in wu.solutions]}
    k3 = ci.PRESETS["k3"]
    inv = ci.invariants(k3)
    wu = ci.wu_search(k3, bound, max_solutions=1)
    zero = (0,) * 22
    ok_k3 = (wu.solutions[:1] == (zero,) and inv.todd == 2 and ci.is_spin(k3)
             and ci.index_c2(zero, k3) == 0)
    res["k3"] = {"first_solution": list(wu.solutions[0]), "count_in_box": str(wu.count),
                 "todd": str(inv.todd), "spin": ci.is_spin(k3)}
    return Check(9, "Wu criterion positives on CP2, S2xS2, K3", ok_cp2 and ok_s2 and ok_k3,
                 res, time_limit=5.0)


# 10 --------------------------------------------------------------------------

VDB_FULL = ("s4", "cp2", "cp2bar", "s2xs2", "cp2#cp2bar")


@_timed
def check_van_der_blij(bound=6):
    details = {}
    passed = True
    for name in VDB_FULL:
        lat = ci.PRESETS[name]
        tau = ci.invariants(lat).tau
        _, norms = ci.characteristic_norms(lat, bound)
        ok = bool(np.all((norms - tau) % 8 == 0))
        passed &= ok
        details[name] = {"vectors": int(len(norms)), "ok": ok}
    # K3 is too large for one box; its orthogonal summands are enumerated exhaustively.
    for name, form in (("e8_negative", ci.negate(ci.E8)), ("hyperbolic", ci.HYPERBOLIC)):
        lat = ci.IntersectionLattice(form, 0, (0,) * len(form), name)
        tau = ci.invariants(lat).tau
        _, norms = ci.characteristic_norms(lat, bound)
        ok = bool(np.all((norms - tau) % 8 == 0))
        passed &= ok
        details[f"k3_summand_{name}"] = {"vectors": int(len(norms)), "ok": ok}
    return Check(10, "van der Blij: c.c = tau (mod 8) for every characteristic c", passed,
                 details, time_limit=5.0)


# 11 --------------------------------------------------------------------------

def check_determinism(runner):
    """``runner()`` must return the selftest JSON text; it is called twice."""
    t0 = time.perf_counter()
    a = runner()
    b = runner()
    check = Check(11, "selftest reports are byte-identical", a == b,
                  {"bytes": len(a)})
    check.elapsed = time.perf_counter() - t0
    return check


CHECKS = (
    check_standard_j,
    check_hodge_algebra,
    check_constant_curvature,
    check_weyl_conformal,
    check_integrability,
    check_J_conformal,
    check_prop1,
    check_s4_example,
    check_wu_positive,
    check_van_der_blij,
)


def run_all():
    return [fn() for fn in CHECKS]
