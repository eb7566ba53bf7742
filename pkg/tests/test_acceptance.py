"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line."""

import time

import pytest

from cubedr import cli
from cubedr.assembly import build_complex, cohomology_report, complex_elements
from cubedr.cubemesh import build_mesh
from cubedr.nonconform import (PI_Q_EXPECTED, _expected_poly, boundary_flux,
                               build_component_element, component_spaces, korn_study,
                               split_residual, poisson_study, pi_q_table)
from cubedr.polyform import Polynomial, exps_total
from cubedr.refelem import build_element, is_unisolvent, legal_degrees
from cubedr.xform import (check_bubble_preservation, check_commute, dof_transfer,
                          elements_equal, serendipity_reduce)

FAMILIES = ["Qminus", "S", "Sminus", "Hermite", "Adini", "TrimmedAdini"]


@pytest.fixture
def report(capsys):
    def _report(num, name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        assert ok, f"criterion {num} failed: {name} {detail}"
    return _report


def test_criterion_01_unisolvence(report):
    t0 = time.time()
    bad = []
    for fam in FAMILIES:
        for k in range(3):
            for r in range(legal_degrees(fam, 2, k), 6):
                if not is_unisolvent(build_element(fam, 2, k, r)):
                    bad.append((fam, 2, k, r))
        for k in range(4):
            lo = legal_degrees(fam, 3, k)
            for r in (lo, lo + 1):
                if not is_unisolvent(build_element(fam, 3, k, r)):
                    bad.append((fam, 3, k, r))
    for args in [("ComponentPx", 2, 1, 2), ("ComponentPx", 3, 1, 2), ("ReducedAdini", 2, 1, 2)]:
        if not is_unisolvent(build_element(*args)):
            bad.append(args)
    dt = time.time() - t0
    report(1, "unisolvence suite", not bad and dt < 120, f"failures={bad} time={dt:.1f}s")


def test_criterion_02_dof_counts(report):
    interior = lambda fam, ks, r: [build_element(fam, 2, k, r - (k if fam == "Adini" else 0))
                                   .interior_count() for k in ks]
    px = build_component_element(3)
    a48 = build_element("Adini", 3, 1, 2)
    t = a48.dof_table()
    ok = (interior("Hermite", (0, 1, 2), 3) == [4, 12, 9]
          and interior("Adini", (1, 2), 3) == [2, 3]
          and interior("TrimmedAdini", (1, 2), 3) == [5, 6]
          and build_element("ReducedAdini", 2, 1, 2).interior_count() == 0
          and build_element("ReducedAdini", 2, 2, 1).interior_count() == 1
          and (px.dim, px.dim - px.interior_count(), px.interior_count()) == (20, 16, 4)
          and len(component_spaces(3)["A"]) == 16
          and a48.dim == 48 and (sum(t[0]), sum(t[1]), sum(t[2])) == (24, 12, 12))
    report(2, "dimension and DoF counts", ok)


def test_criterion_03_local_exactness(report):
    sums = {}
    cases = [(fam, 2, 3) for fam in ("Hermite", "Adini", "TrimmedAdini", "ReducedAdini")]
    cases += [(fam, 3, 3) for fam in ("Hermite", "Adini", "TrimmedAdini")]
    for fam, n, r in cases:
        dims = [e.dim for e in complex_elements(fam, n, r)]
        sums[(fam, n)] = (dims, sum((-1) ** k * d for k, d in enumerate(dims)))
    ok = all(s == 1 for _, s in sums.values())
    ok = ok and sums[("Hermite", 2)][0] == [16, 24, 9] and sums[("Adini", 2)][0] == [12, 14, 3]
    ok = ok and sums[("TrimmedAdini", 2)][0] == [12, 17, 6]
    ok = ok and sums[("ReducedAdini", 2)][0] == [12, 12, 1]
    report(3, "single-cell alternating sums", ok, str({f"{f}{n}D": s for (f, n), (_, s) in sums.items()}))


def test_criterion_04_global_exactness(report):
    t0 = time.time()
    results = {}
    for fam in ("Hermite", "Adini", "TrimmedAdini", "ReducedAdini"):
        for N in (2, 3):
            rep = cohomology_report(build_complex(build_mesh(2, (N, N)), fam, 3))
            results[(fam, f"{N}x{N}")] = rep.exact
    for fam in ("Hermite", "Adini", "TrimmedAdini"):
        rep = cohomology_report(build_complex(build_mesh(3, (2, 2, 2)), fam, 3))
        results[(fam, "2x2x2")] = rep.exact
    dt = time.time() - t0
    failed = [k for k, v in results.items() if not v]
    report(4, "global exactness", not failed and dt < 600, f"failed={failed} time={dt:.1f}s")


def test_criterion_05_operation_algebra(report):
    bad = []
    for n, r in [(2, 3), (2, 4), (3, 3)]:
        for k in range(n + 1):
            q = build_element("Qminus", n, k, r)
            g = build_element("Hermite", n, k, r)
            for target in ("S", "Sminus"):
                if not check_commute(q, target):
                    bad.append(("commute", n, r, k, target))
            if k < 2:
                if not check_bubble_preservation(q):
                    bad.append(("bubbles", n, r, k))
                if not elements_equal(dof_transfer(q)[0], g):
                    bad.append(("T(Q-)=G-", n, r, k))
            if not elements_equal(serendipity_reduce(g, "S")[0], build_element("Adini", n, k, r - k)):
                bad.append(("Q(G-)=A", n, r, k))
            if not elements_equal(serendipity_reduce(g, "Sminus")[0],
                                  build_element("TrimmedAdini", n, k, r)):
                bad.append(("Q_S-(G-)=A-", n, r, k))
    report(5, "operation algebra", not bad, f"failures={bad}")


def test_criterion_06_component_identities(report):
    t1 = all(q == _expected_poly(PI_Q_EXPECTED[name]) and u - q == w
             for name, u, q, w in pi_q_table())
    mono = all(split_residual(Polynomial.monomial(e)).is_zero() for e in exps_total(3, 4))
    rand = all(split_residual(u).is_zero() for u in cli.random_cubics(0))
    P = component_spaces(3)["P"]
    flux = len(P) == 20 and all(c == 0 for v in P for c in boundary_flux(v))
    report(6, "component identities", t1 and mono and rand and flux,
           f"table={t1} monomials={mono} cubics={rand} flux={flux}")


def _rate_ok(res):
    return 0.85 <= res.rate_H1h[-1] <= 1.3 and res.rate_L2[-1] >= 1.6


def test_criterion_07_convergence(report):
    t0 = time.time()
    comp = poisson_study(2, "component", [4, 8, 16, 32], probe=False)
    vec = poisson_study(2, "adini1", [4, 8, 16, 32], probe=False)
    t2 = time.time() - t0
    t0 = time.time()
    c3 = poisson_study(3, "component", [2, 4, 8], probe=False)
    t3 = time.time() - t0
    mono = all(b < a for a, b in zip(c3.err_H1h, c3.err_H1h[1:]))
    ok = _rate_ok(comp) and _rate_ok(vec) and mono and c3.rate_H1h[-1] >= 0.7
    ok = ok and t2 < 300 and t3 < 1200
    report(7, "Poisson convergence", ok,
           f"2D H1={comp.rate_H1h[-1]:.3f} L2={comp.rate_L2[-1]:.3f} "
           f"vec H1={vec.rate_H1h[-1]:.3f} L2={vec.rate_L2[-1]:.3f} "
           f"3D H1={c3.rate_H1h[-1]:.3f}")


def test_criterion_08_consistency_probe(report):
    res = poisson_study(2, "component", [4, 8, 16, 32], probe=True, control=True)
    rate = res.rate_consistency[-1]
    ctl = max(res.conforming_consistency)
    report(8, "consistency probe", rate >= 0.8 and ctl <= 1e-9,
           f"rate={rate:.3f} control={ctl:.2e}")


def test_criterion_09_korn(report):
    t0 = time.time()
    lam = korn_study([2, 4, 8])
    var = (max(lam) - min(lam)) / max(lam)
    dt = time.time() - t0
    report(9, "discrete Korn", min(lam) > 0 and var < 0.25 and dt < 120,
           f"lambda_min={[round(v, 4) for v in lam]} variation={var:.3f}")


SUITE = [
    ["element-info", "--family", "hermite", "--n", "2", "--k", "1", "--r", "3"],
    ["unisolvence", "--family", "trimmed-adini", "--n", "3", "--k", "1", "--r", "3"],
    ["bubbles", "--family", "component-px", "--n", "3", "--k", "1", "--r", "2"],
    ["commute", "--base", "qminus", "--target", "Sminus", "--n", "2", "--r", "3"],
    ["exactness", "--family", "adini", "--n", "2", "--r", "3", "--mesh", "2x2"],
    ["poisson", "--dim", "2", "--family", "component", "--levels", "3"],
    ["poisson", "--dim", "2", "--family", "adini1", "--levels", "3", "--format", "csv"],
    ["korn", "--levels", "2"],
    ["interp-identities", "--seed", "0"],
]


def test_criterion_10_determinism(report, tmp_path):
    runs = []
    for rep in range(2):
        out = []
        for i, argv in enumerate(SUITE):
            path = tmp_path / f"run{rep}_{i}.out"
            status = cli.main(argv + ["-q", "-o", str(path)])
            out.append((status, path.read_bytes()))
        runs.append(out)
    same = runs[0] == runs[1]
    statuses = [s for s, _ in runs[0]]
    report(10, "deterministic reports", same and statuses == [0] * len(SUITE),
           f"statuses={statuses}")
