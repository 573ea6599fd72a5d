"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the lines next to the
results.
"""

import math

import numpy as np
import pytest

from invdim import cli, linalg
from invdim.bounds import Direction, degree_check, growth_rates, thm11_min_d, thm12_bound, thm25_bound
from invdim.boxdim import ScaleSchedule, box_count, default_schedule, estimate_box_dimension, lemma21_estimate
from invdim.cloud import AmbientSpace, PointCloud
from invdim.report import RunConfig, build_report
from invdim.systems import REGISTRY, make_system

from helpers import FD_STEP, domain_points
from oracles import bisect_min_d, finite_difference_jacobian, gram_eigenvalues, ternary_digits

BUDGET = 100_000


@pytest.fixture
def verdict(capsys):
    """Collects named checks and prints one PASS/FAIL line for the criterion."""
    checks = []

    def record(name, ok, detail=""):
        checks.append((name, bool(ok), detail))

    def finish(number, title):
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{n}={'ok' if good else 'FAIL'}{' (' + d + ')' if d else ''}" for n, good, d in checks)
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number} [{title}]: {detail}")
        failed = [c for c in checks if not c[1]]
        assert not failed, failed

    record.finish = finish
    return record


def test_criterion_1_linalg_oracle(verdict):
    rng = np.random.default_rng(20240601)
    worst_sv, worst_inv = 0.0, 0.0
    for i in range(1000):
        n = 2 + i % 2
        a = rng.normal(size=(n, n))
        s = linalg.singular_values(a)
        exact = np.sqrt([float(v) for v in gram_eigenvalues(a)])
        worst_sv = max(worst_sv, float(np.max(np.abs(s - exact) / exact)))
        inv = np.linalg.inv(a)
        prod = linalg.singular_values(inv)[-1] * linalg.operator_norm(a)
        worst_inv = max(worst_inv, abs(prod - 1.0))
    verdict("singular_values_rel_err", worst_sv <= 1e-8, f"{worst_sv:.2e}")
    verdict("Sn(inv)*S1", worst_inv <= 1e-9, f"{worst_inv:.2e}")
    verdict.finish(1, "linalg oracle suite")


def test_criterion_2_cantor_dimension(verdict):
    sys_ = make_system("cookie_cutter")
    c = sys_.sample(BUDGET, seed=0)
    fit = estimate_box_dimension(c, default_schedule(sys_, c))
    target = math.log(2) / math.log(3)
    verdict("slope", abs(fit.dimension - target) <= 0.05, f"{fit.dimension:.4f} vs {target:.4f}")
    counts_ok = True
    for k in range(1, 9):
        oracle = len({tuple(ternary_digits(x, k)) for x in c.points[:, 0]})
        counts_ok &= box_count(c, 3.0**-k) == 2**k == oracle
    verdict("exact_counts_k<=8", counts_ok)
    verdict.finish(2, "Cantor dimension")


def test_criterion_3_horseshoe(verdict):
    sys_ = make_system("linear_horseshoe", lam=0.2, mu=4)
    c = sys_.sample(BUDGET, seed=0)
    box = estimate_box_dimension(c, default_schedule(sys_, c)).dimension
    verdict("empirical", abs(box - 0.9307) <= 0.08, f"{box:.4f}")
    t11 = thm11_min_d(sys_, c).value
    oracle = bisect_min_d(0.8, 0.2, 2)
    # 1.86135 is the 5-place rounding of 2 - log 1.25 / log 5 = 1.8613531...; the 1e-6 check is against the oracle
    verdict("thm11", abs(t11 - oracle) <= 1e-6 and round(t11, 5) == 1.86135, f"{t11:.8f} vs bisection {oracle:.8f}")
    t25 = thm25_bound(growth_rates(sys_, c, 32, Direction.INVERSE), 2).value
    verdict("thm25==thm11", abs(t25 - t11) <= 1e-9, f"{abs(t25 - t11):.1e}")
    report = build_report(RunConfig("linear_horseshoe", {"lam": 0.2, "mu": 4}, budget=BUDGET, deterministic=True))
    verdict("dominance", report.ok and set(report.verdicts) == {"Thm11", "Thm25"})
    verdict.finish(3, "horseshoe")


def test_criterion_4_cat_map(verdict):
    sys_ = make_system("cat_map")
    c = sys_.sample(BUDGET, seed=0)
    t11 = thm11_min_d(sys_, c)
    verdict("thm11==2", t11.applicable and t11.value == 2.0, repr(t11.value))
    box = estimate_box_dimension(c, default_schedule(sys_, c)).dimension
    verdict("empirical", abs(box - 2.0) <= 0.05, f"{box:.4f}")
    verdict.finish(4, "cat map")


def test_criterion_5_degree_bounds(verdict):
    for name, y, degree, n in (("circle_expanding", [0.5], 3, 1), ("toral_endomorphism", [0.5, 0.5], 6, 2)):
        sys_ = make_system(name)
        c = sys_.sample(BUDGET, seed=0)
        found = degree_check(sys_, y)
        verdict(f"{name}.degree", found == degree, str(found))
        bound = thm12_bound(growth_rates(sys_, c, 32), found, n).value
        verdict(f"{name}.thm12", abs(bound - n) <= 1e-9, f"{bound!r}")
        box = estimate_box_dimension(c, default_schedule(sys_, c)).dimension
        verdict(f"{name}.empirical", abs(box - n) <= 0.05, f"{box:.4f}")
    verdict.finish(5, "degree bounds")


def test_criterion_6_henon(verdict):
    report = build_report(RunConfig("henon", {"a": 1.4, "b": 0.3}, budget=BUDGET, m_max=32, deterministic=True))
    rmk = report.bound("Rmk24")
    b_hat = report.rates["Forward"].b_hat
    verdict("rmk24_inapplicable", not rmk.applicable, rmk.reason)
    verdict("b_hat=log0.3", abs(b_hat - math.log(0.3)) <= 1e-6, f"{b_hat:.9f}")
    t25 = report.bound("Thm25")
    box = report.empirical_box.dimension
    verdict("thm25_in_(1.2,2)", t25.applicable and 1.2 < t25.value < 2.0, f"{t25.value:.4f}")
    verdict("dominates", t25.value >= box, f"empirical {box:.4f}")
    verdict.finish(6, "Henon")


def test_criterion_7_lemma21_agreement(verdict):
    for name in sorted(REGISTRY):
        sys_ = make_system(name)
        c = sys_.sample(BUDGET, seed=0)
        sched = default_schedule(sys_, c)
        box = estimate_box_dimension(c, sched).dimension
        lem = lemma21_estimate(c, sched).dimension
        verdict(name, abs(box - lem) <= 0.15, f"{box:.3f}/{lem:.3f}")
    k = 512
    axis = (np.arange(k) + 0.5) / k
    square = PointCloud(AmbientSpace.euclidean(2), np.stack(np.meshgrid(axis, axis), -1).reshape(-1, 2))
    full = lemma21_estimate(square, ScaleSchedule.geometric(2.0**-5, 0.5, 3)).dimension
    verdict("full_square", abs(full - 2.0) <= 0.1, f"{full:.3f}")
    point = PointCloud(AmbientSpace.euclidean(2), np.array([[0.3, 0.6]]))
    single = lemma21_estimate(point, ScaleSchedule.geometric(0.25, 0.5, 8)).dimension
    verdict("single_point", abs(single) <= 0.1, f"{single:.3f}")
    verdict.finish(7, "neighbourhood-volume route")


def test_criterion_8_determinism(verdict, tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "8"):
        monkeypatch.setenv("INVDIM_THREADS", threads)
        out = tmp_path / f"report_{threads}.json"
        cli.main(["report", "--system", "henon", "--budget", str(BUDGET), "--deterministic", "--out", str(out)])
        outputs.append(out.read_bytes())
    verdict("byte_identical", outputs[0] == outputs[1] and len(outputs[0]) > 0, f"{len(outputs[0])} bytes")
    verdict.finish(8, "determinism")


def test_criterion_9_finite_difference_jacobians(verdict):
    for name in sorted(REGISTRY):
        sys_ = make_system(name)
        worst = 0.0
        for x in domain_points(sys_, 100, seed=2024):
            exact = sys_.jacobian(x)
            fd = finite_difference_jacobian(sys_.evaluate, x, FD_STEP, wrap=sys_.ambient.is_torus)
            worst = max(worst, float(np.max(np.abs(fd - exact)) / np.max(np.abs(exact))))
        verdict(name, worst <= 1e-4, f"{worst:.1e}")
    verdict.finish(9, "finite-difference Jacobians")
