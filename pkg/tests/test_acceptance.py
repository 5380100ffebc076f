"""Acceptance criteria, one test each.

Every test records a one-line verdict that the terminal summary prints as
``criterion N: PASS|FAIL  detail``; run ``pytest tests/test_acceptance.py``
to see just these.
"""

import io
import json
import statistics
import time
from fractions import Fraction

import mpmath

from qanho.bound import certified_digits, staged_ground_state
from qanho.cli import run_cli
from qanho.hill import (
    EVEN,
    build_hamiltonian,
    default_working_digits,
    eigenvector_matrix,
    lowest_eigenvalues,
    matrix_element,
)
from qanho.precision import make_context, sqrt, to_decimal
from qanho.report import HILL_SECTION_VALUE, REFERENCE_TEMPLATE, compare_digits, emit_pgm, reference_known_digits
from qanho.series import coefficients

from _oracles import bracket_invariant_violations, quadrature_element, record, to_mp

HILL_STATES = (25, 50, 75, 100)
HILL_DIGITS_PER_STATE = 0.2


def _cli(*argv):
    out, err = io.BytesIO(), io.StringIO()
    code = run_cli(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def _hill_ground(N):
    ctx = make_context(default_working_digits(HILL_DIGITS_PER_STATE * N))
    M = build_hamiltonian(N, EVEN, ctx)
    (b,) = lowest_eigenvalues(M, 1, ctx, f"1e-{ctx.decimal_digits - 10}")
    return b


def test_criterion_1_desk_prefix():
    t0 = time.perf_counter()
    code, out, _ = _cli("ground-state", "--digits", "120", "--json", "-")
    elapsed = time.perf_counter() - t0
    d = json.loads(out)
    match = compare_digits(d["certified_digits"])
    hill_block = compare_digits(HILL_SECTION_VALUE)
    ok = code == 0 and d["certified_count"] >= 120 and match == d["certified_count"] and hill_block >= 120 and elapsed < 300
    record(1, ok, f"{d['certified_count']} certified, {match} match the published value, "
                  f"Hill-section block agrees on {hill_block}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_record_value(record_run):
    res = record_run.result
    positions = len(REFERENCE_TEMPLATE.replace(".", ""))
    in_range = sum(ch.isdigit() for ch in REFERENCE_TEMPLATE.replace(".", "")[: res.certified_count])
    match = compare_digits(res.digits)
    upper = compare_digits(to_decimal(res.bracket.hi, positions))
    known = len(reference_known_digits())
    ok = res.certified_count >= 1184 and match == in_range and upper == known
    record(2, ok, f"{res.certified_count} certified (xi={res.bracket.xi}, n={res.bracket.n}), "
                  f"all {match} published digits in range agree; upper bound reproduces {upper}/{known} "
                  f"printed digits; {sum(res.elapsed):.1f}s")
    assert ok


def test_criterion_3_hill_scaling():
    counts = []
    for N in HILL_STATES:
        digits, _ = certified_digits(_hill_ground(N))
        counts.append(compare_digits(digits))
    slope = statistics.linear_regression(HILL_STATES, counts).slope
    ok = abs(slope - 0.2) <= 0.1 and counts[-1] >= 10
    record(3, ok, f"matching digits {dict(zip(HILL_STATES, counts))}, slope {slope:.3f} per even state")
    assert ok


def test_criterion_4_two_by_two():
    ctx = make_context(40)
    M = build_hamiltonian(2, EVEN, ctx)
    dense = [[e.value for e in row] for row in M.dense()]
    r2 = sqrt(ctx.real(2)).value
    entries_ok = dense == [[ctx.mpfr(Fraction(5, 4)), r2], [r2, ctx.mpfr(Fraction(49, 4))]]
    tol = ctx.real("1e-35")
    (b,) = lowest_eigenvalues(M, 1, ctx, tol)
    exact = (27 - 2 * sqrt(ctx.real(129))) / 4
    ok = entries_ok and b.contains(exact) and b.width <= tol
    record(4, ok, f"entries exact: {entries_ok}; bracket width {to_decimal(b.width, 3)} contains (27-2*sqrt(129))/4 = {to_decimal(exact, 20)}")
    assert ok


def test_criterion_5_matrix_element_quadrature():
    ctx = make_context(40)
    worst = mpmath.mpf(0)
    bad = []
    for m in range(13):
        for n in range(13):
            got = to_mp(matrix_element(m, n, ctx))
            want = quadrature_element(min(m, n), max(m, n))
            with mpmath.workdps(50):
                if abs(want) < mpmath.mpf(10) ** -30:
                    if got != 0:
                        bad.append((m, n))
                    continue
                rel = abs(got - want) / abs(want)
            worst = max(worst, rel)
            if rel > mpmath.mpf(10) ** -20:
                bad.append((m, n))
    ok = not bad
    record(5, ok, f"169 elements, worst relative error {mpmath.nstr(worst, 3)}" + (f", failing {bad}" if bad else ""))
    assert ok


def test_criterion_6_cross_method():
    series = staged_ground_state(15)
    hill_digits, hill_count = certified_digits(_hill_ground(100))
    common = min(series.certified_count, hill_count)
    agree = compare_digits(series.digits, hill_digits)
    ok = series.certified_count >= 15 and agree >= common
    record(6, ok, f"series {series.certified_count} digits, Hill N=100 {hill_count} digits, agree on {agree}/{common}")
    assert ok


def test_criterion_7_bracketing_invariants(run_120, record_run):
    problems = []
    stages = 0
    for run in (run_120, record_run):
        problems += bracket_invariant_violations(run.result, run.stage_contexts)
        stages += len(run.result.stages)
    ok = not problems
    record(7, ok, f"{stages} stages checked" + (f"; {problems}" if problems else ""))
    assert ok


def test_criterion_8_ode_residual():
    checked = 0
    failures = []
    for n in range(6, 41, 2):
        for lam in (Fraction(0), Fraction(1), Fraction(106036, 100000), Fraction(-7, 3), Fraction(22, 7)):
            a = dict(coefficients(n, lam))
            get = lambda k: a.get(k, Fraction(0)) if k >= 0 else Fraction(0)
            for j in range(0, n - 5):
                checked += 1
                if -(j + 2) * (j + 1) * get(j + 2) + get(j - 4) - lam * get(j) != 0:
                    failures.append((n, lam, j))
    ok = not failures
    record(8, ok, f"{checked} coefficients vanish exactly" if ok else f"nonzero at {failures[:5]}")
    assert ok


def test_criterion_9_checkerboard():
    N = 100
    m = eigenvector_matrix(N, make_context(30))
    px = emit_pgm(m)[len(f"P5\n{N} {N}\n255\n"):]
    mismatched = zero_pixels = 0
    bad = []
    for c in range(N):
        parity = next(r % 2 for r in range(N) if not m[r][c].is_zero())
        for r in range(N):
            if r % 2 != parity:
                mismatched += 1
                if not m[r][c].is_zero():
                    bad.append((r, c))
                if px[r * N + c] == 0:
                    zero_pixels += 1
    ok = not bad and zero_pixels == mismatched == N * N // 2
    record(9, ok, f"{mismatched} parity-mismatched entries, all exact zeros, {zero_pixels} black pixels")
    assert ok


def test_criterion_10_determinism(tmp_path, monkeypatch):
    import qanho.bound as bound
    from qanho.errors import ConvergenceError

    a = _cli("ground-state", "--digits", "120", "--no-timings")[1]
    b = _cli("ground-state", "--digits", "120", "--no-timings")[1]
    h1 = _cli("hill", "--states", "30", "--eigenvalues", "2", "--no-timings")[1]
    h2 = _cli("hill", "--states", "30", "--eigenvalues", "2", "--no-timings")[1]

    real = bound.lambda_bounds

    def interrupted(*args, **kw):
        if kw.get("stage") == 2:
            raise ConvergenceError("simulated interruption")
        return real(*args, **kw)

    ck = tmp_path / "ck.json"
    monkeypatch.setattr(bound, "lambda_bounds", interrupted)
    first = _cli("ground-state", "--digits", "120", "--no-timings", "--checkpoint", str(ck))[0]
    monkeypatch.setattr(bound, "lambda_bounds", real)
    code, resumed, _ = _cli("ground-state", "--digits", "120", "--no-timings", "--checkpoint", str(ck), "--resume")
    ok = a == b and h1 == h2 and first == 1 and code == 0 and resumed == a
    record(10, ok, f"repeat runs byte-identical: {a == b and h1 == h2}; resume after stage 1 identical: {resumed == a}")
    assert ok
