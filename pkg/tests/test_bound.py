import json
from fractions import Fraction

import pytest

from qanho.bound import (
    Bracket,
    Schedule,
    Stage,
    certified_digits,
    default_schedule,
    lambda_bounds,
    read_checkpoint,
    staged_ground_state,
)
from qanho.errors import CheckpointError, NoSignChangeError
from qanho.precision import make_context, to_decimal
from qanho.report import REFERENCE_TEMPLATE, compare_digits, reference_known_digits
from qanho.series import SeriesConfig, cancellation_digits, eval_y

from _oracles import bracket_invariant_violations


def _bracket(lo, hi, digits=30):
    ctx = make_context(digits)
    return Bracket(ctx.real(lo), ctx.real(hi))


def test_schedule_record_target():
    s = default_schedule(1184)
    last = s.stages[-1]
    assert Fraction(last.xi) == 16
    assert last.n == 16384
    assert last.working_digits >= 1184 + 1186


def test_schedule_small_target():
    s = default_schedule(10)
    assert len(s.stages) == 1
    assert s.stages[0].xi == "3.3"


def test_schedule_rejects_tiny_target():
    with pytest.raises(ValueError):
        default_schedule(9)


def test_schedule_monotone_and_doubling():
    s = default_schedule(1000)
    targets = [st.target_digits for st in s.stages]
    assert targets[-1] == 1000 and targets[0] >= 10
    for a, b in zip(targets, targets[1:]):
        assert b in (2 * a, 2 * a - 1)
    with pytest.raises(ValueError):
        Schedule((s.stages[1], s.stages[0]))


def test_schedule_digest_stable():
    assert default_schedule(120).digest() == default_schedule(120).digest()
    assert default_schedule(120).digest() != default_schedule(121).digest()


@pytest.mark.parametrize(
    "lo, hi, expected",
    [
        ("1.0603621", "1.06036220001", ("1.060362", 7)),
        ("1.0599", "1.0601", ("1.0", 2)),
        ("2.5", "3.5", ("", 0)),
        ("0.0012", "0.0013", ("0.001", 1)),
    ],
)
def test_certified_digits_examples(lo, hi, expected):
    assert certified_digits(_bracket(lo, hi)) == expected


def test_certified_digits_binary_endpoint():
    # 1.0603622 rounds to 1.06036219999... in binary, so the stored bracket
    # really does share eight digits
    assert certified_digits(_bracket("1.0603621", "1.0603622")) == ("1.0603621", 8)


def test_bracket_rejects_inversion():
    with pytest.raises(ValueError):
        _bracket("2", "1")


EPS0_30 = "1.06036209048418289964704601669"


def test_lambda_bounds_desk_case():
    ctx = make_context(60)
    b = lambda_bounds(200, "4", ("1.05", "1.08"), ctx, "1e-40")
    digits, count = certified_digits(b)
    assert count == 14
    assert compare_digits(digits) == count
    # 200 < 4 xi^3 terms: truncation moves both zeros below the eigenvalue
    assert b.hi < ctx.real(EPS0_30)


def test_lambda_bounds_calibrated_order():
    ctx = make_context(60)
    b = lambda_bounds(256, "4", ("1.05", "1.08"), ctx, "1e-40")
    digits, count = certified_digits(b)
    assert count >= 16
    assert compare_digits(digits) == count
    assert b.contains(ctx.real(EPS0_30))


def test_lambda_bounds_truncation_too_short():
    ctx = make_context(60)
    with pytest.raises(NoSignChangeError):
        lambda_bounds(50, "16", ("1.05", "1.08"), ctx, "1e-40")


def test_lambda_bounds_bisection_agrees_with_accelerated():
    ctx = make_context(60)
    fast = lambda_bounds(220, "3.8", None, ctx, "1e-30")
    slow = lambda_bounds(220, "3.8", None, ctx, "1e-30", accelerate=False)
    tol = ctx.real("1e-30")
    assert abs(fast.lo - slow.lo) <= 4 * tol
    assert abs(fast.hi - slow.hi) <= 4 * tol


def test_desk_run_matches_published_prefix(run_120):
    res = run_120.result
    assert res.certified_count >= 120
    assert compare_digits(res.digits) == res.certified_count


def _check_invariants(res, contexts):
    assert bracket_invariant_violations(res, contexts) == []


def test_bracketing_invariants_desk(run_120):
    _check_invariants(run_120.result, run_120.stage_contexts)


def test_bracketing_invariants_record(record_run):
    _check_invariants(record_run.result, record_run.stage_contexts)


def _known_within(ndigits):
    return sum(ch.isdigit() for ch in REFERENCE_TEMPLATE.replace(".", "")[:ndigits])


def test_record_run_reproduces_published_value(record_run):
    res = record_run.result
    assert res.certified_count >= 1184
    # every published digit inside the certified range agrees
    assert compare_digits(res.digits) == _known_within(res.certified_count)
    # the upper bound at xi = 16, printed to the published length, is the published constant
    positions = len(REFERENCE_TEMPLATE.replace(".", ""))
    assert compare_digits(to_decimal(res.bracket.hi, positions)) == len(reference_known_digits())


def test_record_run_cancellation(record_run):
    # at xi = 16 about 10^3 digits cancel when lam sits on the eigenvalue
    b = record_run.result.bracket
    ctx = b.lo.ctx
    lost = cancellation_digits(eval_y(SeriesConfig(b.n, ctx.real(b.xi), b.midpoint), ctx))
    assert 1000 <= lost <= 1400


def test_record_upper_bound_tail(record_run):
    hi = to_decimal(record_run.result.bracket.hi, 1200).replace(".", "")
    assert hi[1176:1195] == "2420714919290048732"


@pytest.mark.slow
def test_published_tail_is_beyond_certification():
    # certifying past the printed length shows the last printed digits are
    # those of the upper bound, not of the eigenvalue
    res = staged_ground_state(1195)
    assert res.certified_count >= 1195
    assert compare_digits(res.digits) == _known_within(1185)
    assert res.digits.replace(".", "")[1185:1191] == "874787"


def test_higher_precision_reproduces_certified_digits():
    ctx60, ctx120 = make_context(60), make_context(120)
    a = lambda_bounds(220, "3.8", None, ctx60, "1e-30")
    b = lambda_bounds(220, "3.8", None, ctx120, "1e-30")
    da, na = certified_digits(a)
    db, nb = certified_digits(b)
    assert compare_digits(da, db) >= min(na, nb) - 1


def test_checkpoint_written_and_resume_is_deterministic(tmp_path):
    ck = tmp_path / "run.json"
    full = staged_ground_state(60, checkpoint=ck)
    data = read_checkpoint(ck)
    assert data["stage"] == len(full.stages) - 1
    assert data["schedule_hash"] == default_schedule(60).digest()

    # stop after stage 0, then resume from its checkpoint
    schedule = default_schedule(60)
    ck2 = tmp_path / "partial.json"
    staged_ground_state(60, Schedule(schedule.stages[:1]), ck2)
    data = json.loads(ck2.read_text())
    data["schedule_hash"] = schedule.digest()
    ck2.write_text(json.dumps(data))
    resumed = staged_ground_state(60, None, ck2, resume=True)
    assert resumed.digits == full.digits
    assert resumed.bracket.lo.value == full.bracket.lo.value
    assert resumed.bracket.hi.value == full.bracket.hi.value


def test_resume_rejects_other_schedule(tmp_path):
    ck = tmp_path / "run.json"
    staged_ground_state(30, checkpoint=ck)
    with pytest.raises(CheckpointError):
        staged_ground_state(60, None, ck, resume=True)


def test_corrupt_checkpoint(tmp_path):
    ck = tmp_path / "bad.json"
    ck.write_text("{not json")
    with pytest.raises(CheckpointError):
        read_checkpoint(ck)
    ck.write_text("{}")
    with pytest.raises(CheckpointError):
        read_checkpoint(ck)


def test_explicit_schedule_is_not_extended():
    st = Stage(xi="3.3", n=144, working_digits=40, tol="1e-20", target_digits=10)
    res = staged_ground_state(50, Schedule((st,)))
    assert len(res.stages) == 1
    assert res.certified_count < 50
