"""Bracketing the ground-state eigenvalue between the zeros of y_n(xi; .) and y_n'(xi; .).

For a trial ``lam`` just below the eigenvalue the truncated series solution
``y_n`` stays positive out to ``xi`` while its slope turns over; just above,
``y_n`` itself crosses zero.  The lam-zero of ``y_n'(xi; .)`` is therefore a
lower bound and the lam-zero of ``y_n(xi; .)`` an upper bound, and the gap
shrinks like ``exp(-2 xi**3 / 3)``.

:func:`staged_ground_state` escalates ``(xi, n, precision)`` over a
:class:`Schedule`, seeding every stage from the previous bracket and writing
a JSON checkpoint after each one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

from .errors import CheckpointError, ConvergenceError, NoSignChangeError
from .precision import (
    BigReal,
    PrecisionContext,
    decimal_expansion,
    exact_repr,
    find_root_bracketed,
    log2_abs,
    make_context,
    sign_scan,
)
from .series import SeriesConfig, cancellation_digits, eval_y, eval_y_prime

logger = logging.getLogger(__name__)

__all__ = [
    "Bracket",
    "Stage",
    "Schedule",
    "GroundStateResult",
    "lambda_bounds",
    "default_schedule",
    "stage_for_xi",
    "staged_ground_state",
    "certified_digits",
    "read_checkpoint",
    "SEED_INTERVAL",
]

SEED_INTERVAL = ("1.05", "1.08")
SCAN_STEPS = 32
WIDEN_ATTEMPTS = 4
RESEED_FACTOR = 4
TOL_MARGIN_DIGITS = 10
MAX_EXTRA_STAGES = 4
_LN10 = math.log(10)


@dataclass(frozen=True)
class Bracket:
    """Lower/upper bound pair on an eigenvalue and the stage that produced it."""

    lo: BigReal
    hi: BigReal
    stage: int = 0
    xi: Optional[str] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError(f"bracket is inverted: lo={self.lo} > hi={self.hi}")

    @property
    def width(self) -> BigReal:
        return self.hi - self.lo

    @property
    def midpoint(self) -> BigReal:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Stage:
    xi: str
    n: int
    working_digits: int
    tol: str
    target_digits: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "xi": self.xi,
            "n": self.n,
            "working_digits": self.working_digits,
            "tol": self.tol,
            "target_digits": self.target_digits,
        }


@dataclass(frozen=True)
class Schedule:
    stages: Tuple[Stage, ...]

    def __post_init__(self):
        if not self.stages:
            raise ValueError("a schedule needs at least one stage")
        object.__setattr__(self, "stages", tuple(self.stages))
        for prev, cur in zip(self.stages, self.stages[1:]):
            if (
                Fraction(cur.xi) < Fraction(prev.xi)
                or cur.n < prev.n
                or cur.working_digits < prev.working_digits
            ):
                raise ValueError(f"schedule must be non-decreasing in xi, n and working digits: {prev} -> {cur}")

    def digest(self) -> str:
        payload = json.dumps([s.as_dict() for s in self.stages], sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class GroundStateResult:
    bracket: Bracket
    digits: str
    certified_count: int
    elapsed: List[float]
    stages: List[Bracket] = field(default_factory=list)
    working_digits: List[int] = field(default_factory=list)
    schedule: Optional[Schedule] = None


def _even_ceil(x: float) -> int:
    n = math.ceil(x)
    return n + (n % 2)


def _xi_for_digits(digits: int) -> Fraction:
    # decaying-solution scale exp(-xi**3/3) squared; round up to one decimal
    xi = (digits * 3 * _LN10 / 2) ** (1 / 3)
    return Fraction(math.ceil(round(xi * 10, 9)), 10)


def _format_xi(xi: Fraction) -> str:
    whole, frac = divmod(xi * 10, 10)
    return f"{int(whole)}.{int(frac)}"


def stage_for_xi(xi: Union[Fraction, str], target_digits: Optional[int] = None) -> Stage:
    """Calibrated stage parameters for a given evaluation point."""
    xi = Fraction(xi)
    xi3 = float(xi) ** 3
    expected = math.ceil(2 * xi3 / (3 * _LN10))
    target = target_digits if target_digits is not None else expected
    return Stage(
        xi=_format_xi(xi),
        n=max(_even_ceil(4 * xi3), 6),
        working_digits=max(target + expected, 10),
        tol=f"1e-{expected + TOL_MARGIN_DIGITS}",
        target_digits=target,
    )


def default_schedule(target_digits: int) -> Schedule:
    """Stages whose digit targets double up to ``target_digits``.

    Each stage uses ``xi = ((3 ln 10 / 2) t)**(1/3)`` rounded up to 0.1,
    ``n = 4 xi**3`` (even) and ``t + 2 xi**3 / (3 ln 10)`` working digits.
    """
    if target_digits < 10:
        raise ValueError(f"target_digits must be >= 10, got {target_digits}")
    targets = [target_digits]
    while targets[0] / 2 >= 10:
        targets.insert(0, math.ceil(targets[0] / 2))
    stages = [stage_for_xi(_xi_for_digits(t), t) for t in targets]
    return Schedule(tuple(stages))


def _locate_sign_change(f, a: BigReal, b: BigReal) -> Tuple[BigReal, BigReal]:
    fa, fb = f(a).sign(), f(b).sign()
    if fa * fb < 0:
        return a, b
    cell = sign_scan(f, a, b, SCAN_STEPS)
    if cell is not None:
        return cell
    center, half = (a + b) / 2, (b - a) / 2
    for _ in range(WIDEN_ATTEMPTS):
        half = half * 2
        cell = sign_scan(f, center - half, center + half, SCAN_STEPS)
        if cell is not None:
            return cell
    raise NoSignChangeError(
        f"no sign change near [{a}, {b}]; the truncation order is too short for this xi "
        "or the seed interval misses the eigenvalue"
    )


def lambda_bounds(
    n: int,
    xi,
    start: Union[Bracket, Sequence, None],
    ctx: PrecisionContext,
    tol,
    *,
    stage: int = 0,
    accelerate: bool = True,
    max_iter: Optional[int] = None,
) -> Bracket:
    """Bracket the ground state between the lam-zeros of ``y_n'(xi)`` and ``y_n(xi)``.

    ``start`` is a seed interval containing the eigenvalue (a Bracket, a
    ``(lo, hi)`` pair, or ``None`` for ``[1.05, 1.08]``).  The returned
    bracket spans the outer ends of the two root-finder sign brackets, so it
    contains both zeros and not merely their tol-approximations.
    """
    if start is None:
        start = SEED_INTERVAL
    if isinstance(start, Bracket):
        a, b = ctx.real(start.lo), ctx.real(start.hi)
    else:
        a, b = ctx.real(start[0]), ctx.real(start[1])
    xi_r = ctx.real(xi)
    tol_r = ctx.real(tol)
    if max_iter is None:
        max_iter = max(100, math.ceil(log2_abs(b - a) - log2_abs(tol_r)) + 10)

    def y_at(lam):
        return eval_y(SeriesConfig(n, xi_r, lam), ctx).value

    def dy_at(lam):
        return eval_y_prime(SeriesConfig(n, xi_r, lam), ctx).value

    results = []
    for f in (y_at, dy_at):
        lo, hi = _locate_sign_change(f, a, b)
        results.append(
            find_root_bracketed(f, lo, hi, ctx, tol_r, max_iter=max_iter, accelerate=accelerate, full_output=True)
        )
    upper, lower = results
    if not lower.root < upper.root:
        # the two zeros came out in the unexpected order; keep an honest bracket
        lower, upper = upper, lower
    if not lower.root < upper.root:
        raise ConvergenceError(f"bound roots coincide at {lower.root}; tighten tol or raise precision")
    xi_s = xi if isinstance(xi, str) else str(xi_r)
    return Bracket(lo=lower.lo, hi=upper.hi, stage=stage, xi=xi_s, n=n)


def certified_digits(b: Bracket) -> Tuple[str, int]:
    """Longest common prefix of the (truncated) decimal expansions of ``lo`` and ``hi``.

    Expansions are truncated toward zero, so every number in ``[lo, hi]``
    shares the prefix.  The count excludes the decimal point.
    """
    ndig = b.lo.ctx.effective_digits
    neg_lo, d_lo, e_lo = decimal_expansion(b.lo, ndig, "truncate")
    neg_hi, d_hi, e_hi = decimal_expansion(b.hi, ndig, "truncate")
    if neg_lo != neg_hi or e_lo != e_hi or b.lo.is_zero() or b.hi.is_zero():
        return "", 0
    count = 0
    for x, y in zip(d_lo, d_hi):
        if x != y:
            break
        count += 1
    common = d_lo[:count]
    if not common:
        return "", 0
    sign = "-" if neg_lo else ""
    if e_lo >= 0:
        head, tail = common[: e_lo + 1], common[e_lo + 1 :]
        text = head + ("." + tail if tail else "")
    else:
        text = "0." + "0" * (-e_lo - 1) + common
    return sign + text, count


def _write_checkpoint(path: Path, payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_checkpoint(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    missing = {"stage", "xi", "n", "working_digits", "lo", "hi", "schedule_hash"} - set(data)
    if missing:
        raise CheckpointError(f"checkpoint {path} lacks fields {sorted(missing)}")
    return data


def _checkpoint_payload(b: Bracket, ctx: PrecisionContext, digest: str, elapsed: List[float]) -> dict:
    return {
        "stage": b.stage,
        "xi": b.xi,
        "n": b.n,
        "working_digits": ctx.effective_digits,
        "lo": exact_repr(b.lo),
        "hi": exact_repr(b.hi),
        "schedule_hash": digest,
        "elapsed": elapsed,
    }


def _bracket_from_checkpoint(data: dict) -> Tuple[Bracket, PrecisionContext]:
    ctx = make_context(int(data["working_digits"]), 0)
    b = Bracket(
        lo=ctx.real(data["lo"]),
        hi=ctx.real(data["hi"]),
        stage=int(data["stage"]),
        xi=data["xi"],
        n=int(data["n"]),
    )
    return b, ctx


def _seed_from(prev: Bracket, ctx: PrecisionContext) -> Tuple[BigReal, BigReal]:
    lo, hi = ctx.real(prev.lo), ctx.real(prev.hi)
    mid = (lo + hi) / 2
    half = (hi - lo) * RESEED_FACTOR
    return mid - half, mid + half


def staged_ground_state(
    target_digits: int,
    schedule: Optional[Schedule] = None,
    checkpoint=None,
    *,
    resume: bool = False,
    accelerate: bool = True,
    on_stage: Optional[Callable[[Bracket, PrecisionContext, float], None]] = None,
) -> GroundStateResult:
    """Run the bounding algorithm stage by stage until ``target_digits`` are certified.

    Without an explicit ``schedule`` the default one is used and, should the
    last stage certify fewer than ``target_digits``, it is followed by up to
    four extra stages with ``xi`` raised by 0.1 each.  With ``resume=True``
    and an existing ``checkpoint`` the run restarts after the recorded stage.
    """
    extendable = schedule is None
    if schedule is None:
        schedule = default_schedule(target_digits)
    digest = schedule.digest()
    stages = list(schedule.stages)

    prev: Optional[Bracket] = None
    prev_ctx: Optional[PrecisionContext] = None
    brackets: List[Bracket] = []
    contexts: List[int] = []
    elapsed: List[float] = []
    first = 0
    if resume and checkpoint is not None and Path(checkpoint).exists():
        data = read_checkpoint(checkpoint)
        if data["schedule_hash"] != digest:
            raise CheckpointError("checkpoint was written by a different schedule")
        prev, prev_ctx = _bracket_from_checkpoint(data)
        elapsed = [float(t) for t in data.get("elapsed", [])]
        first = prev.stage + 1
        while extendable and len(stages) < first:
            stages.append(stage_for_xi(Fraction(stages[-1].xi) + Fraction(1, 10), target_digits))
        logger.info("resuming after stage %d from %s", prev.stage, checkpoint)

    j = first
    extra = len(stages) - len(schedule.stages)
    while True:
        if j >= len(stages):
            if prev is not None and extendable and extra < MAX_EXTRA_STAGES:
                _, count = certified_digits(prev)
                if count < target_digits:
                    last = stages[-1]
                    stages.append(stage_for_xi(Fraction(last.xi) + Fraction(1, 10), target_digits))
                    extra += 1
                    logger.info("certified %d < %d digits; adding stage with xi=%s", count, target_digits, stages[-1].xi)
                    continue
            break
        st = stages[j]
        t0 = time.perf_counter()
        ctx = make_context(st.working_digits)
        if prev_ctx is not None:
            ctx = prev_ctx.escalated(ctx.decimal_digits, ctx.guard_digits)
        seeds = SEED_INTERVAL if prev is None else _seed_from(prev, ctx)
        # probe the cancellation at the seed midpoint and pay for it up front
        probe_lam = (ctx.real(seeds[0]) + ctx.real(seeds[1])) / 2
        lost = cancellation_digits(eval_y(SeriesConfig(st.n, ctx.real(st.xi), probe_lam), ctx))
        ctx = ctx.escalated(ctx.decimal_digits + lost, ctx.guard_digits)
        if prev is not None:
            seeds = _seed_from(prev, ctx)
        b = lambda_bounds(st.n, st.xi, seeds, ctx, st.tol, stage=j, accelerate=accelerate)
        if prev is not None:
            w = ctx.real(prev.hi) - ctx.real(prev.lo)
            if not (ctx.real(prev.lo) - w < b.lo and b.hi < ctx.real(prev.hi) + w):
                raise ConvergenceError(f"stage {j} bracket [{b.lo}, {b.hi}] escaped the previous one")
        dt = time.perf_counter() - t0
        elapsed.append(dt)
        brackets.append(b)
        contexts.append(ctx.effective_digits)
        logger.info(
            "stage %d: xi=%s n=%d digits=%d certified=%d (%.2fs)",
            j, st.xi, st.n, ctx.effective_digits, certified_digits(b)[1], dt,
        )
        if checkpoint is not None:
            _write_checkpoint(Path(checkpoint), _checkpoint_payload(b, ctx, digest, elapsed))
        if on_stage is not None:
            on_stage(b, ctx, dt)
        prev, prev_ctx = b, ctx
        j += 1

    if prev is None:
        raise ValueError("schedule produced no stages to run")
    digits, count = certified_digits(prev)
    return GroundStateResult(
        bracket=prev,
        digits=digits,
        certified_count=count,
        elapsed=elapsed,
        stages=brackets,
        working_digits=contexts,
        schedule=Schedule(tuple(stages)),
    )
