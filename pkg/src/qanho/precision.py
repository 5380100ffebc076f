"""Arbitrary-precision reals, precision contexts and bracketed root finding.

All big-real arithmetic in the package goes through :class:`BigReal`, a thin
immutable wrapper around :class:`gmpy2.mpfr` that remembers the
:class:`PrecisionContext` it was computed under.  Mixing values from two
different contexts raises :class:`~qanho.errors.ContextMismatchError`; moving
a value between contexts has to be spelled out with ``ctx.real(x)``.

Hot loops (series evaluation, banded factorizations) unwrap to raw ``mpfr``
inside ``with ctx.gmp():`` and wrap the result once at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import ContextMismatchError, ConvergenceError, NoSignChangeError, PrecisionError

__all__ = [
    "PrecisionContext",
    "BigReal",
    "RootResult",
    "make_context",
    "default_guard_digits",
    "to_decimal",
    "decimal_expansion",
    "exact_repr",
    "outward_decimal",
    "find_root_bracketed",
    "sign_scan",
    "sqrt",
    "log2_abs",
    "DEFAULT_MAX_ITER",
]

MIN_DIGITS = 10
DEFAULT_MAX_ITER = 100
_LOG2_10 = math.log2(10)

Number = Union["BigReal", int, Fraction, str]


def default_guard_digits(decimal_digits: int) -> int:
    return max(10, math.ceil(0.02 * decimal_digits))


@dataclass(frozen=True)
class PrecisionContext:
    """Decimal working precision plus guard digits.

    The binary mantissa carries ``ceil(effective_digits * log2(10)) + 8`` bits.
    """

    decimal_digits: int
    guard_digits: int = 0

    def __post_init__(self):
        if int(self.decimal_digits) != self.decimal_digits or self.decimal_digits < MIN_DIGITS:
            raise PrecisionError(
                f"decimal_digits must be an integer >= {MIN_DIGITS}, got {self.decimal_digits!r}"
            )
        if int(self.guard_digits) != self.guard_digits or self.guard_digits < 0:
            raise PrecisionError(f"guard_digits must be a non-negative integer, got {self.guard_digits!r}")

    @property
    def effective_digits(self) -> int:
        return self.decimal_digits + self.guard_digits

    @property
    def bits(self) -> int:
        return math.ceil(self.effective_digits * _LOG2_10) + 8

    def gmp(self):
        """Context manager switching gmpy2 to this precision (thread-local)."""
        return gmpy2.context(
            gmpy2.get_context(),
            precision=self.bits,
            round=gmpy2.RoundToNearest,
            emax=gmpy2.get_emax_max(),
            emin=gmpy2.get_emin_min(),
        )

    def mpfr(self, x) -> mpfr:
        """Round ``x`` to a raw mpfr at this context's precision."""
        if isinstance(x, BigReal):
            x = x.value
        elif isinstance(x, Fraction):
            x = mpq(x.numerator, x.denominator)
        elif isinstance(x, float):
            raise TypeError("machine floats are not accepted; pass a decimal string or Fraction")
        return mpfr(x, self.bits)

    def real(self, x) -> "BigReal":
        """Convert ``x`` (str, int, Fraction, mpfr or BigReal) into this context."""
        if isinstance(x, BigReal) and x.ctx == self:
            return x
        return BigReal(self.mpfr(x), self)

    def escalated(self, decimal_digits: int, guard_digits: Optional[int] = None) -> "PrecisionContext":
        """A context at least as precise as ``self`` (never decreases)."""
        if guard_digits is None:
            guard_digits = self.guard_digits
        if decimal_digits + guard_digits <= self.effective_digits:
            return self
        return PrecisionContext(decimal_digits, guard_digits)


def make_context(decimal_digits: int, guard_digits: Optional[int] = None) -> PrecisionContext:
    """Build a context; ``guard_digits`` defaults to ``max(10, 2% of decimal_digits)``."""
    if guard_digits is None:
        if int(decimal_digits) != decimal_digits or decimal_digits < MIN_DIGITS:
            raise PrecisionError(f"decimal_digits must be an integer >= {MIN_DIGITS}, got {decimal_digits!r}")
        guard_digits = default_guard_digits(decimal_digits)
    return PrecisionContext(int(decimal_digits), int(guard_digits))


class BigReal:
    """Immutable arbitrary-precision real tagged with its precision context."""

    __slots__ = ("value", "ctx")

    def __init__(self, value: mpfr, ctx: PrecisionContext):
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "ctx", ctx)

    def __setattr__(self, name, value):
        raise AttributeError("BigReal is immutable")

    def _coerce(self, other):
        if isinstance(other, BigReal):
            if other.ctx != self.ctx:
                raise ContextMismatchError(
                    f"cannot combine values from {self.ctx} and {other.ctx}; convert explicitly"
                )
            return other.value
        if isinstance(other, bool):
            return NotImplemented
        if isinstance(other, int):
            return other
        if isinstance(other, Fraction):
            return mpq(other.numerator, other.denominator)
        return NotImplemented

    def _binary(self, other, op, reflected=False):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        with self.ctx.gmp():
            v = op(o, self.value) if reflected else op(self.value, o)
        return BigReal(v, self.ctx)

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._binary(other, lambda a, b: a + b, True)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: a - b, True)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._binary(other, lambda a, b: a * b, True)

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binary(other, lambda a, b: a / b, True)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        with self.ctx.gmp():
            return BigReal(self.value**k, self.ctx)

    def __neg__(self):
        with self.ctx.gmp():
            return BigReal(-self.value, self.ctx)

    def __pos__(self):
        return self

    def __abs__(self):
        with self.ctx.gmp():
            return BigReal(abs(self.value), self.ctx)

    def _cmp(self, other, op):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return op(self.value, o)

    def __eq__(self, other):
        if isinstance(other, BigReal) and other.ctx != self.ctx:
            return False
        r = self._cmp(other, lambda a, b: a == b)
        return False if r is NotImplemented else r

    def __hash__(self):
        return hash((self.value, self.ctx))

    def __lt__(self, other):
        return self._cmp(other, lambda a, b: a < b)

    def __le__(self, other):
        return self._cmp(other, lambda a, b: a <= b)

    def __gt__(self, other):
        return self._cmp(other, lambda a, b: a > b)

    def __ge__(self, other):
        return self._cmp(other, lambda a, b: a >= b)

    def __float__(self):
        return float(self.value)

    def __bool__(self):
        return not gmpy2.is_zero(self.value)

    def sign(self) -> int:
        return gmpy2.sign(self.value)

    def is_zero(self) -> bool:
        return gmpy2.is_zero(self.value)

    def __str__(self):
        return to_decimal(self, min(self.ctx.effective_digits, 30))

    def __repr__(self):
        return f"BigReal('{to_decimal(self, min(self.ctx.effective_digits, 30))}', digits={self.ctx.effective_digits})"


def log2_abs(x: BigReal) -> float:
    """``log2|x|`` as a float, safe for magnitudes far outside double range."""
    m, e = x.value.as_mantissa_exp()
    if not m:
        return float("-inf")
    m = abs(int(m))
    shift = max(m.bit_length() - 64, 0)
    return math.log2(m >> shift) + shift + int(e)


def sqrt(x: BigReal) -> BigReal:
    with x.ctx.gmp():
        return BigReal(gmpy2.sqrt(x.value), x.ctx)


def decimal_expansion(x: Union[BigReal, mpfr], digits: int, rounding: str = "half-even"):
    """Exact decimal expansion of a binary float.

    Returns ``(negative, digit_string, exponent)`` where ``digit_string`` has
    exactly ``digits`` characters and ``|x| ~ 0.d1d2... * 10**(exponent + 1)``,
    i.e. ``exponent`` is the decimal exponent of the leading digit.
    ``rounding`` is ``"half-even"``, ``"truncate"`` (toward zero) or
    ``"away"`` (away from zero).
    """
    if digits < 1:
        raise PrecisionError("digits must be positive")
    v = x.value if isinstance(x, BigReal) else x
    if gmpy2.is_zero(v):
        return False, "0" * digits, 0
    if not gmpy2.is_finite(v):
        raise PrecisionError(f"cannot expand non-finite value {v}")
    negative = v < 0
    num, den = (abs(int(t)) for t in v.as_integer_ratio())
    # estimate, corrected below
    exp10 = math.floor(
        (num.bit_length() - den.bit_length()) * math.log10(2)
    )
    lo_bound, hi_bound = 10 ** (digits - 1), 10**digits
    while True:
        shift = digits - 1 - exp10
        if shift >= 0:
            n, d = num * 10**shift, den
        else:
            n, d = num, den * 10 ** (-shift)
        q, r = divmod(n, d)
        if q >= hi_bound:
            exp10 += 1
            continue
        if q < lo_bound:
            exp10 -= 1
            continue
        break
    if rounding == "half-even":
        twice = 2 * r
        if twice > d or (twice == d and q % 2 == 1):
            q += 1
            if q == hi_bound:
                q //= 10
                exp10 += 1
    elif rounding == "away":
        if r:
            q += 1
            if q == hi_bound:
                q //= 10
                exp10 += 1
    elif rounding != "truncate":
        raise ValueError(f"unknown rounding mode {rounding!r}")
    return negative, str(q), exp10


def _format(negative: bool, digit_str: str, exp10: int) -> str:
    sign = "-" if negative else ""
    n = len(digit_str)
    if 0 <= exp10 < n:
        head, tail = digit_str[: exp10 + 1], digit_str[exp10 + 1 :]
        return sign + head + ("." + tail if tail else "")
    if -6 <= exp10 < 0:
        return sign + "0." + "0" * (-exp10 - 1) + digit_str
    tail = digit_str[1:]
    return f"{sign}{digit_str[0]}{'.' + tail if tail else ''}e{exp10:+d}"


def to_decimal(x: BigReal, digits: int) -> str:
    """Correctly rounded (round-half-even) decimal string with ``digits`` significant digits."""
    if digits > x.ctx.effective_digits:
        raise PrecisionError(
            f"{digits} digits requested from a value carrying {x.ctx.effective_digits}"
        )
    return _format(*decimal_expansion(x, digits, "half-even"))


def outward_decimal(x: BigReal, digits: int, direction: str) -> str:
    """Decimal string rounded toward ``-inf`` (``direction="down"``) or ``+inf`` (``"up"``)."""
    negative = x.sign() < 0
    toward_zero = (direction == "down") != negative
    return _format(*decimal_expansion(x, digits, "truncate" if toward_zero else "away"))


def exact_repr(x: BigReal) -> str:
    """Decimal string that parses back to the identical mpfr at ``x.ctx``."""
    mant, exp, _ = x.value.digits(10, 0)
    negative = mant.startswith("-")
    mant = mant.lstrip("-")
    if set(mant) <= {"0"}:
        return "0"
    return f"{'-' if negative else ''}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


@dataclass
class RootResult:
    root: BigReal
    lo: BigReal
    hi: BigReal
    iterations: int
    evaluations: int
    accelerated_steps: int = 0
    flag: str = "converged"


def _sign(v) -> int:
    return gmpy2.sign(v.value if isinstance(v, BigReal) else v)


def find_root_bracketed(
    f: Callable[[BigReal], BigReal],
    lo: Number,
    hi: Number,
    ctx: PrecisionContext,
    tol: Number,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    accelerate: bool = True,
    full_output: bool = False,
):
    """Find a zero of ``f`` in ``[lo, hi]`` to absolute accuracy ``tol``.

    Every iteration performs at most one accelerated step (a secant point
    through the current endpoints, pulled toward the far endpoint by the
    last change of the secant estimate, used only when strictly inside the
    bracket) followed by a bisection step whenever the bracket did not at
    least halve.  The width therefore halves per
    iteration no matter what the acceleration does, and the returned value
    is the midpoint of a sign-change bracket no wider than ``2 * tol``.

    With ``full_output=True`` a :class:`RootResult` carrying the final
    bracket is returned instead of the bare root.
    """
    a, b = ctx.real(lo), ctx.real(hi)
    tol = ctx.real(tol)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a > b:
        a, b = b, a
    evals = 0

    def ev(x):
        nonlocal evals
        evals += 1
        return ctx.real(f(x))

    fa, fb = ev(a), ev(b)
    sa, sb = _sign(fa), _sign(fb)

    def done(root, flag="converged", it=0, acc=0):
        if full_output:
            return RootResult(root, a, b, it, evals, acc, flag)
        return root

    if sa == 0:
        b = a
        return done(a, "exact")
    if sb == 0:
        a = b
        return done(b, "exact")
    if sa == sb:
        raise NoSignChangeError(f"f has the same sign at both ends of [{a}, {b}]")

    two_tol = tol * 2
    half_tol = tol / 2
    estimate = None
    accelerated = 0
    for it in range(1, max_iter + 1):
        if b - a <= two_tol:
            return done((a + b) / 2, it=it - 1, acc=accelerated)
        start_width = b - a
        if accelerate:
            denom = fb - fa
            if not denom.is_zero():
                r = b - fb * (b - a) / denom
                # probe just short of the secant estimate, on the side of the
                # far endpoint, so that the far end also moves in
                step = abs(r - estimate) if estimate is not None else half_tol
                if step < half_tol:
                    step = half_tol
                estimate = r
                c = r - step if r - a > b - r else r + step
                if not a < c < b:
                    c = r
                if a < c < b:
                    accelerated += 1
                    fc = ev(c)
                    sc = _sign(fc)
                    if sc == 0:
                        a = b = c
                        return done(c, "exact", it, accelerated)
                    if sc == sa:
                        a, fa = c, fc
                    else:
                        b, fb = c, fc
                    if b - a <= two_tol:
                        return done((a + b) / 2, it=it, acc=accelerated)
        if (b - a) * 2 > start_width:
            m = (a + b) / 2
            if m <= a or m >= b:
                raise ConvergenceError(
                    f"tolerance {tol} is below the resolution of a {ctx.effective_digits}-digit context"
                )
            fm = ev(m)
            sm = _sign(fm)
            if sm == 0:
                a = b = m
                return done(m, "exact", it, accelerated)
            if sm == sa:
                a, fa = m, fm
            else:
                b, fb = m, fm
    if b - a <= two_tol:
        return done((a + b) / 2, it=max_iter, acc=accelerated)
    raise ConvergenceError(
        f"no convergence to tol={tol} within {max_iter} iterations (width {b - a})"
    )


def sign_scan(
    f: Callable[[BigReal], BigReal], lo: BigReal, hi: BigReal, steps: int
) -> Optional[tuple]:
    """First cell of a uniform ``steps``-cell partition of ``[lo, hi]`` where ``f`` changes sign.

    A cell whose endpoint is an exact zero counts as a sign change.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    ctx = lo.ctx
    hi = ctx.real(hi)
    h = (hi - lo) / steps
    x_prev = lo
    s_prev = _sign(f(lo))
    for i in range(1, steps + 1):
        x = hi if i == steps else lo + h * i
        s = _sign(f(x))
        if s_prev * s <= 0:
            return x_prev, x
        x_prev, s_prev = x, s
    return None
