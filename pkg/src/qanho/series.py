"""Truncated power-series solution of ``-y'' + x**4 y = lam * y``.

With ``y(0) = 1, y'(0) = 0`` only even powers survive and the coefficients obey

    a_0 = 1,  a_2 = -lam/2,  a_4 = lam**2/24,
    a_k = (a_{k-6} - lam * a_{k-2}) / (k (k - 1))      for k = 6, 8, ...

The evaluators walk this recursion with a sliding window of three
coefficients and running powers of ``xi``, so memory stays constant in ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Tuple

import gmpy2

from .precision import BigReal, PrecisionContext

__all__ = [
    "SeriesConfig",
    "SeriesEval",
    "initial_coefficients",
    "next_coefficient",
    "coefficients",
    "eval_y",
    "eval_y_prime",
    "eval_both",
    "cancellation_digits",
]


@dataclass(frozen=True)
class SeriesConfig:
    """Truncation order ``n``, evaluation point ``xi`` and trial eigenvalue ``lam``.

    ``xi`` and ``lam`` may be BigReal, int, Fraction or decimal strings; they
    are rounded into the evaluation context.
    """

    n: int
    xi: object
    lam: object

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 4 or self.n % 2:
            raise ValueError(f"truncation order must be an even integer >= 4, got {self.n!r}")
        xi = self.xi
        positive = xi > 0 if not isinstance(xi, str) else Fraction(xi) > 0
        if not positive:
            raise ValueError(f"evaluation point must be positive, got {xi!r}")


@dataclass(frozen=True)
class SeriesEval:
    value: BigReal
    max_term_magnitude: BigReal
    terms_used: int


def initial_coefficients(lam):
    """``(a0, a2, a4) = (1, -lam/2, lam**2/24)``: the data ``y(0)=1, y'(0)=0``."""
    return 1 + 0 * lam, -lam / 2, lam * lam / 24


def next_coefficient(a_km6, a_km2, k: int, lam):
    """``a_k = (a_{k-6} - lam * a_{k-2}) / (k (k-1))``."""
    if k < 6 or k % 2:
        raise ValueError(f"recursion index must be even and >= 6, got {k}")
    return (a_km6 - lam * a_km2) / (k * (k - 1))


def coefficients(n: int, lam) -> Iterator[Tuple[int, object]]:
    """Yield ``(k, a_k)`` for even ``k <= n``; generic over the numeric type of ``lam``."""
    a0, a2, a4 = initial_coefficients(lam)
    for k, a in ((0, a0), (2, a2), (4, a4)):
        if k <= n:
            yield k, a
    w6, w4, w2 = a0, a2, a4
    for k in range(6, n + 1, 2):
        ak = next_coefficient(w6, w2, k, lam)
        w6, w4, w2 = w4, w2, ak
        yield k, ak


def _evaluate(cfg: SeriesConfig, ctx: PrecisionContext, want_y: bool, want_dy: bool):
    n = cfg.n
    with ctx.gmp():
        lam = ctx.mpfr(cfg.lam)
        xi = ctx.mpfr(cfg.xi)
        a6 = gmpy2.mpfr(1)
        a4 = -lam / 2
        a2 = lam * lam / 24
        x2 = xi * xi
        pw = xi * x2  # xi**(k-1), starts at k = 4

        s = ds = None
        smax = dmax = gmpy2.mpfr(0)
        if want_y:
            terms = (a6, a4 * x2, a2 * (pw * xi))
            s = terms[0] + terms[1] + terms[2]
            smax = max(abs(t) for t in terms)
        if want_dy:
            dterms = (2 * xi * a4, 4 * pw * a2)
            ds = dterms[0] + dterms[1]
            dmax = max(abs(t) for t in dterms)

        for k in range(6, n + 1, 2):
            ak = (a6 - lam * a2) / (k * (k - 1))
            a6, a4, a2 = a4, a2, ak
            pw = pw * x2
            t = ak * pw
            if want_dy:
                dt = k * t
                ds = ds + dt
                if abs(dt) > dmax:
                    dmax = abs(dt)
            if want_y:
                t = t * xi
                s = s + t
                if abs(t) > smax:
                    smax = abs(t)

    y = SeriesEval(BigReal(s, ctx), BigReal(smax, ctx), n // 2 + 1) if want_y else None
    dy = SeriesEval(BigReal(ds, ctx), BigReal(dmax, ctx), n // 2) if want_dy else None
    return y, dy


def eval_y(cfg: SeriesConfig, ctx: PrecisionContext) -> SeriesEval:
    """``y_n(xi) = sum_{k even <= n} a_k xi**k``."""
    return _evaluate(cfg, ctx, True, False)[0]


def eval_y_prime(cfg: SeriesConfig, ctx: PrecisionContext) -> SeriesEval:
    """``y_n'(xi) = sum_{k even, 2 <= k <= n} k a_k xi**(k-1)``."""
    return _evaluate(cfg, ctx, False, True)[1]


def eval_both(cfg: SeriesConfig, ctx: PrecisionContext) -> Tuple[SeriesEval, SeriesEval]:
    """Fused pass; bit-identical to :func:`eval_y` and :func:`eval_y_prime`."""
    return _evaluate(cfg, ctx, True, True)


def cancellation_digits(e: SeriesEval) -> int:
    """Decimal digits lost to cancellation: ``floor(log10(max_term / |value|))``.

    A zero value returns the context's full precision as a conservative bound.
    """
    ctx = e.value.ctx
    if e.value.is_zero():
        return ctx.effective_digits
    with ctx.gmp():
        r = gmpy2.log10(e.max_term_magnitude.value / abs(e.value.value))
        # absorb rounding when the ratio is an exact power of ten
        slack = gmpy2.mpfr(2) ** (-(ctx.bits // 2))
        d = int(gmpy2.floor(r + slack))
    return max(d, 0)
