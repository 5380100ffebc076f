"""Hermite functions, wavefunction reconstruction and the bounding-figure curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import gmpy2

from .precision import BigReal, PrecisionContext
from .series import SeriesConfig, eval_both

__all__ = ["CurveSet", "hermite_h", "phi", "reconstruct_psi", "sample_curves"]


@dataclass(frozen=True)
class CurveSet:
    """``y`` and ``y'`` sampled on a (lambda x x) grid; rows follow ``lambdas``."""

    n: int
    lambdas: tuple
    x_samples: tuple
    y_values: tuple
    y_prime_values: tuple

    def __post_init__(self):
        rows, cols = len(self.lambdas), len(self.x_samples)
        for name in ("y_values", "y_prime_values"):
            m = getattr(self, name)
            if len(m) != rows or any(len(r) != cols for r in m):
                raise ValueError(f"{name} must be {rows} x {cols}")


def _hermite_raw(n: int, z):
    h_prev, h = 1, 2 * z
    if n == 0:
        return h_prev + 0 * z
    for k in range(1, n):
        h_prev, h = h, 2 * z * h - 2 * k * h_prev
    return h


def hermite_h(n: int, z) -> BigReal:
    """Physicists' Hermite polynomial by ``H_{k+1} = 2 z H_k - 2 k H_{k-1}``.

    ``z`` may be a BigReal (evaluated in its context) or an exact int/Fraction.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    if isinstance(z, BigReal):
        with z.ctx.gmp():
            return BigReal(_hermite_raw(n, z.value), z.ctx)
    return _hermite_raw(n, z)


def _phi_raw(n: int, z):
    # log of 1/sqrt(sqrt(pi) 2^n n!) keeps the normalization finite for large n
    log_norm = -(gmpy2.log(gmpy2.const_pi()) / 2 + n * gmpy2.log(2) + gmpy2.lgamma(n + 1)[0]) / 2
    return gmpy2.exp(log_norm - z * z / 2) * _hermite_raw(n, z)


def phi(n: int, z, ctx: PrecisionContext) -> BigReal:
    """Normalized harmonic-oscillator eigenfunction ``phi_n(z)``."""
    with ctx.gmp():
        return BigReal(_phi_raw(n, ctx.mpfr(z)), ctx)


def reconstruct_psi(coeffs: Sequence, z, ctx: PrecisionContext) -> BigReal:
    """``sum_k coeffs[k] * phi_k(z)`` over the given (full-basis) coefficients."""
    with ctx.gmp():
        x = ctx.mpfr(z)
        base = gmpy2.exp(-x * x / 2)
        # normalized Hermite recurrence: phi_{k+1} = sqrt(2/(k+1)) z phi_k - sqrt(k/(k+1)) phi_{k-1}
        p_prev = gmpy2.mpfr(0)
        p = base / gmpy2.sqrt(gmpy2.sqrt(gmpy2.const_pi()))
        total = gmpy2.mpfr(0)
        for k, c in enumerate(coeffs):
            c = ctx.mpfr(c)
            if not gmpy2.is_zero(c):
                total = total + c * p
            p_prev, p = p, gmpy2.sqrt(gmpy2.mpfr(2) / (k + 1)) * x * p - gmpy2.sqrt(gmpy2.mpfr(k) / (k + 1)) * p_prev
    return BigReal(total, ctx)


def sample_curves(
    n: int,
    lambda_lo,
    lambda_hi,
    count: int,
    x_max,
    samples: int,
    ctx: PrecisionContext,
) -> CurveSet:
    """Evaluate ``y_n`` and ``y_n'`` at ``count`` equidistant lambdas and ``samples`` points in (0, x_max]."""
    if count < 2 or samples < 2:
        raise ValueError("count and samples must both be >= 2")
    lo, hi, xm = ctx.real(lambda_lo), ctx.real(lambda_hi), ctx.real(x_max)
    lambdas = tuple(lo + (hi - lo) * i / (count - 1) for i in range(count))
    xs = tuple(xm * (j + 1) / samples for j in range(samples))
    ys: List[tuple] = []
    dys: List[tuple] = []
    for lam in lambdas:
        row_y, row_dy = [], []
        for x in xs:
            y, dy = eval_both(SeriesConfig(n, x, lam), ctx)
            row_y.append(y.value)
            row_dy.append(dy.value)
        ys.append(tuple(row_y))
        dys.append(tuple(row_dy))
    return CurveSet(n, lambdas, xs, tuple(ys), tuple(dys))
