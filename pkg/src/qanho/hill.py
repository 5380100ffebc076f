"""Hill-determinant cross-check in the harmonic-oscillator basis.

The operator ``-d2/dz2 + z**4`` is banded in the Hermite-function basis:
``h[m, n]`` vanishes unless ``|m - n|`` is 0, 2 or 4.  Splitting the basis by
parity gives two symmetric pentadiagonal blocks (half-bandwidth 2 in the
reduced index ``i -> 2 i + parity``).  Eigenvalues are isolated by counting
negative pivots of ``M - lam I`` (Sylvester inertia) and bisecting;
eigenvectors come from inverse iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .bound import Bracket
from .errors import ConvergenceError
from .precision import BigReal, PrecisionContext, log2_abs

__all__ = [
    "EVEN",
    "ODD",
    "BandedSymMatrix",
    "EigenPair",
    "matrix_element",
    "matrix_element_squared",
    "build_hamiltonian",
    "inertia_count",
    "gershgorin_interval",
    "lowest_eigenvalues",
    "eigenvector",
    "ground_state",
    "eigenvector_matrix",
    "default_working_digits",
]

EVEN, ODD = "even", "odd"
_OFFSET = {EVEN: 0, ODD: 1}


def matrix_element_squared(m: int, n: int) -> Fraction:
    """Exact ``sign(h) * h**2`` for ``h = <phi_m | -d2/dz2 + z**4 | phi_n>``.

    For ``n >= m`` the element is ``2**((m-n)/2 - 4) sqrt(m!/n!) P`` with an
    integer polynomial ``P``; only ``|m - n| <= 4`` survives, so ``n!/m!`` is
    a product of at most four integers and everything stays rational until
    the final square root.
    """
    if m > n:
        m, n = n, m
    d = n - m
    if d > 4 or d % 2:
        return Fraction(0)
    p = (
        (32 * n * (n - 1) ** 2 if m == n - 2 else 0)
        + (16 * (n - 3) * (n - 2) * n * (n - 1) if m == n - 4 else 0)
        + (4 * (2 * n * (3 * n + 5) + 5) if m == n else 0)
    )
    # the delta_{m,n+2} and delta_{m,n+4} terms never fire for n >= m
    ratio = math.prod(range(m + 1, n + 1))  # n!/m!
    sq = Fraction(p * p, ratio * 2 ** (d + 8))
    return sq if p >= 0 else -sq


def matrix_element(m: int, n: int, ctx: PrecisionContext) -> BigReal:
    """``h[m, n]`` rounded once into ``ctx``; exact zero off the band or across parity."""
    s = matrix_element_squared(m, n)
    with ctx.gmp():
        if s == 0:
            v = mpfr(0)
        else:
            v = gmpy2.sqrt(mpq(abs(s.numerator), s.denominator))
            if s < 0:
                v = -v
    return BigReal(v, ctx)


@dataclass(frozen=True)
class BandedSymMatrix:
    """One parity block, stored as its three upper diagonals.

    ``diag[i]`` couples reduced states ``i, i``; ``off1[i]`` couples
    ``i, i+1``; ``off2[i]`` couples ``i, i+2``.
    """

    parity: str
    diag: tuple
    off1: tuple
    off2: tuple
    ctx: PrecisionContext

    @property
    def size(self) -> int:
        return len(self.diag)

    def basis_index(self, i: int) -> int:
        return 2 * i + _OFFSET[self.parity]

    def entry(self, i: int, j: int) -> BigReal:
        if i > j:
            i, j = j, i
        d = j - i
        if d == 0:
            return self.diag[i]
        if d == 1:
            return self.off1[i]
        if d == 2:
            return self.off2[i]
        return self.ctx.real(0)

    def dense(self) -> List[List[BigReal]]:
        return [[self.entry(i, j) for j in range(self.size)] for i in range(self.size)]

    def norm_bound(self) -> BigReal:
        """Infinity-norm of the block (an upper bound on its spectral radius)."""
        return max(sum((abs(self.entry(i, j)) for j in range(max(0, i - 2), min(self.size, i + 3))),
                       self.ctx.real(0)) for i in range(self.size))


@dataclass(frozen=True)
class EigenPair:
    value_bracket: Bracket
    vector: tuple


def build_hamiltonian(N: int, parity: str, ctx: PrecisionContext) -> BandedSymMatrix:
    """Truncated parity block over the first ``N`` basis states of that parity."""
    if N < 1:
        raise ValueError("N must be positive")
    if parity not in _OFFSET:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    off = _OFFSET[parity]
    idx = [2 * i + off for i in range(N)]
    diag = tuple(matrix_element(k, k, ctx) for k in idx)
    off1 = tuple(matrix_element(idx[i], idx[i + 1], ctx) for i in range(N - 1))
    off2 = tuple(matrix_element(idx[i], idx[i + 2], ctx) for i in range(N - 2))
    return BandedSymMatrix(parity, diag, off1, off2, ctx)


def _raw(M: BandedSymMatrix):
    return [x.value for x in M.diag], [x.value for x in M.off1], [x.value for x in M.off2]


def _negative_pivots(d, e1, e2, lam) -> Optional[int]:
    """Count negative pivots of LDL^T(M - lam I); None on an exactly zero pivot."""
    n = len(d)
    neg = 0
    # L[i, i-1] = l1[i], L[i, i-2] = l2[i]
    piv_m2 = piv_m1 = None
    l1_m1 = None  # L[i-1, i-2]
    for i in range(n):
        a_ii = d[i] - lam
        if i >= 2:
            l2 = e2[i - 2] / piv_m2
            l1 = (e1[i - 1] - l2 * piv_m2 * l1_m1) / piv_m1
            p = a_ii - l2 * l2 * piv_m2 - l1 * l1 * piv_m1
        elif i == 1:
            l1 = e1[0] / piv_m1
            p = a_ii - l1 * l1 * piv_m1
        else:
            l1 = None
            p = a_ii
        if gmpy2.is_zero(p):
            return None
        if p < 0:
            neg += 1
        piv_m2, piv_m1 = piv_m1, p
        l1_m1 = l1
    return neg


def inertia_count(M: BandedSymMatrix, lam) -> int:
    """Number of eigenvalues of ``M`` strictly below ``lam``.

    An exactly zero pivot means ``lam`` is (numerically) an eigenvalue of a
    leading block; ``lam`` is then nudged up by one ulp, at most three times.
    """
    ctx = M.ctx
    d, e1, e2 = _raw(M)
    with ctx.gmp():
        x = ctx.mpfr(lam)
        for _ in range(4):
            c = _negative_pivots(d, e1, e2, x)
            if c is not None:
                return c
            x = gmpy2.next_above(x)
    raise ConvergenceError(f"zero pivot persists near lam={lam}")


def gershgorin_interval(M: BandedSymMatrix):
    ctx = M.ctx
    lo = hi = None
    for i in range(M.size):
        r = sum((abs(M.entry(i, j)) for j in range(max(0, i - 2), min(M.size, i + 3)) if j != i), ctx.real(0))
        a, b = M.diag[i] - r, M.diag[i] + r
        lo = a if lo is None or a < lo else lo
        hi = b if hi is None or b > hi else hi
    # widen slightly so the ends are strictly outside the spectrum
    pad = (hi - lo) / 1000 + 1
    return lo - pad, hi + pad


def default_working_digits(expected_digits: float) -> int:
    return max(50, math.ceil(10 * expected_digits))


def lowest_eigenvalues(
    M: BandedSymMatrix, k: int, ctx: Optional[PrecisionContext] = None, tol=None, *, max_iter: Optional[int] = None
) -> List[Bracket]:
    """Brackets for the ``k`` smallest eigenvalues by inertia bisection.

    Bracket ``i`` satisfies ``inertia(lo) <= i < inertia(hi)`` and has width
    ``<= tol``.  ``ctx`` must be the matrix's context (it is only accepted
    for symmetry with the other solvers).
    """
    ctx = ctx or M.ctx
    if ctx != M.ctx:
        raise ValueError("matrix and solver contexts differ; rebuild the matrix in the solver context")
    if not 1 <= k <= M.size:
        raise ValueError(f"k must be in [1, {M.size}], got {k}")
    tol = ctx.real(tol if tol is not None else f"1e-{ctx.decimal_digits // 2}")
    g_lo, g_hi = gershgorin_interval(M)
    if max_iter is None:
        max_iter = math.ceil(log2_abs(g_hi - g_lo) - log2_abs(tol)) + 60

    cache = {}

    def count(x: BigReal) -> int:
        key = x.value
        if key not in cache:
            cache[key] = inertia_count(M, x)
        return cache[key]

    out = []
    lower = g_lo
    for i in range(k):
        a, b = lower, g_hi
        # reuse earlier probes to start from the tightest known bracket
        for x, c in cache.items():
            if c > i and x < b.value:
                b = ctx.real(x)
            elif c <= i and x > a.value:
                a = ctx.real(x)
        for _ in range(max_iter):
            if b - a <= tol:
                break
            m = (a + b) / 2
            if m <= a or m >= b:
                raise ConvergenceError("tolerance below working precision")
            if count(m) <= i:
                a = m
            else:
                b = m
        else:
            raise ConvergenceError(f"eigenvalue {i} did not converge to {tol} in {max_iter} bisections")
        out.append(Bracket(lo=a, hi=b, stage=i, xi=None, n=M.size))
        lower = a
    return out


def _banded_solve(d, e1, e2, shift, rhs):
    """Solve (M - shift I) x = rhs by banded Gaussian elimination with partial pivoting."""
    n = len(d)
    # row i holds columns i-2 .. i+4 (fill-in from pivoting reaches i+4)
    rows = []
    for i in range(n):
        row = {}
        for j in range(max(0, i - 2), min(n, i + 3)):
            if j == i:
                row[j] = d[i] - shift
            elif abs(j - i) == 1:
                row[j] = e1[min(i, j)]
            else:
                row[j] = e2[min(i, j)]
        rows.append(row)
    b = list(rhs)
    tiny = None
    for col in range(n):
        last = min(n, col + 3)
        piv = max(range(col, last), key=lambda r: abs(rows[r].get(col, 0)))
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            b[col], b[piv] = b[piv], b[col]
        p = rows[col].get(col, mpfr(0))
        if gmpy2.is_zero(p):
            if tiny is None:
                tiny = gmpy2.mpfr(2) ** (-(gmpy2.get_context().precision))
            p = tiny
            rows[col][col] = p
        for r in range(col + 1, last):
            f = rows[r].get(col)
            if f is None or gmpy2.is_zero(f):
                continue
            f = f / p
            for j, v in rows[col].items():
                if j > col:
                    rows[r][j] = rows[r].get(j, 0) - f * v
            rows[r].pop(col, None)
            b[r] = b[r] - f * b[col]
    x = [mpfr(0)] * n
    for i in range(n - 1, -1, -1):
        s = b[i]
        for j, v in rows[i].items():
            if j > i:
                s = s - v * x[j]
        x[i] = s / rows[i][i]
    return x


def _normalize(v):
    s = gmpy2.sqrt(sum(x * x for x in v))
    v = [x / s for x in v]
    first = next((x for x in v if not gmpy2.is_zero(x)), None)
    if first is not None and first < 0:
        v = [-x for x in v]
    return v


def eigenvector(M: BandedSymMatrix, value_bracket: Bracket, ctx: Optional[PrecisionContext] = None,
                *, max_iter: int = 20) -> List[BigReal]:
    """Unit eigenvector of ``M`` for the eigenvalue isolated by ``value_bracket``.

    Inverse iteration with shift at the bracket midpoint; the sign is fixed
    so that the first nonzero component is positive.
    """
    ctx = ctx or M.ctx
    n = M.size
    d, e1, e2 = _raw(M)
    with ctx.gmp():
        if n == 1:
            return [ctx.real(1)]
        shift = ctx.mpfr(value_bracket.midpoint)
        v = _normalize([mpfr(1)] * n)
        converged = False
        eps = mpfr(10) ** (-(ctx.effective_digits // 2))
        for _ in range(max_iter):
            w = _normalize(_banded_solve(d, e1, e2, shift, v))
            # compare up to sign
            diff = min(max(abs(a - b) for a, b in zip(w, v)), max(abs(a + b) for a, b in zip(w, v)))
            v = w
            if diff < eps:
                converged = True
                break
        if not converged:
            raise ConvergenceError("inverse iteration stagnated")
    return [BigReal(x, ctx) for x in v]


def residual_norm(M: BandedSymMatrix, lam, vec: Sequence[BigReal]) -> BigReal:
    """Euclidean norm of ``M v - lam v``."""
    ctx = M.ctx
    lam = ctx.real(lam)
    n = M.size
    acc = ctx.real(0)
    for i in range(n):
        s = -lam * vec[i]
        for j in range(max(0, i - 2), min(n, i + 3)):
            s = s + M.entry(i, j) * vec[j]
        acc = acc + s * s
    with ctx.gmp():
        return BigReal(gmpy2.sqrt(acc.value), ctx)


def full_basis_vector(M: BandedSymMatrix, vec: Sequence[BigReal], total: Optional[int] = None) -> List[BigReal]:
    """Scatter a block vector into the full interleaved basis, zero on the other parity."""
    total = total if total is not None else 2 * M.size + _OFFSET[M.parity]
    out = [M.ctx.real(0)] * total
    for i, x in enumerate(vec):
        k = M.basis_index(i)
        if k < total:
            out[k] = x
    return out


def ground_state(N: int, ctx: PrecisionContext, tol=None) -> EigenPair:
    """Lowest even-parity eigenpair of the ``N``-state even block."""
    M = build_hamiltonian(N, EVEN, ctx)
    (br,) = lowest_eigenvalues(M, 1, ctx, tol)
    vec = eigenvector(M, br, ctx)
    return EigenPair(br, tuple(full_basis_vector(M, vec)))


def eigenvector_matrix(N: int, ctx: PrecisionContext, tol=None) -> List[List[BigReal]]:
    """``N x N`` matrix whose column ``c`` is the ``c``-th eigenvector over ``phi_0 .. phi_{N-1}``.

    Both parity blocks are diagonalized separately and their eigenvalues
    merged in ascending order; entries on the opposite parity are exact zeros.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    pairs = []
    for parity, size in ((EVEN, (N + 1) // 2), (ODD, N // 2)):
        M = build_hamiltonian(size, parity, ctx)
        for br in lowest_eigenvalues(M, size, ctx, tol):
            vec = eigenvector(M, br, ctx)
            pairs.append((br.midpoint, full_basis_vector(M, vec, N)))
    pairs.sort(key=lambda p: p[0].value)
    return [[pairs[c][1][r] for c in range(N)] for r in range(N)]
