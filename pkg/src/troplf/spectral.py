"""Homogenization, the parametric game, and the spectral function.

A linear-fractional instance asks for the minimum of (px v r) - (qx v s) over
the tropical polyhedron Ax v c <= Bx v d.  Homogenizing gives C = [A,c],
D = [B,d], u = [p,r], v = [q,s]; the optimum is the minimal zero of the
spectral function phi(lambda) = chi_{n+1}(U# V(lambda)) of the parametric
mean payoff game with payment matrices U = [[C],[u]] and V(lambda) =
[[D],[lambda + v]].
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence, Union

from .game_engine import (
    AssumptionViolated,
    MaxStrategy,
    MeanPayoffGame,
    MinStrategy,
    game_value,
    integer_oracle,
    restrict_max,
    restrict_min,
)
from .trop_core import (
    NEG_INF,
    ExtendedNumber,
    TropMatrix,
    cycle_time_vector,
    ext,
)

Rational = Union[int, Fraction]


class GridTooLarge(Exception):
    """The reconstruction grid exceeds the configured point cap."""


def _vec(entries: Sequence) -> tuple:
    return tuple(ext(e) for e in entries)


class LfpInstance:
    """Tropical linear-fractional program data (A,B,c,d,p,q,r,s), no +inf.

    Construction checks the shape and the game assumptions on the homogenized
    constraint block: every row of [B|d] and every column of [[A],[p]] and
    [[c],[r]] needs a finite entry.  The degenerate objective rows (u or v
    without finite entries) are allowed here and classified by the solver's
    prechecks.
    """

    __slots__ = ("A", "B", "c", "d", "p", "q", "r", "s", "m", "n")

    def __init__(self, A, B, c, d, p, q, r, s):
        self.A = A if isinstance(A, TropMatrix) else TropMatrix(A)
        self.B = B if isinstance(B, TropMatrix) else TropMatrix(B)
        self.c = _vec(c)
        self.d = _vec(d)
        self.p = _vec(p)
        self.q = _vec(q)
        self.r = ext(r)
        self.s = ext(s)
        self.m = self.A.rows
        self.n = self.A.cols
        if (self.B.rows, self.B.cols) != (self.m, self.n):
            raise ValueError("A and B must share a shape")
        if len(self.c) != self.m or len(self.d) != self.m:
            raise ValueError("c and d must have one entry per constraint row")
        if len(self.p) != self.n or len(self.q) != self.n:
            raise ValueError("p and q must have one entry per variable")
        for vec in (self.c, self.d, self.p, self.q, (self.r, self.s)):
            for e in vec:
                if e.kind == 1:
                    raise ValueError("+inf coefficients are not allowed")
        problems = []
        for i in range(self.m):
            if not (any(e.is_finite for e in self.B.entries[i]) or self.d[i].is_finite):
                problems.append(f"row {i} of [B|d] has no finite entry")
        for j in range(self.n):
            col_finite = any(self.A.entries[i][j].is_finite for i in range(self.m))
            if not (col_finite or self.p[j].is_finite):
                problems.append(f"column {j} of [[A],[p]] has no finite entry")
        if not (any(e.is_finite for e in self.c) or self.r.is_finite):
            problems.append("column [[c],[r]] has no finite entry")
        if problems:
            raise AssumptionViolated("; ".join(problems))


@dataclass(frozen=True)
class HomogeneousInstance:
    """Scaled homogeneous form: C=[A,c], D=[B,d], u=[p,r], v=[q,s].

    All finite entries are integers after multiplying by ``scale`` (the lcm of
    the original denominators); M bounds their absolute values.  The minimal
    zero of the scaled spectral function is ``scale`` times the original one.
    """

    C: TropMatrix
    D: TropMatrix
    u: tuple
    v: tuple
    M: Fraction
    scale: int

    @property
    def m(self) -> int:
        return self.C.rows

    @property
    def n(self) -> int:
        return self.C.cols - 1

    @property
    def k_bound(self) -> int:
        """min(m, n): the turn-count bound entering denominators and caps."""
        return min(self.m, self.n)


def _scale_entry(e: ExtendedNumber, scale: int) -> ExtendedNumber:
    return ExtendedNumber.finite(e.value * scale) if e.is_finite else e


def homogenize(inst: LfpInstance) -> HomogeneousInstance:
    """Build the integer-scaled homogeneous data (C, D, u, v, M, scale)."""
    entries = []
    for row in inst.A.entries:
        entries.extend(row)
    for row in inst.B.entries:
        entries.extend(row)
    entries.extend(inst.c + inst.d + inst.p + inst.q + (inst.r, inst.s))
    scale = 1
    for e in entries:
        if e.is_finite:
            scale = lcm(scale, e.value.denominator)
    C = TropMatrix(
        [
            [_scale_entry(e, scale) for e in row] + [_scale_entry(ci, scale)]
            for row, ci in zip(inst.A.entries, inst.c)
        ]
    )
    D = TropMatrix(
        [
            [_scale_entry(e, scale) for e in row] + [_scale_entry(di, scale)]
            for row, di in zip(inst.B.entries, inst.d)
        ]
    )
    u = tuple(_scale_entry(e, scale) for e in inst.p + (inst.r,))
    v = tuple(_scale_entry(e, scale) for e in inst.q + (inst.s,))
    M = Fraction(0)
    for row in C.entries:
        for e in row:
            if e.is_finite and abs(e.value) > M:
                M = abs(e.value)
    for row in D.entries:
        for e in row:
            if e.is_finite and abs(e.value) > M:
                M = abs(e.value)
    for e in u + v:
        if e.is_finite and abs(e.value) > M:
            M = abs(e.value)
    return HomogeneousInstance(C, D, u, v, M, scale)


def game_at(H: HomogeneousInstance, lam: Rational) -> MeanPayoffGame:
    """The (m+1) x (n+1) game with payments U = [[C],[u]], V = [[D],[lam+v]]."""
    lam = Fraction(lam)
    U = TropMatrix(list(H.C.entries) + [list(H.u)])
    vrow = [ExtendedNumber.finite(e.value + lam) if e.is_finite else NEG_INF for e in H.v]
    V = TropMatrix(list(H.D.entries) + [vrow])
    return MeanPayoffGame(U, V)


def phi(H: HomogeneousInstance, lam: Rational) -> Fraction:
    """The spectral function: value of the parametric game at Min node n+1."""
    return game_value(game_at(H, lam), H.n)


def phi_nonneg(H: HomogeneousInstance, lam: Rational):
    """(phi(lam) >= 0, Max strategy on the winning side, Min strategy off it)."""
    rep = integer_oracle(game_at(H, lam))
    return H.n in rep.winning, rep.sigma, rep.tau


def phi_sigma(H: HomogeneousInstance, sigma: MaxStrategy, lam: Rational) -> Fraction:
    """Partial spectral function with Max frozen: concave, <= phi."""
    mat = restrict_max(game_at(H, lam), sigma)
    chi = cycle_time_vector(mat, mode="min")[H.n]
    if not chi.is_finite:
        raise AssertionError("one-player cycle time must be finite under the assumptions")
    return chi.value


def phi_tau(H: HomogeneousInstance, tau: MinStrategy, lam: Rational) -> Fraction:
    """Partial spectral function with Min frozen: convex, >= phi."""
    mat = restrict_min(game_at(H, lam), tau)
    chi = cycle_time_vector(mat, mode="max")[H.n]
    if not chi.is_finite:
        raise AssertionError("one-player cycle time must be finite under the assumptions")
    return chi.value


def initial_bounds(H: HomogeneousInstance):
    """(-2M(min(m,n)+1), +2M(min(m,n)+1)): finite minimal zeros live inside."""
    bound = 2 * H.M * (H.k_bound + 1)
    return -bound, bound


@dataclass(frozen=True)
class SpectralPiece:
    """One maximal affine piece of phi: value (alpha + beta*lambda)/k on [lo, hi]."""

    lo: ExtendedNumber
    hi: ExtendedNumber
    alpha: Fraction
    beta: int
    k: int

    def value_at(self, lam: Rational) -> Fraction:
        return Fraction(self.alpha + self.beta * Fraction(lam), self.k)


def spectral_grid(H: HomogeneousInstance, grid_cap: int = 10**6) -> list:
    """Sorted grid of rationals with denominator <= min(m,n)+1 covering all breakpoints."""
    k1 = H.k_bound + 1
    radius = 4 * H.M * k1 * k1
    estimate = (2 * radius + 1) * sum(range(1, k1 + 1))
    if estimate > grid_cap:
        raise GridTooLarge(
            f"about {estimate} grid points exceed the cap of {grid_cap}"
        )
    points = set()
    for q in range(1, k1 + 1):
        num_lo = -radius * q
        num_hi = radius * q
        for num in range(int(num_lo), int(num_hi) + 1):
            points.add(Fraction(num, q))
    if len(points) > grid_cap:
        raise GridTooLarge(f"{len(points)} grid points exceed the cap of {grid_cap}")
    return sorted(points)


def reconstruct(H: HomogeneousInstance, grid_cap: int = 10**6) -> list:
    """Fit the maximal affine pieces of phi from exact grid evaluation.

    Breakpoints have denominator <= min(m,n)+1 and phi is linear outside
    [-4M(min(m,n)+1)^2, 4M(min(m,n)+1)^2], so consecutive-grid-point slopes
    are exact piece slopes and the end pieces extend to +-inf.
    """
    grid = spectral_grid(H, grid_cap)
    values = [phi(H, lam) for lam in grid]
    if len(grid) < 2:
        return [SpectralPiece(NEG_INF, ExtendedNumber(1, Fraction(0)), values[0], 0, 1)]
    pieces = []
    start = 0
    slopes = [
        Fraction(values[i + 1] - values[i], grid[i + 1] - grid[i])
        for i in range(len(grid) - 1)
    ]

    def emit(first: int, last: int):
        """Piece spanning grid[first] .. grid[last] with uniform slope."""
        slope = slopes[first]
        lo = NEG_INF if first == 0 else ext(grid[first])
        hi = ExtendedNumber(1, Fraction(0)) if last == len(grid) - 1 else ext(grid[last])
        if slope == 0:
            pieces.append(SpectralPiece(lo, hi, values[first], 0, 1))
        else:
            k = slope.denominator
            if slope.numerator != 1:
                raise AssertionError(f"unexpected piece slope {slope}")
            alpha = k * values[first] - grid[first]
            pieces.append(SpectralPiece(lo, hi, alpha, 1, k))

    for i in range(1, len(slopes)):
        if slopes[i] != slopes[start]:
            emit(start, i)
            start = i
    emit(start, len(slopes))
    return pieces
