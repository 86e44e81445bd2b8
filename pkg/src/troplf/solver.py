"""Solution algorithms: prechecks, bisection, positive and negative Newton.

All three algorithms locate the minimal zero lambda* of the spectral function
phi on the integer-scaled homogeneous instance, then attach a feasible witness
and a validated strategy certificate.  Prechecks classify the degenerate
objectives, run the global support test for unboundedness, and bracket
lambda* between the initial bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .game_engine import (
    InternalCertificateMismatch,
    MaxStrategy,
    MeanPayoffGame,
    MinStrategy,
    feasibility_witness,
    integer_oracle,
    scaled_copy,
)
from .spectral import (
    HomogeneousInstance,
    LfpInstance,
    game_at,
    homogenize,
    initial_bounds,
    phi_nonneg,
    phi_tau,
)
from .trop_core import (
    NEG_INF,
    ExtendedNumber,
    TropMatrix,
    ext,
    trop_matvec,
)


class IterationCapExceeded(Exception):
    """A solver ran past its proven iteration bound: an implementation bug."""


class _NoneLeftWinningType:
    """Marker: no Max strategy keeps node n+1 winning in the perturbed game.

    Returned by left_optimal_max_strategy when the current lambda_k is already
    the minimal zero of phi.
    """

    __slots__ = ()

    def __repr__(self) -> str:
        return "NoneLeftWinning"


NoneLeftWinning = _NoneLeftWinningType()


@dataclass(frozen=True)
class SolveOutcome:
    """Result of a solve: status, unscaled lambda*, witness, certificate, trace.

    The trace lists (iteration, lambda_k, phi sign) triples in the scaled
    units the algorithms iterate in.
    """

    status: str  # "Optimal" | "Unbounded" | "Infeasible"
    lam: Optional[Fraction]
    witness: Optional[tuple]
    certificate: Optional[object]
    trace: list


@dataclass(frozen=True)
class KleeneSystem:
    """First subsystem of the split C y <= D^sigma y: E x_I v F x_J v h <= x_I."""

    I: tuple
    J: tuple
    E: TropMatrix
    F: TropMatrix
    h: tuple


# --- precheck result markers ----------------------------------------------


@dataclass(frozen=True)
class Proceed:
    lam0: Fraction


@dataclass(frozen=True)
class PrecheckInfeasible:
    reason: str = ""


@dataclass(frozen=True)
class PrecheckUnbounded:
    # True when the denominator row v is identically -inf: the parametric game
    # is undefined there, so no strategy certificate can accompany the outcome.
    degenerate: bool = False


@dataclass(frozen=True)
class OptimalAtLowerBound:
    lam: Fraction


# --- homogeneous feasibility with forced -inf coordinates ------------------


def homogeneous_solution_with_zeros(
    C: TropMatrix, D: TropMatrix, neg_cols, pin: int
) -> Optional[tuple]:
    """A solution y of C y <= D y with y_j = -inf on neg_cols and y_pin = 0.

    Returns None when no such solution exists.  The raw reduced system may
    break the game assumptions, so a fixpoint preprocessing runs first:

    * a row whose right-hand side is identically -inf over the remaining
      columns forces every remaining column in its left-hand support to -inf
      and is removed (infeasible if that hits the pinned column);
    * a column with no finite left-hand coefficient in the remaining rows can
      be pushed up to discharge every remaining row where it has a finite
      right-hand coefficient; the column and those rows are removed.

    The surviving core satisfies both game assumptions and is solved through
    the winning oracle; push-up values are back-substituted in reverse
    elimination order, which is triangular by construction.
    """
    m, n = C.rows, C.cols
    forced = set(neg_cols)
    if pin in forced:
        raise ValueError("the pinned column cannot be forced to -inf")
    alive_rows = set(range(m))
    alive_cols = set(range(n)) - forced
    pushups: List[Tuple[int, list]] = []
    changed = True
    while changed:
        changed = False
        for i in sorted(alive_rows):
            if any(D.entries[i][j].is_finite for j in alive_cols):
                continue
            for j in sorted(alive_cols):
                if C.entries[i][j].is_finite:
                    if j == pin:
                        return None
                    alive_cols.discard(j)
                    forced.add(j)
            alive_rows.discard(i)
            changed = True
        for j in sorted(alive_cols):
            if any(C.entries[i][j].is_finite for i in alive_rows):
                continue
            discharged = sorted(i for i in alive_rows if D.entries[i][j].is_finite)
            pushups.append((j, discharged))
            alive_rows -= set(discharged)
            alive_cols.discard(j)
            changed = True

    y: List[Optional[ExtendedNumber]] = [None] * n
    for j in forced:
        y[j] = NEG_INF
    rows = sorted(alive_rows)
    cols = sorted(alive_cols)
    if pin in alive_cols:
        if rows:
            A_core = TropMatrix([[C.entries[i][j] for j in cols] for i in rows])
            B_core = TropMatrix([[D.entries[i][j] for j in cols] for i in rows])
            witness = feasibility_witness(MeanPayoffGame(A_core, B_core), cols.index(pin))
            if witness is None:
                return None
            for k, j in enumerate(cols):
                y[j] = witness[k]
        else:
            for j in cols:
                y[j] = ExtendedNumber.finite(0) if j == pin else NEG_INF
    else:
        # pin was discharged by a push-up; the core is satisfied by -inf.
        for j in cols:
            y[j] = NEG_INF
    for j, discharged in reversed(pushups):
        bound = Fraction(0)
        for i in discharged:
            lhs = NEG_INF
            for k in range(n):
                if k == j:
                    continue
                ck = C.entries[i][k]
                if ck.is_finite and y[k] is not None and y[k].is_finite:
                    term = ExtendedNumber.finite(ck.value + y[k].value)
                    if lhs < term:
                        lhs = term
            if lhs.is_finite:
                bound = max(bound, lhs.value - D.entries[i][j].value)
        y[j] = ExtendedNumber.finite(bound)
    if y[pin].is_finite and y[pin].value != 0:
        shift = y[pin].value
        y = [ExtendedNumber.finite(e.value - shift) if e.is_finite else e for e in y]
    out = tuple(y)
    lhs = trop_matvec(C, out)
    rhs = trop_matvec(D, out)
    if not all(a <= b for a, b in zip(lhs, rhs)):
        raise InternalCertificateMismatch("assembled solution fails C y <= D y")
    return out


# --- prechecks -------------------------------------------------------------


def precheck(H: HomogeneousInstance):
    """Classify the instance before iterating: degenerate objectives, the
    global support test for unboundedness, and the initial phi brackets."""
    n = H.n
    supp_u = frozenset(j for j in range(n + 1) if H.u[j].is_finite)
    supp_v = frozenset(j for j in range(n + 1) if H.v[j].is_finite)
    if not supp_v:
        if supp_u and n in supp_u:
            return PrecheckInfeasible(
                "objective numerator is always finite while the denominator is -inf"
            )
        y = homogeneous_solution_with_zeros(H.C, H.D, supp_u, n)
        if y is not None:
            return PrecheckUnbounded(degenerate=True)
        return PrecheckInfeasible(
            "denominator is identically -inf and no feasible point avoids a finite numerator"
            if supp_u
            else "no feasible point"
        )
    if not supp_u:
        # Numerator identically -inf: the objective is -inf wherever feasible.
        y = homogeneous_solution_with_zeros(H.C, H.D, frozenset(), n)
        if y is not None:
            return PrecheckUnbounded()
        return PrecheckInfeasible("no feasible point")
    if n not in supp_u:
        y = homogeneous_solution_with_zeros(H.C, H.D, supp_u, n)
        if y is not None:
            return PrecheckUnbounded()
    lam_lo, lam_hi = initial_bounds(H)
    ok_hi, _, _ = phi_nonneg(H, lam_hi)
    if not ok_hi:
        return PrecheckInfeasible("phi is negative at the upper bound")
    ok_lo, _, _ = phi_nonneg(H, lam_lo)
    if ok_lo:
        ok_below, _, _ = phi_nonneg(H, lam_lo - 1)
        if ok_below:
            return PrecheckUnbounded()
        return OptimalAtLowerBound(Fraction(lam_lo))
    return Proceed(Fraction(lam_hi))


# --- Newton machinery ------------------------------------------------------


def build_kleene_system(
    C: TropMatrix, D: TropMatrix, sigma_rows: MaxStrategy, l: int
) -> KleeneSystem:
    """Split C y <= D^sigma y with y_l = 0 into E x_I v F x_J v h <= x_I.

    I holds the coordinates targeted by sigma (other than l), J the remaining
    coordinates (forced to -inf by the least solution), h the constants from
    the y_l = 0 column.  Rows with sigma(i) = l form the constant-side second
    subsystem and do not appear here.
    """
    m, n = C.rows, C.cols
    targets = sorted({sigma_rows.choices[i] for i in range(m) if sigma_rows.choices[i] != l})
    tpos = {t: k for k, t in enumerate(targets)}
    J = tuple(j for j in range(n) if j != l and j not in tpos)
    jpos = {j: k for k, j in enumerate(J)}
    E = [[NEG_INF] * len(targets) for _ in targets]
    F = [[NEG_INF] * len(J) for _ in targets]
    h = [NEG_INF] * len(targets)
    for i in range(m):
        t = sigma_rows.choices[i]
        if t == l:
            continue
        bv = D.entries[i][t].value
        k = tpos[t]
        for j in range(n):
            av = C.entries[i][j]
            if not av.is_finite:
                continue
            coef = ExtendedNumber.finite(av.value - bv)
            if j == l:
                if h[k] < coef:
                    h[k] = coef
            elif j in tpos:
                if E[k][tpos[j]] < coef:
                    E[k][tpos[j]] = coef
            else:
                if F[k][jpos[j]] < coef:
                    F[k][jpos[j]] = coef
    return KleeneSystem(tuple(targets), J, TropMatrix(E), TropMatrix(F), tuple(h))


def newton_step(H: HomogeneousInstance, sigma: MaxStrategy) -> ExtendedNumber:
    """One positive-Newton step: the minimal zero of phi^sigma.

    With l = sigma(m+1) and y_l pinned to 0, the least solution y of
    C y <= D^sigma y (Kleene star on the first subsystem, the second one
    verified afterwards) gives lambda_next = (u y) - v_l, or -inf when u y is
    -inf.
    """
    from .game_engine import least_solution_fixed

    if len(sigma.choices) != H.m + 1:
        raise ValueError("sigma must cover all m+1 Max rows of the parametric game")
    l = sigma.choices[H.m]
    if not H.v[l].is_finite:
        raise ValueError("sigma routes the objective row to a -inf column")
    rows_sigma = MaxStrategy(sigma.choices[: H.m])
    y = least_solution_fixed(H.C, H.D, rows_sigma, l)
    uy = NEG_INF
    for j in range(H.n + 1):
        u = H.u[j]
        if u.is_finite and y[j].is_finite:
            term = ExtendedNumber.finite(u.value + y[j].value)
            if uy < term:
                uy = term
    if not uy.is_finite:
        return NEG_INF
    return ExtendedNumber.finite(uy.value - H.v[l].value)


def left_optimal_max_strategy(
    H: HomogeneousInstance, lam: Union[int, Fraction]
) -> Union[MaxStrategy, _NoneLeftWinningType]:
    """Max strategy winning at lambda_k - 1/(min(m,n)+2), or NoneLeftWinning.

    Payments are multiplied by min(m,n)+2 to restore integrality before the
    oracle runs.  A strategy that keeps node n+1 winning just left of
    lambda_k is left optimal at lambda_k; when none exists, lambda_k is the
    minimal zero of phi.
    """
    from .game_engine import game_value_and_strategy, integer_oracle

    k2 = H.k_bound + 2
    perturbed = scaled_copy(game_at(H, Fraction(lam) - Fraction(1, k2)), k2)
    # Cheap sign test first: at the terminal lambda the node loses and the
    # exact perturbed value is never needed (the oracle result is cached, so
    # the value refinement below reuses it when the node does win).
    rep = integer_oracle(perturbed)
    if H.n not in rep.winning:
        return NoneLeftWinning
    # The returned sigma guarantees exactly the value t at node n+1, i.e. it
    # is optimal there, not merely winning, which pins the left-optimal choice.
    _t, sigma = game_value_and_strategy(perturbed, H.n)
    return sigma


def positive_newton_cap(H: HomogeneousInstance) -> int:
    """Iteration bound for the positive Newton method: 4M(min(m,n)+1)+1."""
    return int(4 * H.M * (H.k_bound + 1)) + 1


def bisection_cap(H: HomogeneousInstance) -> int:
    """Oracle-call bound for bisection: ceil(log2(4M(min(m,n)+1)))+1."""
    width = int(4 * H.M * (H.k_bound + 1))
    return math.ceil(math.log2(width)) + 1 if width > 1 else 1


def positive_newton_solve(
    H: HomogeneousInstance, lam0: Optional[Fraction] = None
) -> SolveOutcome:
    """Newton iteration from above: strictly decreasing feasible lambda_k."""
    _, lam_hi = initial_bounds(H)
    lam = Fraction(lam_hi if lam0 is None else lam0)
    cap = positive_newton_cap(H)
    trace = []
    for k in range(cap + 1):
        trace.append((k, lam, ">=0"))
        sigma = left_optimal_max_strategy(H, lam)
        if sigma is NoneLeftWinning:
            return _finish_optimal(H, lam, trace)
        nxt = newton_step(H, sigma)
        if not nxt.is_finite:
            return _finish_unbounded(H, trace)
        if nxt.value == lam:
            return _finish_optimal(H, lam, trace)
        if nxt.value > lam:
            raise AssertionError("positive Newton step failed to decrease")
        lam = nxt.value
    raise IterationCapExceeded(f"positive Newton exceeded {cap} iterations")


def bisection_solve(H: HomogeneousInstance) -> SolveOutcome:
    """Integer dichotomy on the sign of phi between the initial bounds."""
    lam_lo, lam_hi = initial_bounds(H)
    lo, hi = int(lam_lo), int(lam_hi)  # phi(lo) < 0 <= phi(hi) after Proceed
    trace = []
    k = 0
    while hi - lo > 1:
        mid = -((-(hi + lo)) // 2)
        ok, _, _ = phi_nonneg(H, mid)
        trace.append((k, Fraction(mid), ">=0" if ok else "<0"))
        if ok:
            hi = mid
        else:
            lo = mid
        k += 1
    return _finish_optimal(H, Fraction(hi), trace)


def _min_strategy_count(H: HomogeneousInstance) -> int:
    count = 1
    U = game_at(H, 0).A
    for j in range(H.n + 1):
        count *= sum(1 for i in range(H.m + 1) if U.entries[i][j].is_finite)
    return count


def _min_zero_phi_tau(
    H: HomogeneousInstance, tau: MinStrategy, lam_k: Fraction, lam_hi: Fraction
) -> Optional[Fraction]:
    """Minimal zero of the convex nondecreasing phi_tau in (lam_k, lam_hi].

    Integer dichotomy finds the first nonnegative integer value; the grid of
    rationals with denominator <= min(m,n)+1 inside the final unit interval
    brackets the zero between breakpoint-free neighbours, where one exact
    linear interpolation finishes.  Returns None when phi_tau stays negative
    up to lam_hi.
    """
    cache = {}

    def f(z: Fraction) -> Fraction:
        if z not in cache:
            cache[z] = phi_tau(H, tau, z)
        return cache[z]

    if f(Fraction(lam_hi)) < 0:
        return None
    lo = math.floor(lam_k)  # f(lo) <= f(lam_k) < 0 by monotonicity
    hi = math.ceil(lam_hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if f(Fraction(mid)) >= 0:
            hi = mid
        else:
            lo = mid
    z0 = hi
    left = max(Fraction(z0 - 1), Fraction(lam_k))
    k1 = H.k_bound + 1
    pts = sorted(
        {
            Fraction(num, q)
            for q in range(1, k1 + 1)
            for num in range(math.floor(left * q) + 1, z0 * q + 1)
            if Fraction(num, q) > left
        }
    )
    lo_idx, hi_idx = -1, len(pts) - 1  # f(pts[-1]) = f(z0) >= 0
    while hi_idx - lo_idx > 1:
        mid = (lo_idx + hi_idx) // 2
        if f(pts[mid]) >= 0:
            hi_idx = mid
        else:
            lo_idx = mid
    c = pts[hi_idx]
    vc = f(c)
    if vc == 0:
        return c
    prev = pts[lo_idx] if lo_idx >= 0 else left
    vp = f(prev)
    if not vp < 0:
        raise AssertionError("zero bracketing lost the sign change")
    return prev + (c - prev) * (-vp) / (vc - vp)


def negative_newton_solve(H: HomogeneousInstance) -> SolveOutcome:
    """Newton iteration from below: strictly increasing infeasible lambda_k."""
    lam_lo, lam_hi = initial_bounds(H)
    lam = Fraction(lam_lo)
    k1 = H.k_bound + 1
    cap = min(_min_strategy_count(H), int(4 * H.M * k1) * k1 * k1 + k1 + 4)
    trace = []
    for k in range(cap + 1):
        ok, _sigma, tau = phi_nonneg(H, lam)
        trace.append((k, lam, ">=0" if ok else "<0"))
        if ok:
            return _finish_optimal(H, lam, trace)
        nxt = _min_zero_phi_tau(H, tau, lam, Fraction(lam_hi))
        if nxt is None:
            return SolveOutcome("Infeasible", None, None, None, trace)
        if not nxt > lam:
            raise AssertionError("negative Newton step failed to increase")
        lam = nxt
    raise IterationCapExceeded(f"negative Newton exceeded {cap} iterations")


# --- outcome assembly ------------------------------------------------------


def _unscale_entry(e: ExtendedNumber, scale: int) -> ExtendedNumber:
    return ExtendedNumber.finite(Fraction(e.value, scale)) if e.is_finite else e


def _finish_optimal(H: HomogeneousInstance, lam_scaled: Fraction, trace: list) -> SolveOutcome:
    from . import certify

    cert = certify.make_optimality_certificate(H, lam_scaled)
    witness = cert.witness[: H.n] if cert.witness is not None else None
    return SolveOutcome("Optimal", Fraction(lam_scaled) / H.scale, witness, cert, trace)


def _finish_unbounded(
    H: HomogeneousInstance, trace: list, degenerate: bool = False
) -> SolveOutcome:
    from . import certify

    cert = None if degenerate else certify.make_unboundedness_certificate(H)
    return SolveOutcome("Unbounded", None, None, cert, trace)


def solve(inst: LfpInstance, method: str = "newton", lam0: Optional[Fraction] = None) -> SolveOutcome:
    """Homogenize, precheck, run the chosen method, and unscale the result."""
    H = homogenize(inst)
    pre = precheck(H)
    if isinstance(pre, PrecheckInfeasible):
        return SolveOutcome("Infeasible", None, None, None, [])
    if isinstance(pre, PrecheckUnbounded):
        return _finish_unbounded(H, [], pre.degenerate)
    if isinstance(pre, OptimalAtLowerBound):
        return _finish_optimal(H, pre.lam, [(0, pre.lam, ">=0")])
    if method in ("newton", "positive-newton"):
        start = None
        if lam0 is not None:
            start = Fraction(lam0) * H.scale
            ok, _, _ = phi_nonneg(H, start)
            if not ok:
                raise ValueError("lam0 is not feasible: phi(lam0) < 0")
        return positive_newton_solve(H, start)
    if method == "bisection":
        return bisection_solve(H)
    if method == "negative-newton":
        return negative_newton_solve(H)
    raise ValueError(f"unknown method {method!r}")
