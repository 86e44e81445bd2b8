"""Bipartite mean payoff games: values, winning sets, strategies, witnesses.

A game has m Max nodes (the rows) and n Min nodes (the columns) and is given
by two max-plus payment matrices A and B: Min moving j -> i pays -a_ij, Max
moving i -> l receives b_il, and one turn is one Min move followed by one Max
move.  Values are long-run average payments per turn.

The winning-set oracle runs two least-progress-measure (energy-game) liftings:
a primal one whose finite measures certify chi >= 0 together with a Max
strategy, and a dual one on the negated, (x min(m,n), -1)-shifted payments
whose finite measures certify chi < 0 strictly together with a Min strategy.
Both liftings run at their completeness caps in interleaved bounded quanta:
whichever converges first fixes the partition, and the other strategy is then
recovered cheaply on the closed subregion it certifies, so neither side ever
pays the pseudo-polynomial climb for nodes the other side settles.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Optional, Sequence

from .trop_core import (
    MAX_PLUS,
    NEG_INF,
    ExtendedNumber,
    TropMatrix,
    cycle_time_vector,
    ext,
    kleene_least_solution,
    residual_apply,
    trop_matvec,
)


try:
    from . import _fastlift as _fl

    _HAVE_JIT = _fl.HAVE_JIT
except ImportError:  # pragma: no cover - exercised only without numba
    _fl = None
    _HAVE_JIT = False


class AssumptionViolated(Exception):
    """A payment matrix breaks Assumption 1 (B row) or 2 (A column)."""


class TooLarge(Exception):
    """Brute-force enumeration would exceed the strategy-space guard."""


class InternalCertificateMismatch(Exception):
    """A constructed witness failed verification: indicates an oracle bug."""


class SecondSubsystemViolated(Exception):
    """The Kleene least solution violates the discarded constant-side rows."""


BRUTE_FORCE_GUARD = 10**6

# Games with at least this many payment entries use the vectorized synchronous
# lifting; smaller ones stay on the worklist, which has less per-call overhead.
VECTOR_LIFT_THRESHOLD = 256


class MeanPayoffGame:
    """Validated bipartite mean payoff game (payments A, B; m Max x n Min nodes)."""

    __slots__ = ("m", "n", "A", "B")

    def __init__(self, A: TropMatrix, B: TropMatrix):
        if A.semiring != MAX_PLUS or B.semiring != MAX_PLUS:
            raise ValueError("payment matrices must be max-plus")
        if (A.rows, A.cols) != (B.rows, B.cols):
            raise ValueError("payment matrices must share a shape")
        self.m = A.rows
        self.n = A.cols
        self.A = A
        self.B = B
        problems = validate_shape(A, B)
        if problems:
            raise AssumptionViolated("; ".join(problems))

    def min_moves(self, j: int) -> list:
        """Max nodes reachable from Min node j (finite a_ij)."""
        return [i for i in range(self.m) if self.A.entries[i][j].is_finite]

    def max_moves(self, i: int) -> list:
        """Min nodes reachable from Max node i (finite b_il)."""
        return [l for l in range(self.n) if self.B.entries[i][l].is_finite]


def validate_shape(A: TropMatrix, B: TropMatrix) -> list:
    """Assumption 1 (every B row has a finite entry) and 2 (every A column)."""
    problems = []
    for i in range(B.rows):
        if not any(e.is_finite for e in B.entries[i]):
            problems.append(f"row {i} of B has no finite entry (Max node stuck)")
    for j in range(A.cols):
        if not any(A.entries[i][j].is_finite for i in range(A.rows)):
            problems.append(f"column {j} of A has no finite entry (Min node stuck)")
    return problems


def validate(game: MeanPayoffGame) -> list:
    """Return the list of assumption violations (empty when the game is valid)."""
    return validate_shape(game.A, game.B)


@dataclass(frozen=True)
class MaxStrategy:
    """Positional strategy for Max: choices[i] is the Min node picked at row i."""

    choices: tuple

    def __call__(self, i: int) -> int:
        return self.choices[i]

    def check(self, game: MeanPayoffGame) -> None:
        if len(self.choices) != game.m:
            raise ValueError("Max strategy has the wrong length")
        for i, l in enumerate(self.choices):
            if not (0 <= l < game.n) or not game.B.entries[i][l].is_finite:
                raise ValueError(f"Max strategy picks a forbidden move {i}->{l}")


@dataclass(frozen=True)
class MinStrategy:
    """Positional strategy for Min: choices[j] is the Max node picked at column j."""

    choices: tuple

    def __call__(self, j: int) -> int:
        return self.choices[j]

    def check(self, game: MeanPayoffGame) -> None:
        if len(self.choices) != game.n:
            raise ValueError("Min strategy has the wrong length")
        for j, i in enumerate(self.choices):
            if not (0 <= i < game.m) or not game.A.entries[i][j].is_finite:
                raise ValueError(f"Min strategy picks a forbidden move {j}->{i}")


@dataclass(frozen=True)
class OracleReport:
    """winning_oracle output: winning Min nodes plus both witness strategies."""

    winning: frozenset  # Min nodes j with chi_j >= 0
    winning_max: frozenset  # Max nodes on the winning side
    sigma: MaxStrategy  # cycles of G^sigma reachable from winning nodes are >= 0
    tau: MinStrategy  # cycles of G^tau reachable from losing nodes are < 0


@dataclass(frozen=True)
class GameValueReport:
    """Exact per-Min-node values with the winning set and both strategies."""

    chi: tuple  # Fractions
    winning: frozenset
    sigma: MaxStrategy
    tau: MinStrategy


def dynamic_operator(game: MeanPayoffGame, x: Sequence) -> tuple:
    """f_j(x) = min_k(-a_kj + max_l(b_kl + x_l)) = A# (B x)."""
    return residual_apply(game.A, trop_matvec(game.B, [ext(e) for e in x]))


def restrict_max(game: MeanPayoffGame, sigma: MaxStrategy) -> TropMatrix:
    """Min-plus n x n matrix of the min-only map f^sigma (x -> A# B^sigma x)."""
    sigma.check(game)
    n = game.n
    grid = [[None] * n for _ in range(n)]
    for j in range(n):
        for l in range(n):
            acc = None
            for i in range(game.m):
                if sigma.choices[i] != l:
                    continue
                a = game.A.entries[i][j]
                if not a.is_finite:
                    continue
                val = game.B.entries[i][l].value - a.value
                if acc is None or val < acc:
                    acc = val
            grid[j][l] = ExtendedNumber.finite(acc) if acc is not None else None
    from .trop_core import POS_INF

    return TropMatrix(
        [[e if e is not None else POS_INF for e in row] for row in grid],
        semiring="min_plus",
    )


def restrict_min(game: MeanPayoffGame, tau: MinStrategy) -> TropMatrix:
    """Max-plus n x n matrix of the max-only map f^tau."""
    tau.check(game)
    n = game.n
    grid = []
    for j in range(n):
        i = tau.choices[j]
        a = game.A.entries[i][j].value
        grid.append(
            [
                ExtendedNumber.finite(b.value - a) if b.is_finite else NEG_INF
                for b in game.B.entries[i]
            ]
        )
    return TropMatrix(grid, semiring=MAX_PLUS)


def play_outcome(game: MeanPayoffGame, j: int, tau: MinStrategy, sigma: MaxStrategy) -> Fraction:
    """Mean payment per turn of the unique cycle reached from Min node j."""
    tau.check(game)
    sigma.check(game)
    first_seen = {j: 0}
    payments = []
    cur = j
    while True:
        i = tau.choices[cur]
        nxt = sigma.choices[i]
        payments.append(game.B.entries[i][nxt].value - game.A.entries[i][cur].value)
        t = len(payments)
        if nxt in first_seen:
            t0 = first_seen[nxt]
            cycle = payments[t0:t]
            return Fraction(sum(cycle), len(cycle))
        first_seen[nxt] = t
        cur = nxt


def _strategy_spaces(game: MeanPayoffGame):
    min_supports = [game.min_moves(j) for j in range(game.n)]
    max_supports = [game.max_moves(i) for i in range(game.m)]
    size = 1
    for s in min_supports:
        size *= len(s)
    for s in max_supports:
        size *= len(s)
    return min_supports, max_supports, size


def brute_force_value(game: MeanPayoffGame, j: int) -> Fraction:
    """min over tau of max over sigma of play_outcome, by full enumeration."""
    min_supports, max_supports, size = _strategy_spaces(game)
    if size > BRUTE_FORCE_GUARD:
        raise TooLarge(f"strategy space of size {size} exceeds the guard")
    best = None
    for tau_choices in product(*min_supports):
        tau = MinStrategy(tau_choices)
        worst = None
        for sigma_choices in product(*max_supports):
            val = play_outcome(game, j, tau, MaxStrategy(sigma_choices))
            if worst is None or val > worst:
                worst = val
        if best is None or worst < best:
            best = worst
    return best


# ---------------------------------------------------------------------------
# Winning-set oracle: dual progress-measure lifting with deepening caps.
# ---------------------------------------------------------------------------


def _int_payments(game: MeanPayoffGame):
    """Dense integer payment grids (None for -inf); raises on non-integers."""
    a = []
    b = []
    for i in range(game.m):
        arow = []
        brow = []
        for j in range(game.n):
            e = game.A.entries[i][j]
            if e.is_finite:
                if e.value.denominator != 1:
                    raise ValueError("winning_oracle requires integer payments")
                arow.append(int(e.value))
            else:
                arow.append(None)
            e = game.B.entries[i][j]
            if e.is_finite:
                if e.value.denominator != 1:
                    raise ValueError("winning_oracle requires integer payments")
                brow.append(int(e.value))
            else:
                brow.append(None)
        a.append(arow)
        b.append(brow)
    return a, b


class _LiftState:
    """Incremental least-progress-measure lifting of a bipartite energy game.

    Survivor nodes S minimize over their moves (s -> t with weight w: the
    measure obeys eS = min_t max(0, eT - w)); adversary nodes T maximize.
    Values strictly above ``cap`` stand for top.  ``run`` processes a bounded
    number of worklist pops so two liftings can be interleaved.
    """

    __slots__ = ("nS", "nT", "succS", "succT", "predS", "predT", "cap", "top",
                 "eS", "eT", "queue", "inqS", "inqT")

    def __init__(self, nS, nT, succS, succT, predS, predT, cap):
        from collections import deque

        self.nS = nS
        self.nT = nT
        self.succS = succS
        self.succT = succT
        self.predS = predS
        self.predT = predT
        self.cap = cap
        self.top = cap + 1
        self.eS = [0] * nS
        self.eT = [0] * nT
        self.queue = deque([(0, s) for s in range(nS)] + [(1, t) for t in range(nT)])
        self.inqS = [True] * nS
        self.inqT = [True] * nT

    def run(self, quantum: int) -> bool:
        """Process up to ``quantum`` pops; True when the fixpoint is reached."""
        queue = self.queue
        cap, top = self.cap, self.top
        eS, eT = self.eS, self.eT
        pops = 0
        while queue and pops < quantum:
            pops += 1
            side, v = queue.popleft()
            if side == 0:
                self.inqS[v] = False
                best = None
                for (t, w) in self.succS[v]:
                    e = eT[t]
                    if e > cap:
                        nv = top
                    else:
                        nv = e - w
                        if nv < 0:
                            nv = 0
                    if best is None or nv < best:
                        best = nv
                        if best == 0:
                            break
                if best is None or best > top:
                    best = top
                if best > eS[v]:
                    eS[v] = best
                    for t in self.predS[v]:
                        if not self.inqT[t]:
                            self.inqT[t] = True
                            queue.append((1, t))
            else:
                self.inqT[v] = False
                best = 0
                for (s, w) in self.succT[v]:
                    e = eS[s]
                    if e > cap:
                        nv = top
                    else:
                        nv = e - w
                        if nv < 0:
                            nv = 0
                    if nv > best:
                        best = nv
                        if best >= top:
                            break
                if best > top:
                    best = top
                if best > eT[v]:
                    eT[v] = best
                    for s in self.predT[v]:
                        if not self.inqS[s]:
                            self.inqS[s] = True
                            queue.append((0, s))
        return not queue


class _VecLift:
    """Synchronous numpy lifting for dense games; same contract as _LiftState.

    One round applies the lifting operator to every node at once: survivor
    values are row minima of max(0, eT - WS) and adversary values column
    maxima of max(0, eS + WT), with values above the cap clamped to top.
    From the all-zero start the iterates increase monotonically to the least
    fixpoint, so the result matches the worklist lifting exactly.

    Nodes above the cap act as +infinity sources: before each round they are
    promoted to ``high`` (top plus the largest weight magnitude), which forces
    every outgoing contribution above the cap no matter the arc weight.
    Missing arcs carry a sentinel weight so large that their contribution can
    never win the reduction, which keeps the inner loop free of fancy
    indexing: each round is two broadcast ops, two reductions and clips.
    """

    __slots__ = ("cap", "top", "high", "eS", "eT", "_eS2", "_eT2", "WS", "WT",
                 "_bufS", "_bufT")

    def __init__(self, WS, okS, WT, okT, cap):
        import numpy as np

        self.cap = cap
        self.top = cap + 1
        wmax = 1
        if WS.size and okS.any():
            wmax = max(wmax, int(np.abs(WS[okS]).max()))
        if WT.size and okT.any():
            wmax = max(wmax, int(np.abs(WT[okT]).max()))
        self.high = self.top + wmax
        big = 2 * self.high + 1
        # cand = eT - WS: a missing arc must lose every row minimum
        self.WS = np.where(okS, WS, -big)
        # contrib = eS + WT: a missing arc must lose every column maximum
        self.WT = np.where(okT, WT, -big)
        nS, nT = WS.shape
        self.eS = np.zeros(nS, dtype=np.int64)
        self.eT = np.zeros(nT, dtype=np.int64)
        self._eS2 = np.empty(nS, dtype=np.int64)
        self._eT2 = np.empty(nT, dtype=np.int64)
        self._bufS = np.empty((nS, nT), dtype=np.int64)
        self._bufT = np.empty((nS, nT), dtype=np.int64)

    def run(self, quantum: int) -> bool:
        import numpy as np

        cap, top, high = self.cap, self.top, self.high
        WS, WT, bufS, bufT = self.WS, self.WT, self._bufS, self._bufT
        eS, eT, eS2, eT2 = self.eS, self.eT, self._eS2, self._eT2
        for _ in range(quantum):
            src = np.where(eS > cap, high, eS)
            np.add(src[:, None], WT, out=bufT)
            np.max(bufT, axis=0, out=eT2)
            np.clip(eT2, 0, top, out=eT2)
            src = np.where(eT2 > cap, high, eT2)
            np.subtract(src[None, :], WS, out=bufS)
            np.min(bufS, axis=1, out=eS2)
            np.clip(eS2, 0, top, out=eS2)
            if (eS2 == eS).all() and (eT2 == eT).all():
                self.eS, self.eT = eS2, eT2
                self._eS2, self._eT2 = eS, eT
                return True
            eS, eS2 = eS2, eS
            eT, eT2 = eT2, eT
        self.eS, self.eT = eS, eT
        self._eS2, self._eT2 = eS2, eT2
        return False


def _lift_bipartite(nS, nT, succS, succT, predS, predT, cap):
    """Least progress measures, run to the fixpoint; returns (eS, eT)."""
    if _HAVE_JIT and nS * nT >= VECTOR_LIFT_THRESHOLD:
        state = _fl.KernelLift(
            _fl.csr_from_lists(succS),
            _fl.csr_from_lists(succT),
            nS, nT, cap,
        )
    else:
        state = _LiftState(nS, nT, succS, succT, predS, predT, cap)
    while not state.run(1 << 16):
        pass
    return state.eS, state.eT


_ORACLE_CACHE: "OrderedDict" = None  # type: ignore[assignment]
_ORACLE_CACHE_LIMIT = 8


def _oracle_core(m, n, a, b):
    """Memoized front end of the oracle for expensive (large) games.

    The solver asks for the same large game more than once, e.g. the
    perturbed game at the optimum is probed during the Newton iteration and
    again while synthesizing the certificate.  Tiny games are not cached:
    hashing their payments would cost a noticeable fraction of solving them.
    """
    if m * n < VECTOR_LIFT_THRESHOLD:
        return _oracle_core_uncached(m, n, a, b)
    global _ORACLE_CACHE
    if _ORACLE_CACHE is None:
        from collections import OrderedDict

        _ORACLE_CACHE = OrderedDict()
    key = (m, n, tuple(x for row in a for x in row), tuple(x for row in b for x in row))
    hit = _ORACLE_CACHE.get(key)
    if hit is not None:
        _ORACLE_CACHE.move_to_end(key)
        return hit
    result = _oracle_core_uncached(m, n, a, b)
    _ORACLE_CACHE[key] = result
    if len(_ORACLE_CACHE) > _ORACLE_CACHE_LIMIT:
        _ORACLE_CACHE.popitem(last=False)
    return result


def _oracle_core_uncached(m, n, a, b):
    """Winning Min/Max node sets plus both strategies for integer payments.

    Two liftings race in bounded quanta: the primal one (survivor Max, at the
    completeness cap) whose finite fixpoint values certify chi >= 0, and the
    dual one (survivor Min, negated payments scaled by min(m,n) and shifted
    by -1) whose finite values certify chi < 0.  Whichever reaches its
    fixpoint first fixes the partition by completeness of its cap; the other
    side's strategy is then recovered on its closed certified subregion,
    where the remaining lifting has no divergent nodes and stays cheap.
    """
    w_max = 1
    for i in range(m):
        for j in range(n):
            if a[i][j] is not None:
                w_max = max(w_max, abs(a[i][j]))
            if b[i][j] is not None:
                w_max = max(w_max, abs(b[i][j]))
    scale = max(1, min(m, n))

    # Primal energy game: survivor = Max.  Max move i -> l has weight b_il,
    # Min move j -> i weight -a_ij.
    p_succS = [[(l, b[i][l]) for l in range(n) if b[i][l] is not None] for i in range(m)]
    p_succT = [[(i, -a[i][j]) for i in range(m) if a[i][j] is not None] for j in range(n)]
    p_predS = [[j for j in range(n) if a[i][j] is not None] for i in range(m)]
    p_predT = [[i for i in range(m) if b[i][j] is not None] for j in range(n)]

    # Dual energy game: survivor = Min.  Min move j -> i has weight
    # (scale*a_ij - 1), Max move i -> l weight -scale*b_il.
    d_succS = [
        [(i, scale * a[i][j] - 1) for i in range(m) if a[i][j] is not None]
        for j in range(n)
    ]
    d_succT = [[(l, -scale * b[i][l]) for l in range(n) if b[i][l] is not None] for i in range(m)]
    d_predS = [[i for i in range(m) if b[i][j] is not None] for j in range(n)]
    d_predT = [[j for j in range(n) if a[i][j] is not None] for i in range(m)]

    cap_primal = (m + n + 2) * w_max + 1
    cap_dual = (m + n + 2) * (scale * w_max + 1) + 1
    if m * n >= VECTOR_LIFT_THRESHOLD:
        import numpy as np

        Aw = np.array([[x if x is not None else 0 for x in row] for row in a], dtype=np.int64)
        Am = np.array([[x is not None for x in row] for row in a])
        Bw = np.array([[x if x is not None else 0 for x in row] for row in b], dtype=np.int64)
        Bm = np.array([[x is not None for x in row] for row in b])
        if _HAVE_JIT:
            primal = _fl.KernelLift(
                _fl.csr_from_dense(Bw, Bm),
                _fl.csr_from_dense(-Aw.T, Am.T),
                m, n, cap_primal,
            )
            dual = _fl.KernelLift(
                _fl.csr_from_dense(scale * Aw.T - 1, Am.T),
                _fl.csr_from_dense(-scale * Bw, Bm),
                n, m, cap_dual,
            )
            quantum = 1 << 18
        else:
            primal = _VecLift(Bw, Bm, Aw, Am, cap_primal)
            dual = _VecLift(scale * Aw.T - 1, Am.T, scale * Bw.T, Bm.T, cap_dual)
            quantum = 64
    else:
        primal = _LiftState(m, n, p_succS, p_succT, p_predS, p_predT, cap_primal)
        dual = _LiftState(n, m, d_succS, d_succT, d_predS, d_predT, cap_dual)
        quantum = 4096
    while True:
        if primal.run(quantum):
            primal_finished = True
            break
        if dual.run(quantum):
            primal_finished = False
            break

    if primal_finished:
        eMax, eMin = primal.eS, primal.eT
        win_min = frozenset(j for j in range(n) if eMin[j] <= cap_primal)
        win_max = frozenset(i for i in range(m) if eMax[i] <= cap_primal)
        lose_min = frozenset(range(n)) - win_min
        lose_max = frozenset(range(m)) - win_max
        # Dual lifting restricted to the losing region (closed under all Max
        # moves; Min moves into the winning region are never useful to Min).
        sub_succS = [
            [(i, w) for (i, w) in d_succS[j] if i in lose_max] if j in lose_min else []
            for j in range(n)
        ]
        sub_succT = [d_succT[i] if i in lose_max else [] for i in range(m)]
        sub_predS = [[i for i in d_predS[j] if i in lose_max] for j in range(n)]
        sub_predT = [[j for j in d_predT[i] if j in lose_min] for i in range(m)]
        fMin, fMax = _lift_bipartite(n, m, sub_succS, sub_succT, sub_predS, sub_predT, cap_dual)
        for j in lose_min:
            if fMin[j] > cap_dual:
                raise AssertionError("dual lifting diverged on a certified losing node")
    else:
        fMin, fMax = dual.eS, dual.eT
        lose_min = frozenset(j for j in range(n) if fMin[j] <= cap_dual)
        lose_max = frozenset(i for i in range(m) if fMax[i] <= cap_dual)
        win_min = frozenset(range(n)) - lose_min
        win_max = frozenset(range(m)) - lose_max
        # Primal lifting restricted to the winning region (closed under all
        # Min moves; Max moves into the losing region never help Max).
        sub_succS = [
            [(l, w) for (l, w) in p_succS[i] if l in win_min] if i in win_max else []
            for i in range(m)
        ]
        sub_succT = [p_succT[j] if j in win_min else [] for j in range(n)]
        sub_predS = [[j for j in p_predS[i] if j in win_min] for i in range(m)]
        sub_predT = [[i for i in p_predT[j] if i in win_max] for j in range(n)]
        eMax, eMin = _lift_bipartite(m, n, sub_succS, sub_succT, sub_predS, sub_predT, cap_primal)
        for i in win_max:
            if eMax[i] > cap_primal:
                raise AssertionError("primal lifting diverged on a certified winning node")

    top_p = cap_primal + 1
    sigma = []
    for i in range(m):
        if i in win_max:
            best_l, best_v = None, None
            for (l, w) in p_succS[i]:
                if l not in win_min:
                    continue
                e = eMin[l]
                v = top_p if e > cap_primal else max(0, e - w)
                if best_v is None or v < best_v:
                    best_v, best_l = v, l
            sigma.append(best_l)
        else:
            sigma.append(next(l for l in range(n) if b[i][l] is not None))
    top_d = cap_dual + 1
    tau = []
    for j in range(n):
        if j in lose_min:
            best_i, best_v = None, None
            for (i, w) in d_succS[j]:
                if i not in lose_max:
                    continue
                e = fMax[i]
                v = top_d if e > cap_dual else max(0, e - w)
                if best_v is None or v < best_v:
                    best_v, best_i = v, i
            tau.append(best_i)
        else:
            tau.append(next(i for i in range(m) if a[i][j] is not None))
    return win_min, win_max, tuple(sigma), tuple(tau)


def winning_oracle(game: MeanPayoffGame) -> OracleReport:
    """Partition Min nodes into {chi >= 0} and {chi < 0} with witness strategies.

    Payments must be integers (pre-scale rationals with scaled_copy).
    """
    a, b = _int_payments(game)
    win_min, win_max, sigma, tau = _oracle_core(game.m, game.n, a, b)
    return OracleReport(win_min, win_max, MaxStrategy(sigma), MinStrategy(tau))


def scaled_copy(game: MeanPayoffGame, mult: int, b_shift: Fraction = Fraction(0)) -> MeanPayoffGame:
    """Game with payments a' = mult*a and b' = mult*b + b_shift (exact)."""
    shift = Fraction(b_shift)
    A = TropMatrix(
        [
            [ExtendedNumber.finite(e.value * mult) if e.is_finite else NEG_INF for e in row]
            for row in game.A.entries
        ]
    )
    B = TropMatrix(
        [
            [
                ExtendedNumber.finite(e.value * mult + shift) if e.is_finite else NEG_INF
                for e in row
            ]
            for row in game.B.entries
        ]
    )
    return MeanPayoffGame(A, B)


def _payment_denominator_lcm(game: MeanPayoffGame) -> int:
    d = 1
    for M in (game.A, game.B):
        for row in M.entries:
            for e in row:
                if e.is_finite:
                    d = lcm(d, e.value.denominator)
    return d


def integer_oracle(game: MeanPayoffGame) -> OracleReport:
    """winning_oracle after pre-scaling rational payments to integers.

    Scaling all payments by a positive integer leaves value signs unchanged,
    so the report transfers verbatim.
    """
    d = _payment_denominator_lcm(game)
    if d == 1:
        return winning_oracle(game)
    return winning_oracle(scaled_copy(game, d))


def _payment_bound(game: MeanPayoffGame) -> Fraction:
    w = Fraction(0)
    for M in (game.A, game.B):
        for row in M.entries:
            for e in row:
                if e.is_finite and abs(e.value) > w:
                    w = abs(e.value)
    return w


def _wins_at_threshold(game, a, b, num: int, den: int, j: int):
    """Oracle for the game with B shifted by -num/den (integer-scaled payments).

    Returns (j wins, sigma choices, tau choices); the strategies are valid
    positional strategies of the unshifted game as well.
    """
    m, n = game.m, game.n
    a2 = [[None if x is None else den * x for x in row] for row in a]
    b2 = [[None if x is None else den * x - num for x in row] for row in b]
    win_min, _wm, sigma, tau = _oracle_core(m, n, a2, b2)
    return j in win_min, sigma, tau


def _max_cycle_mean_from(succ, j: int) -> Fraction:
    """Maximum mean over the cycles reachable from j (integer arc weights).

    succ maps each node to its (target, weight) arcs; every reachable node
    must have at least one arc.  Multi-source Karp on the reachable subgraph:
    with d_0 = 0 everywhere, the max cycle mean is
    max_v min_k (d_N(v) - d_k(v)) / (N - k) over v with d_N(v) > -inf.
    """
    reach = [j]
    seen = {j}
    for u in reach:
        for (v, _w) in succ[u]:
            if v not in seen:
                seen.add(v)
                reach.append(v)
    idx = {u: k for k, u in enumerate(reach)}
    N = len(reach)
    arcs = [(idx[u], idx[v], w) for u in reach for (v, w) in succ[u]]
    d = [0] * N
    hist = [d]
    for _ in range(N):
        nd = [None] * N
        for (u, v, w) in arcs:
            du = d[u]
            if du is None:
                continue
            c = du + w
            dv = nd[v]
            if dv is None or c > dv:
                nd[v] = c
        d = nd
        hist.append(d)
    dN = hist[N]
    best_n = best_d = None
    for v in range(N):
        dv = dN[v]
        if dv is None:
            continue
        mn_n = mn_d = None
        for k in range(N):
            dk = hist[k][v]
            if dk is None:
                continue
            num, den = dv - dk, N - k
            if mn_n is None or num * mn_d < mn_n * den:
                mn_n, mn_d = num, den
        if best_n is None or mn_n * best_d > best_n * mn_d:
            best_n, best_d = mn_n, mn_d
    if best_n is None:
        raise AssertionError("no cycle reachable: assumptions violated")
    return Fraction(best_n, best_d)


def _value_under_max(a, b, sigma, j: int, m: int, n: int) -> Fraction:
    """chi^sigma_j: what Max guarantees at j with sigma fixed (lower bound)."""
    succ = []
    for j2 in range(n):
        acc = {}
        for i in range(m):
            aij = a[i][j2]
            if aij is None:
                continue
            l = sigma[i]
            w = b[i][l] - aij
            if l not in acc or w < acc[l]:
                acc[l] = w
        succ.append([(l, -w) for (l, w) in acc.items()])
    return -_max_cycle_mean_from(succ, j)


def _value_under_min(a, b, tau, j: int, n: int) -> Fraction:
    """chi^tau_j: what Min concedes at j with tau fixed (upper bound)."""
    succ = []
    for j2 in range(n):
        i = tau[j2]
        aij = a[i][j2]
        succ.append([(l, b[i][l] - aij) for l in range(n) if b[i][l] is not None])
    return _max_cycle_mean_from(succ, j)


def _simplest_in_open(lo: Fraction, hi: Fraction) -> Fraction:
    """The smallest-denominator rational strictly between lo and hi."""
    fl = lo.numerator // lo.denominator
    if fl + 1 < hi:
        if lo < 0 < hi:
            return Fraction(0)
        if hi <= 0:
            return Fraction(-(-hi.numerator // hi.denominator) - 1)  # ceil(hi) - 1
        return Fraction(fl + 1)
    a, b = lo - fl, hi - fl  # 0 <= a < b <= 1 and no integer strictly inside
    if a == 0:
        inv = 1 / b
        return fl + Fraction(1, inv.numerator // inv.denominator + 1)
    return fl + 1 / _simplest_in_open(1 / b, 1 / a)


def game_value_and_strategy(game: MeanPayoffGame, j: int):
    """Exact chi_j with a Max strategy guaranteeing exactly chi_j from j.

    chi_j >= t iff j wins the game with every B entry shifted by -t.  Each
    probe's oracle strategies give certified one-player bounds chi^sigma_j <=
    chi_j <= chi^tau_j (rationals with denominator <= min(m,n), since a
    positional cycle visits distinct nodes of both players); the next probe is
    the simplest rational inside the bracket, so the search needs only a
    handful of oracle calls instead of a full dichotomy over [-2W, 2W].
    """
    m, n = game.m, game.n
    d = _payment_denominator_lcm(game)
    work = scaled_copy(game, d) if d != 1 else game
    a, b = _int_payments(work)
    qmax = max(1, min(m, n))
    _w, sigma, tau = _wins_at_threshold(work, a, b, 0, 1, j)
    lo = _value_under_max(a, b, sigma, j, m, n)
    hi = _value_under_min(a, b, tau, j, n)
    while lo < hi:
        t = _simplest_in_open(lo, hi)
        if t.denominator > qmax:
            t = hi  # no admissible value strictly inside: chi is lo or hi
        wins, sigma2, tau2 = _wins_at_threshold(work, a, b, t.numerator, t.denominator, j)
        if wins:
            sigma = sigma2
            if t == hi:
                lo = hi
                break
            lo = _value_under_max(a, b, sigma, j, m, n)
        else:
            hi = _value_under_min(a, b, tau2, j, n)
    return lo / d, MaxStrategy(sigma)


def game_value(game: MeanPayoffGame, j: int) -> Fraction:
    """Exact chi_j by threshold probes bracketed with strategy evaluations."""
    return game_value_and_strategy(game, j)[0]


def value_report(game: MeanPayoffGame) -> GameValueReport:
    """All Min-node values plus the oracle's strategies."""
    chi = tuple(game_value(game, j) for j in range(game.n))
    rep = integer_oracle(game)
    return GameValueReport(chi, rep.winning, rep.sigma, rep.tau)


# ---------------------------------------------------------------------------
# Reduction of A x <= B^sigma x with one coordinate pinned to 0.
# ---------------------------------------------------------------------------


def reduce_fixed_coordinate(A: TropMatrix, B: TropMatrix, sigma: MaxStrategy, l: int):
    """Split A x <= B^sigma x with x_l = 0 into a Kleene system.

    Rows i with sigma(i) != l become max-plus inequalities feeding coordinate
    sigma(i); rows with sigma(i) = l have a constant right-hand side and are
    kept aside for verification.  Returns (I, J, E, h, const_rows) where E is
    the |I| x |I| coefficient matrix over the indexed coordinates I, h the
    constant terms (from the x_l = 0 column), J the coordinates forced to
    -inf, and const_rows the discarded second-subsystem rows.
    """
    m, n = A.rows, A.cols
    targets = sorted({sigma.choices[i] for i in range(m) if sigma.choices[i] != l})
    tpos = {t: k for k, t in enumerate(targets)}
    J = [j for j in range(n) if j != l and j not in tpos]
    E = [[NEG_INF] * len(targets) for _ in targets]
    h = [NEG_INF] * len(targets)
    const_rows = []
    for i in range(m):
        t = sigma.choices[i]
        if t == l:
            const_rows.append(i)
            continue
        bv = B.entries[i][t].value
        k = tpos[t]
        for j in range(n):
            av = A.entries[i][j]
            if not av.is_finite:
                continue
            coef = ExtendedNumber.finite(av.value - bv)
            if j == l:
                if h[k] < coef:
                    h[k] = coef
            elif j in tpos:
                if E[k][tpos[j]] < coef:
                    E[k][tpos[j]] = coef
            # coordinates in J are pinned to -inf: their coefficients drop out
    return targets, J, TropMatrix(E), tuple(h), const_rows


def least_solution_fixed(A: TropMatrix, B: TropMatrix, sigma: MaxStrategy, l: int) -> tuple:
    """Least x with A x <= B^sigma x and x_l = 0 (via the Kleene star).

    Raises SecondSubsystemViolated when the discarded constant-side rows fail,
    and propagates PositiveCycleDiverges: both indicate the caller's sigma was
    not actually winning.
    """
    n = A.cols
    targets, J, E, h, const_rows = reduce_fixed_coordinate(A, B, sigma, l)
    z = kleene_least_solution(E, h)
    x = [NEG_INF] * n
    x[l] = ExtendedNumber.finite(0)
    for k, t in enumerate(targets):
        x[t] = z[k]
    x = tuple(x)
    lhs = trop_matvec(A, x)
    for i in const_rows:
        if not lhs[i] <= B.entries[i][sigma.choices[i]]:
            raise SecondSubsystemViolated(f"row {i} fails against the constant bound")
    return x


def feasibility_witness(game: MeanPayoffGame, i: int) -> Optional[tuple]:
    """A vector x with A x <= B x and x_i = 0, or None when chi_i < 0."""
    rep = integer_oracle(game)
    if i not in rep.winning:
        return None
    x = least_solution_fixed(game.A, game.B, rep.sigma, i)
    lhs = trop_matvec(game.A, x)
    rhs = trop_matvec(game.B, x)
    if not all(a <= b for a, b in zip(lhs, rhs)):
        raise InternalCertificateMismatch("witness fails A x <= B x")
    return x
