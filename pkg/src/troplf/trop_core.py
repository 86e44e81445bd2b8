"""Exact tropical (max-plus / min-plus) scalars, matrices and digraph utilities.

Everything here is pure and immutable: extended numbers wrap exact rationals
with infinity flags, matrices are dense grids of extended numbers carrying a
semiring tag, and the digraph helpers (Tarjan decomposition, Karp cycle means,
cycle-time vectors, Kleene-star least solutions) are the building blocks for
the game and solver layers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Rational = Union[int, Fraction]

MAX_PLUS = "max_plus"
MIN_PLUS = "min_plus"


class PositiveCycleDiverges(Exception):
    """A strictly positive cycle reaches the support of h: E*h has a +inf coordinate."""


class ExtendedNumber:
    """An element of R united with {-inf, +inf}, stored as an exact rational.

    ``kind`` is -1 for -inf, 0 for finite, +1 for +inf.  Addition comes in two
    flavours because the two semirings disagree on (-inf) + (+inf): ``add_max``
    resolves it to -inf (max-plus convention), ``add_min`` to +inf.
    """

    __slots__ = ("kind", "value")

    def __init__(self, kind: int, value: Fraction):
        self.kind = kind
        self.value = value

    @staticmethod
    def finite(x: Rational) -> "ExtendedNumber":
        return ExtendedNumber(0, Fraction(x))

    @property
    def is_finite(self) -> bool:
        return self.kind == 0

    def add_max(self, other: "ExtendedNumber") -> "ExtendedNumber":
        if self.kind == 0 and other.kind == 0:
            return ExtendedNumber(0, self.value + other.value)
        if self.kind == -1 or other.kind == -1:
            return NEG_INF
        return POS_INF

    def add_min(self, other: "ExtendedNumber") -> "ExtendedNumber":
        if self.kind == 0 and other.kind == 0:
            return ExtendedNumber(0, self.value + other.value)
        if self.kind == 1 or other.kind == 1:
            return POS_INF
        return NEG_INF

    def __neg__(self) -> "ExtendedNumber":
        if self.kind == 0:
            return ExtendedNumber(0, -self.value)
        return NEG_INF if self.kind == 1 else POS_INF

    def _key(self):
        return (self.kind, self.value if self.kind == 0 else Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExtendedNumber):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __lt__(self, other: "ExtendedNumber") -> bool:
        if self.kind != other.kind:
            return self.kind < other.kind
        return self.kind == 0 and self.value < other.value

    def __le__(self, other: "ExtendedNumber") -> bool:
        return self == other or self < other

    def __gt__(self, other: "ExtendedNumber") -> bool:
        return other < self

    def __ge__(self, other: "ExtendedNumber") -> bool:
        return other <= self

    def __repr__(self) -> str:
        if self.kind == -1:
            return "-inf"
        if self.kind == 1:
            return "+inf"
        return str(self.value)


NEG_INF = ExtendedNumber(-1, Fraction(0))
POS_INF = ExtendedNumber(1, Fraction(0))


def ext(x) -> ExtendedNumber:
    """Coerce ints/Fractions (or pass through ExtendedNumber) to ExtendedNumber."""
    if isinstance(x, ExtendedNumber):
        return x
    return ExtendedNumber.finite(x)


class TropMatrix:
    """Dense rectangular matrix of ExtendedNumber with a semiring tag.

    A max_plus matrix never stores +inf entries and a min_plus matrix never
    stores -inf entries; those only arise as results of residuation, which
    switches the tag.
    """

    __slots__ = ("rows", "cols", "entries", "semiring")

    def __init__(self, entries: Sequence[Sequence], semiring: str = MAX_PLUS):
        if semiring not in (MAX_PLUS, MIN_PLUS):
            raise ValueError(f"unknown semiring tag {semiring!r}")
        grid = tuple(tuple(ext(e) for e in row) for row in entries)
        rows = len(grid)
        cols = len(grid[0]) if rows else 0
        for row in grid:
            if len(row) != cols:
                raise ValueError("ragged entry grid")
        banned = POS_INF if semiring == MAX_PLUS else NEG_INF
        for row in grid:
            for e in row:
                if e == banned:
                    raise ValueError(f"{semiring} matrix cannot store {banned!r}")
        self.rows = rows
        self.cols = cols
        self.entries = grid
        self.semiring = semiring

    def __getitem__(self, ij) -> ExtendedNumber:
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> tuple:
        return self.entries[i]

    def column(self, j: int) -> tuple:
        return tuple(row[j] for row in self.entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TropMatrix):
            return NotImplemented
        return (self.semiring == other.semiring and self.entries == other.entries)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(repr(e) for e in row) for row in self.entries)
        return f"TropMatrix[{self.semiring} {self.rows}x{self.cols}: {body}]"


def trop_matvec(E: TropMatrix, x: Sequence[ExtendedNumber]) -> tuple:
    """Matrix-vector product in E's semiring; empty max is -inf, empty min is +inf."""
    if E.cols != len(x):
        raise ValueError(f"dimension mismatch: {E.cols} columns vs vector of {len(x)}")
    x = tuple(ext(e) for e in x)
    out = []
    if E.semiring == MAX_PLUS:
        for row in E.entries:
            acc = NEG_INF
            for e, xj in zip(row, x):
                term = e.add_max(xj)
                if acc < term:
                    acc = term
            out.append(acc)
    else:
        for row in E.entries:
            acc = POS_INF
            for e, xj in zip(row, x):
                term = e.add_min(xj)
                if term < acc:
                    acc = term
            out.append(acc)
    return tuple(out)


def residual_apply(E: TropMatrix, y: Sequence[ExtendedNumber]) -> tuple:
    """Residuation (Cuninghame-Green inverse): component j is min_i(-e_ij + y_i).

    E must be max-plus; the result behaves as the min-plus product of the
    negated transpose, so the (-inf)+(+inf) = +inf convention applies.
    """
    if E.semiring != MAX_PLUS:
        raise ValueError("residual_apply expects a max-plus matrix")
    if E.rows != len(y):
        raise ValueError(f"dimension mismatch: {E.rows} rows vs vector of {len(y)}")
    y = tuple(ext(e) for e in y)
    out = []
    for j in range(E.cols):
        acc = POS_INF
        for i in range(E.rows):
            term = (-E.entries[i][j]).add_min(y[i])
            if term < acc:
                acc = term
        out.append(acc)
    return tuple(out)


@dataclass(frozen=True)
class WeightedDigraph:
    """Finite digraph with exact rational arc weights and no parallel arcs."""

    n: int
    arcs: tuple  # of (src, dst, Fraction)

    def __post_init__(self):
        seen = set()
        for (s, t, w) in self.arcs:
            if not (0 <= s < self.n and 0 <= t < self.n):
                raise ValueError(f"arc ({s},{t}) out of range")
            if (s, t) in seen:
                raise ValueError(f"duplicate arc ({s},{t})")
            seen.add((s, t))

    @staticmethod
    def from_arcs(n: int, arcs: Iterable) -> "WeightedDigraph":
        return WeightedDigraph(n, tuple((s, t, Fraction(w)) for (s, t, w) in arcs))


@dataclass(frozen=True)
class SccDecomposition:
    """Tarjan decomposition plus (optionally) the forward-access set of a node.

    ``components`` are in reverse topological order (successors first);
    ``comp_of[v]`` indexes into ``components``; ``access`` is the set of nodes
    forward-reachable from the query node, or None when no query was given.
    """

    components: tuple
    comp_of: tuple
    access: Optional[frozenset]


def scc_and_access(D: WeightedDigraph, source: Optional[int] = None) -> SccDecomposition:
    """Tarjan's strongly connected components, iteratively, plus reachability."""
    n = D.n
    succ = [[] for _ in range(n)]
    for (s, t, _w) in D.arcs:
        succ[s].append(t)

    index = [None] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comps = []
    comp_of = [None] * n
    counter = 0
    for root in range(n):
        if index[root] is not None:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            recurse = False
            for k in range(pi, len(succ[v])):
                w = succ[v][k]
                if index[w] is None:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w] and low[w] < low[v]:
                    low[v] = low[w]
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp_of[w] = len(comps)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(tuple(comp))
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]

    access = None
    if source is not None:
        seen = {source}
        frontier = [source]
        while frontier:
            v = frontier.pop()
            for w in succ[v]:
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        access = frozenset(seen)
    return SccDecomposition(tuple(comps), tuple(comp_of), access)


def _karp_max_mean(nodes: Sequence[int], arcs_in: dict) -> Optional[Fraction]:
    """Karp's maximal cycle mean on one strongly connected component.

    ``arcs_in[v]`` lists (u, w) for arcs u -> v inside the component.  Returns
    None when the component has no cycle (single node without a self-loop).
    """
    k = len(nodes)
    if k == 1:
        v = nodes[0]
        self_loops = [w for (u, w) in arcs_in.get(v, ()) if u == v]
        return max(self_loops) if self_loops else None
    # The dynamic program runs on plain integers: scaling every weight by the
    # common denominator avoids per-step Fraction normalization.
    denom = 1
    for arcs in arcs_in.values():
        for (_u, w) in arcs:
            denom = denom * w.denominator // math.gcd(denom, w.denominator)
    scaled_in = {
        v: [(u, int(w * denom)) for (u, w) in arcs]
        for v, arcs in arcs_in.items()
    }
    pos = {v: i for i, v in enumerate(nodes)}
    NEG = None  # sentinel for -inf path weight
    # table[t][i] = max weight of a t-arc path from source to nodes[i]
    table = [[NEG] * k for _ in range(k + 1)]
    table[0][0] = 0
    for t in range(1, k + 1):
        prev = table[t - 1]
        cur = table[t]
        for v in nodes:
            best = NEG
            for (u, w) in scaled_in.get(v, ()):
                pu = prev[pos[u]]
                if pu is None:
                    continue
                cand = pu + w
                if best is None or cand > best:
                    best = cand
            cur[pos[v]] = best
    best_mean = None
    last = table[k]
    for i in range(k):
        if last[i] is None:
            continue
        worst = None
        for t in range(k):
            pt = table[t][i]
            if pt is None:
                continue
            mean = Fraction(last[i] - pt, (k - t) * denom)
            if worst is None or mean < worst:
                worst = mean
        if worst is not None and (best_mean is None or worst > best_mean):
            best_mean = worst
    return best_mean


def cycle_means(D: WeightedDigraph, mode: str = "max"):
    """Per-SCC maximal (or minimal) cycle mean, exact, via Karp's algorithm.

    Returns (decomposition, means) where means[c] aligns with
    decomposition.components[c] and is None for acyclic components.
    """
    if mode not in ("max", "min"):
        raise ValueError("mode must be 'max' or 'min'")
    flip = -1 if mode == "min" else 1
    decomp = scc_and_access(D)
    arcs_in_by_comp = [dict() for _ in decomp.components]
    for (s, t, w) in D.arcs:
        c = decomp.comp_of[s]
        if c == decomp.comp_of[t]:
            arcs_in_by_comp[c].setdefault(t, []).append((s, flip * w))
    means = []
    for c, comp in enumerate(decomp.components):
        mean = _karp_max_mean(comp, arcs_in_by_comp[c])
        means.append(None if mean is None else flip * mean)
    return decomp, tuple(means)


def digraph_of_matrix(E: TropMatrix) -> WeightedDigraph:
    """Arcs i -> j for every finite entry e_ij, weighted by it."""
    arcs = []
    for i, row in enumerate(E.entries):
        for j, e in enumerate(row):
            if e.is_finite:
                arcs.append((i, j, e.value))
    return WeightedDigraph(E.rows, tuple(arcs))


def cycle_time_vector(E: TropMatrix, mode: str = "max") -> tuple:
    """chi_i = max (resp. min) of per-SCC cycle means over SCCs accessible from i.

    Nodes accessing no cycle yield -inf in max mode, +inf in min mode.
    """
    if E.rows != E.cols:
        raise ValueError("cycle_time_vector requires a square matrix")
    D = digraph_of_matrix(E)
    decomp, means = cycle_means(D, mode)
    ncomp = len(decomp.components)
    # Condensation successors: components are in reverse topological order, so
    # arcs go from higher comp index to lower or within a component.
    comp_succ = [set() for _ in range(ncomp)]
    for (s, t, _w) in D.arcs:
        cs, ct = decomp.comp_of[s], decomp.comp_of[t]
        if cs != ct:
            comp_succ[cs].add(ct)
    best = [means[c] for c in range(ncomp)]  # best mean over reachable comps
    pick = max if mode == "max" else min
    for c in range(ncomp):  # successors have smaller index: already final
        for d in comp_succ[c]:
            if best[d] is None:
                continue
            best[c] = best[d] if best[c] is None else pick(best[c], best[d])
    empty = NEG_INF if mode == "max" else POS_INF
    return tuple(
        empty if best[decomp.comp_of[i]] is None else ExtendedNumber.finite(best[decomp.comp_of[i]])
        for i in range(E.rows)
    )


def kleene_apply_raw(E: TropMatrix, h: Sequence[ExtendedNumber]) -> tuple:
    """E*h over the full extended line: components may come out +inf.

    E*h is the least z with Ez v h <= z.  A component is +inf exactly when the
    node can reach a strictly-positive-weight cycle that itself reaches the
    support of h.
    """
    if E.semiring != MAX_PLUS:
        raise ValueError("kleene star is defined on max-plus matrices here")
    if E.rows != E.cols:
        raise ValueError("kleene star requires a square matrix")
    n = E.rows
    h = tuple(ext(e) for e in h)
    if len(h) != n:
        raise ValueError("dimension mismatch")
    D = digraph_of_matrix(E)
    succ = [[] for _ in range(n)]
    for (s, t, w) in D.arcs:
        succ[s].append(t)
    # Nodes that can reach supp(h) by following arcs forward.
    reach_h = set(i for i in range(n) if h[i].kind != -1)
    changed = True
    while changed:
        changed = False
        for v in range(n):
            if v in reach_h:
                continue
            if any(w in reach_h for w in succ[v]):
                reach_h.add(v)
                changed = True
    decomp, means = cycle_means(D, "max")
    bad_comps = {
        c
        for c, comp in enumerate(decomp.components)
        if means[c] is not None and means[c] > 0 and any(v in reach_h for v in comp)
    }
    divergent = set(v for v in range(n) if decomp.comp_of[v] in bad_comps)
    changed = True
    while changed:
        changed = False
        for v in range(n):
            if v in divergent:
                continue
            if any(w in divergent for w in succ[v]):
                divergent.add(v)
                changed = True
    # Iterate on plain integers scaled by the common denominator; None stands
    # for -inf.  This keeps the O(n * arcs) inner loop off Fraction arithmetic.
    denom = 1
    for (_s, _t, w) in D.arcs:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    for e in h:
        if e.is_finite:
            d = e.value.denominator
            denom = denom * d // math.gcd(denom, d)
    weights = [[None] * n for _ in range(n)]
    for (s, t, w) in D.arcs:
        weights[s][t] = int(w * denom)
    h_int = [int(e.value * denom) if e.is_finite else None for e in h]
    if any(e.kind == 1 for e in h):
        raise ValueError("+inf is not a valid component of h")
    z = list(h_int)
    for _ in range(n):
        nz = list(z)
        for i in range(n):
            if i in divergent:
                continue
            acc = h_int[i]
            row = weights[i]
            for j in succ[i]:
                if j in divergent:
                    continue
                zj = z[j]
                if zj is None:
                    continue
                term = row[j] + zj
                if acc is None or acc < term:
                    acc = term
            nz[i] = acc
        if nz == z:
            break
        z = nz
    out = [
        NEG_INF if v is None else ExtendedNumber.finite(Fraction(v, denom))
        for v in z
    ]
    for i in divergent:
        out[i] = POS_INF
    return tuple(out)


def kleene_least_solution(E: TropMatrix, h: Sequence[ExtendedNumber]) -> tuple:
    """E*h, raising PositiveCycleDiverges instead of producing +inf components."""
    z = kleene_apply_raw(E, h)
    if any(e.kind == 1 for e in z):
        raise PositiveCycleDiverges(
            "a strictly positive cycle reaches the support of h"
        )
    return z
