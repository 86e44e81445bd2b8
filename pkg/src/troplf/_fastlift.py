"""JIT-compiled energy lifting for large bipartite games.

The pure-Python worklist performs one full arc scan per pop, so a single
value change at one node forces every neighbour to rescan all of its arcs.
This module runs an event-driven variant of the same least-fixpoint
computation inside a compiled kernel: maximizing nodes are updated in O(1)
per incoming change, and minimizing nodes keep a count of arcs attaining
their current minimum so a full rescan happens only when the support is
exhausted.  The least fixpoint is unique, so the resulting energies (and
hence winners and extracted strategies) are identical to the interpreted
implementation.  When numba is unavailable the importer falls back to the
interpreted code, so this module is an optional accelerator.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_JIT = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_JIT = False


def csr_from_dense(W, M):
    """CSR (indptr, targets, weights) of the finite entries of each row."""
    rows, cols = np.nonzero(M)
    indptr = np.zeros(M.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=M.shape[0]), out=indptr[1:])
    return indptr, cols.astype(np.int64), W[rows, cols].astype(np.int64)


def csr_from_lists(lists):
    """CSR of adjacency lists of (target, weight) pairs."""
    indptr = np.zeros(len(lists) + 1, dtype=np.int64)
    np.cumsum(np.fromiter((len(l) for l in lists), np.int64, len(lists)),
              out=indptr[1:])
    total = int(indptr[-1])
    tgt = np.fromiter((t for l in lists for (t, _w) in l), np.int64, total)
    w = np.fromiter((w for l in lists for (_t, w) in l), np.int64, total)
    return indptr, tgt, w


def csr_transpose(csr, ncols):
    """Transpose a CSR adjacency: by-target lists of (source, weight)."""
    indptr, tgt, w = csr
    nrows = indptr.shape[0] - 1
    rows = np.repeat(np.arange(nrows, dtype=np.int64), np.diff(indptr))
    order = np.argsort(tgt, kind="stable")
    tindptr = np.zeros(ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(tgt, minlength=ncols), out=tindptr[1:])
    return tindptr, rows[order], w[order]


if HAVE_JIT:

    @njit(cache=True)
    def _event_run(sptr, stgt, sw,      # arcs of minimizing nodes (S -> T)
                   fptr, ftgt, fw,      # same arcs grouped by T, feeding S
                   gptr, gtgt, gw,      # arcs of maximizing nodes grouped by
                                        # their S source (S -> T direction)
                   eS, eT, cnt, inq, queue, qstate, cap, quantum):
        """Drain up to ``quantum`` arc-scan units; True at the fixpoint.

        Minimizing nodes take the minimum of max(0, eT[t] - w) over their
        arcs, maximizing nodes the maximum of max(0, eS[s] - w) over theirs,
        with values above ``cap`` standing for top.  Only minimizing nodes
        are queued (for rescans); maximizing nodes are updated eagerly when
        a source value rises.  ``cnt[v]`` counts arcs of v attaining eS[v];
        a rescan is scheduled only when it reaches zero.  ``qstate`` is
        (head, tail, count).
        """
        top = cap + 1
        ring = queue.shape[0]
        head = qstate[0]
        tail = qstate[1]
        count = qstate[2]
        units = np.int64(0)
        while count > 0 and units < quantum:
            v = queue[head]
            head += 1
            if head == ring:
                head = 0
            count -= 1
            inq[v] = 0
            # Full rescan of minimizing node v.
            units += sptr[v + 1] - sptr[v] + 1
            best = np.int64(-1)
            c = np.int64(0)
            for k in range(sptr[v], sptr[v + 1]):
                e = eT[stgt[k]]
                if e > cap:
                    nv = top
                else:
                    nv = e - sw[k]
                    if nv < 0:
                        nv = np.int64(0)
                if best < 0 or nv < best:
                    best = nv
                    c = np.int64(1)
                elif nv == best:
                    c += 1
            if best < 0 or best > top:
                best = top
            cnt[v] = c
            if best <= eS[v]:
                continue
            eS[v] = best
            # Eagerly push the increase into the maximizing nodes fed by v.
            for k in range(gptr[v], gptr[v + 1]):
                t = gtgt[k]
                if best > cap:
                    nv = top
                else:
                    nv = best - gw[k]
                    if nv < 0:
                        nv = np.int64(0)
                    elif nv > top:
                        nv = top
                if nv <= eT[t]:
                    continue
                old = eT[t]
                eT[t] = nv
                units += fptr[t + 1] - fptr[t]
                # Adjust support counts of minimizing nodes watching t.
                for k2 in range(fptr[t], fptr[t + 1]):
                    v2 = ftgt[k2]
                    ev = eS[v2]
                    oc = old - fw[k2]
                    if oc < 0:
                        oc = np.int64(0)
                    if oc > ev:
                        continue  # arc was not in the support of v2
                    if nv > cap:
                        nc = top
                    else:
                        nc = nv - fw[k2]
                        if nc < 0:
                            nc = np.int64(0)
                    if nc > ev:
                        cnt[v2] -= 1
                        if cnt[v2] <= 0 and inq[v2] == 0:
                            inq[v2] = 1
                            queue[tail] = v2
                            tail += 1
                            if tail == ring:
                                tail = 0
                            count += 1
        qstate[0] = head
        qstate[1] = tail
        qstate[2] = count
        return count == 0


class KernelLift:
    """Compiled counterpart of the interpreted lifting state.

    ``succS`` holds the arcs of the minimizing side, ``succT`` those of the
    maximizing side, both as CSR (indptr, targets, weights) triples; ``run``
    has the same contract as the interpreted version and the energies are
    exposed as ``eS``/``eT``.
    """

    __slots__ = ("cap", "top", "eS", "eT", "_args")

    def __init__(self, succS, succT, nS, nT, cap):
        sptr, stgt, sw = succS
        fptr, ftgt, fw = csr_transpose(succS, nT)
        gptr, gtgt, gw = csr_transpose(succT, nS)
        self.cap = cap
        self.top = cap + 1
        self.eS = np.zeros(nS, dtype=np.int64)
        self.eT = np.zeros(nT, dtype=np.int64)
        # Seed the maximizing side with its value at eS = 0; afterwards it
        # only moves through eager notifications.
        if gw.shape[0]:
            np.maximum.at(self.eT, gtgt, np.clip(-gw, 0, self.top))
        cnt = np.zeros(nS, dtype=np.int64)
        inq = np.ones(nS, dtype=np.uint8)
        queue = np.empty(max(nS, 1), dtype=np.int64)
        queue[:nS] = np.arange(nS)
        qstate = np.array([0, 0, nS], dtype=np.int64)
        self._args = (sptr, stgt, sw, fptr, ftgt, fw, gptr, gtgt, gw,
                      self.eS, self.eT, cnt, inq, queue, qstate)

    def run(self, quantum: int) -> bool:
        return bool(_event_run(*self._args, np.int64(self.cap),
                               np.int64(quantum)))
