"""Pure-Python/numpy fallback implementations of the hot kernels.

The compiled extension (``planarloops._fastpath``) implements the same
entry points with identical semantics; ``planarloops._kernels`` selects
between them at import time.  Keep the two implementations in lock-step:
the test suite runs both on shared cases whenever the extension built.
"""

from __future__ import annotations

import numpy as np


def count_configurations(
    disk,
    rot_next,
    internal,
    color,
    parity,
    n_colors: int,
    connect_mode: int,
) -> dict[tuple[int, ...], int]:
    """Count planar matchings of decorated boundary points.

    Arguments are equal-length integer sequences describing all boundary
    points of a collection of disks:

    * ``disk``: owning disk id (0-based; disk 0 is the external one),
    * ``rot_next``: next point clockwise on the same disk,
    * ``internal``: internal-string partner, or -1 for strip points,
    * ``color``: strings only match endpoints of equal color,
    * ``parity``: 0/1 shading bit (strings join 0 to 1), or -1 for none,
    * ``connect_mode``: 0 none, 1 every disk in one component (for vacuum
      sums and, with the external disk present, for observables).

    A matching is admissible when parity/color constraints hold, the fat
    graph (disks as vertices, matched strings as edges, ``rot_next`` as
    rotation) has genus zero in every connected component, and the
    connectivity requirement is met.  The result maps the per-color vector
    of closed-loop counts (cycles of internal∘matching come in mirror
    pairs, so the cycle count is halved) to the number of admissible
    matchings.
    """
    n = len(disk)
    counts: dict[tuple[int, ...], int] = {}
    if n % 2:
        return counts
    disk = list(disk)
    rot_next = list(rot_next)
    internal = list(internal)
    color = list(color)
    parity = list(parity)
    n_disks = max(disk) + 1 if n else 1
    points_of = [[p for p in range(n) if disk[p] == d] for d in range(n_disks)]
    match = [-1] * n

    def admissible_key():
        if connect_mode:
            root = list(range(n_disks))

            def find(x):
                while root[x] != x:
                    root[x] = root[root[x]]
                    x = root[x]
                return x

            for p in range(n):
                a, b = find(disk[p]), find(disk[match[p]])
                if a != b:
                    root[a] = b
            if len({find(d) for d in range(n_disks)}) != 1:
                return None
        # genus 0 per component: V - E + F == 2 under face tracing
        comp = [-1] * n_disks
        n_comp = 0
        for d in range(n_disks):
            if comp[d] != -1:
                continue
            stack = [d]
            comp[d] = n_comp
            while stack:
                for p in points_of[stack.pop()]:
                    y = disk[match[p]]
                    if comp[y] == -1:
                        comp[y] = n_comp
                        stack.append(y)
            n_comp += 1
        verts = [0] * n_comp
        edges = [0] * n_comp
        faces = [0] * n_comp
        for d in range(n_disks):
            verts[comp[d]] += 1
            if not points_of[d]:
                faces[comp[d]] += 1  # an isolated disk bounds one face
        for p in range(n):
            if p < match[p]:
                edges[comp[disk[p]]] += 1
        seen = [False] * n
        for start in range(n):
            if seen[start]:
                continue
            faces[comp[disk[start]]] += 1
            p = start
            while not seen[p]:
                seen[p] = True
                p = rot_next[match[p]]
        for c in range(n_comp):
            if verts[c] - edges[c] + faces[c] != 2:
                return None
        cycles = [0] * n_colors
        seen = [False] * n
        for start in range(n):
            if seen[start] or internal[start] < 0:
                continue
            cycles[color[start]] += 1
            p = start
            while not seen[p]:
                seen[p] = True
                p = internal[match[p]]
        return tuple(c // 2 for c in cycles)

    def rec(cursor: int, remaining: int):
        if remaining == 0:
            key = admissible_key()
            if key is not None:
                counts[key] = counts.get(key, 0) + 1
            return
        p = cursor
        while match[p] != -1:
            p += 1
        for q in range(p + 1, n):
            if match[q] != -1 or color[q] != color[p]:
                continue
            if parity[p] != -1 and parity[q] == parity[p]:
                continue
            match[p] = q
            match[q] = p
            rec(p + 1, remaining - 2)
            match[p] = -1
            match[q] = -1

    rec(0, n)
    return counts


# -- Monte Carlo sweep kernel -------------------------------------------------
#
# One sweep proposes, for every stored block in turn, a Gaussian
# perturbation of one row (chosen by the pre-drawn index).  All randomness
# is drawn by the caller so that both backends consume an identical stream;
# chains from the two backends can still drift apart through floating-point
# summation order, which is why determinism is promised per backend only.
#
# Interaction patterns are compiled by planarloops.mc into flat arrays:
#   kind 0: coeff * Tr(H_b H_other)      (rank-two H update)
#   kind 1: coeff * Tr(H_b H_b)
#   kind 2: coeff * Tr(G_b G_other)      (row/column G update)
#   kind 3: coeff * Tr(H_b)              (linear, quadratic potentials)
# where for block b with matrix A: G = A A†, H = A† A, and the proposal
# replaces row r of A.


def _quad(x_mat: np.ndarray, vec: np.ndarray) -> float:
    """Tr(M X) for M = conj(vec)^T vec, i.e. sum conj(v_i) v_j X[j, i]."""
    return float(np.real(np.conj(vec) @ (x_mat.T @ vec)))


def mc_sweeps(state, rows: np.ndarray, noise: np.ndarray, unif: np.ndarray) -> np.ndarray:
    """Run ``rows.shape[0]`` sweeps; returns acceptances per block."""
    n_sweeps, n_blocks = rows.shape
    accepted = np.zeros(n_blocks, dtype=np.int64)
    for s in range(n_sweeps):
        for b in range(n_blocks):
            blk = state.blocks[b]
            r = int(rows[s, b])
            eta = noise[s, b, : blk.n_cols] * blk.step
            if _propose_row(state, blk, r, eta, float(unif[s, b])):
                accepted[b] += 1
    return accepted


def _propose_row(state, blk, r: int, eta: np.ndarray, u: float) -> bool:
    a = blk.a
    row = a[r].copy()
    new_row = row + eta
    d_log = -blk.gauss_coeff * (_norm2(new_row) - _norm2(row))
    for kind, other, coeff in blk.patterns:
        if kind == 0:
            x = state.blocks[other].h
            d = _quad(x, new_row) - _quad(x, row)
        elif kind == 1:
            h = blk.h
            s_on = complex(row @ np.conj(new_row))
            d = (
                2.0 * (_quad(h, new_row) - _quad(h, row))
                + _norm2(new_row) ** 2
                + _norm2(row) ** 2
                - 2.0 * abs(s_on) ** 2
            )
        elif kind == 2:
            x = state.blocks[other].g
            delta = new_row - row
            v = a @ np.conj(delta)
            d = 2.0 * float(np.real(v @ x[r])) + _norm2(delta) * float(np.real(x[r, r]))
        else:  # kind == 3
            d = _norm2(new_row) - _norm2(row)
        d_log += coeff * d
    if not np.isfinite(d_log):
        raise FloatingPointError("non-finite log-density difference in MC proposal")
    if u > (1.0 if d_log >= 0 else np.exp(d_log)):
        return False
    if not _norm_ok(blk, row, new_row, state.k_cut**2 * (1.0 + 1e-12)):
        return False
    _apply_row(blk, r, row, new_row)
    return True


def _norm2(vec: np.ndarray) -> float:
    return float(np.real(np.vdot(vec, vec)))


def _norm_ok(blk, row: np.ndarray, new_row: np.ndarray, bound: float) -> bool:
    """Decide lambda_max(H') <= bound for the rank-two updated Gram H'.

    The Gershgorin row-sum bound decides the common case in O(n^2) (the
    cutoff sits far above typical norms); otherwise a Cholesky test of
    bound*I - H' settles the exact predicate, so the accept/reject
    decision never rests on an unconverged eigenvalue estimate.
    """
    update = np.outer(np.conj(new_row), new_row) - np.outer(np.conj(row), row)
    h_new = blk.h + update
    # sqrt-free row bound: |re| + |im| >= |z| entrywise
    gersh = float((np.abs(h_new.real) + np.abs(h_new.imag)).sum(axis=1).max())
    if gersh <= bound:
        return True
    try:
        np.linalg.cholesky(bound * np.eye(h_new.shape[0]) - h_new)
        return True
    except np.linalg.LinAlgError:
        return False


def _apply_row(blk, r: int, old_row: np.ndarray, new_row: np.ndarray) -> None:
    blk.a[r] = new_row
    blk.h += np.outer(np.conj(new_row), new_row) - np.outer(np.conj(old_row), old_row)
    g_col = blk.a @ np.conj(new_row)
    blk.g[:, r] = g_col
    blk.g[r, :] = np.conj(g_col)
