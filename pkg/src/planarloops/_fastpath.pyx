# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the hot kernels in ``planarloops._slowpath``.

Semantics must match the fallback exactly (same inputs, same random
stream, same accept/reject decisions up to floating-point summation
order); the shared tests in ``tests/test_kernels.py`` enforce this.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


# -- configuration matching ---------------------------------------------------


def count_configurations(disk, rot_next, internal, color, parity,
                         int n_colors, int connect_mode):
    cdef cnp.int64_t[::1] disk_v = np.asarray(disk, dtype=np.int64)
    cdef cnp.int64_t[::1] rot_v = np.asarray(rot_next, dtype=np.int64)
    cdef cnp.int64_t[::1] int_v = np.asarray(internal, dtype=np.int64)
    cdef cnp.int64_t[::1] col_v = np.asarray(color, dtype=np.int64)
    cdef cnp.int64_t[::1] par_v = np.asarray(parity, dtype=np.int64)
    cdef int n = disk_v.shape[0]
    counts = {}
    if n % 2:
        return counts
    if n == 0:
        counts[(0,) * n_colors] = 1
        return counts
    cdef int n_disks = 0
    cdef int i
    for i in range(n):
        if disk_v[i] + 1 > n_disks:
            n_disks = disk_v[i] + 1

    cdef cnp.int64_t[::1] match = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] stack_p = np.empty(n // 2, dtype=np.int64)
    cdef cnp.int64_t[::1] stack_q = np.empty(n // 2, dtype=np.int64)
    cdef cnp.int64_t[::1] root = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] comp = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] comp_stack = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] verts = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] edges = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] faces = np.empty(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] has_points = np.zeros(n_disks, dtype=np.int64)
    cdef cnp.int64_t[::1] seen = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cycles = np.empty(n_colors if n_colors else 1, dtype=np.int64)
    for i in range(n):
        has_points[disk_v[i]] = 1

    cdef int depth = 0, p, q, c
    cdef long key_enc

    p = 0
    q = 0
    while True:
        p = 0
        while p < n and match[p] != -1:
            p += 1
        if p == n:
            key_enc = _admissible(disk_v, rot_v, int_v, col_v, match,
                                  n, n_disks, n_colors, connect_mode,
                                  root, comp, comp_stack, verts, edges, faces,
                                  has_points, seen, cycles)
            if key_enc >= 0:
                key = tuple(cycles[c] // 2 for c in range(n_colors))
                counts[key] = counts.get(key, 0) + 1
            if depth == 0:
                break
            depth -= 1
            p = stack_p[depth]
            q = stack_q[depth]
            match[p] = -1
            match[q] = -1
            q += 1
        else:
            q = p + 1
        while True:
            while q < n and not (match[q] == -1 and col_v[q] == col_v[p]
                                 and (par_v[p] == -1 or par_v[q] != par_v[p])):
                q += 1
            if q < n:
                match[p] = q
                match[q] = p
                stack_p[depth] = p
                stack_q[depth] = q
                depth += 1
                break
            if depth == 0:
                return counts
            depth -= 1
            p = stack_p[depth]
            q = stack_q[depth]
            match[p] = -1
            match[q] = -1
            q += 1
    return counts


cdef long _admissible(cnp.int64_t[::1] disk, cnp.int64_t[::1] rot,
                      cnp.int64_t[::1] internal, cnp.int64_t[::1] color,
                      cnp.int64_t[::1] match,
                      int n, int n_disks, int n_colors, int connect_mode,
                      cnp.int64_t[::1] root, cnp.int64_t[::1] comp,
                      cnp.int64_t[::1] comp_stack, cnp.int64_t[::1] verts,
                      cnp.int64_t[::1] edges, cnp.int64_t[::1] faces,
                      cnp.int64_t[::1] has_points, cnp.int64_t[::1] seen,
                      cnp.int64_t[::1] cycles) noexcept:
    cdef int i, a, b, d, c, n_comp, top, start, p, n_classes
    if connect_mode:
        for d in range(n_disks):
            root[d] = d
        for i in range(n):
            a = disk[i]
            while root[a] != a:
                root[a] = root[root[a]]
                a = root[a]
            b = disk[match[i]]
            while root[b] != b:
                root[b] = root[root[b]]
                b = root[b]
            if a != b:
                root[a] = b
        n_classes = 0
        for d in range(n_disks):
            if root[d] == d:
                n_classes += 1
        if n_classes != 1:
            return -1
    for d in range(n_disks):
        comp[d] = -1
    n_comp = 0
    for d in range(n_disks):
        if comp[d] != -1:
            continue
        comp[d] = n_comp
        top = 0
        comp_stack[top] = d
        top += 1
        while top:
            top -= 1
            a = comp_stack[top]
            for i in range(n):
                if disk[i] == a:
                    b = disk[match[i]]
                    if comp[b] == -1:
                        comp[b] = n_comp
                        comp_stack[top] = b
                        top += 1
        n_comp += 1
    for c in range(n_comp):
        verts[c] = 0
        edges[c] = 0
        faces[c] = 0
    for d in range(n_disks):
        verts[comp[d]] += 1
        if not has_points[d]:
            faces[comp[d]] += 1
    for i in range(n):
        if i < match[i]:
            edges[comp[disk[i]]] += 1
    for i in range(n):
        seen[i] = 0
    for start in range(n):
        if seen[start]:
            continue
        faces[comp[disk[start]]] += 1
        p = start
        while not seen[p]:
            seen[p] = 1
            p = rot[match[p]]
    for c in range(n_comp):
        if verts[c] - edges[c] + faces[c] != 2:
            return -1
    for c in range(n_colors):
        cycles[c] = 0
    for i in range(n):
        seen[i] = 0
    for start in range(n):
        if seen[start] or internal[start] < 0:
            continue
        cycles[color[start]] += 1
        p = start
        while not seen[p]:
            seen[p] = 1
            p = internal[match[p]]
    return 0


# -- Monte Carlo sweeps --------------------------------------------------------

DEF KIND_HH = 0
DEF KIND_HSQ = 1
DEF KIND_GG = 2
DEF KIND_LIN = 3


def mc_sweeps(state, cnp.int64_t[:, ::1] rows, cnp.complex128_t[:, :, ::1] noise,
              cnp.float64_t[:, ::1] unif):
    cdef int n_sweeps = rows.shape[0]
    cdef int n_blocks = rows.shape[1]
    blocks = state.blocks
    cdef double k_cut2 = state.k_cut * state.k_cut * (1.0 + 1e-12)

    cdef cnp.float64_t[::1] gauss = np.array([blk.gauss_coeff for blk in blocks])
    cdef cnp.float64_t[::1] steps = np.array([blk.step for blk in blocks])
    cdef cnp.int64_t[::1] nrows = np.array([blk.a.shape[0] for blk in blocks], dtype=np.int64)
    cdef cnp.int64_t[::1] ncols = np.array([blk.a.shape[1] for blk in blocks], dtype=np.int64)
    cdef int max_cols = 0, max_rows = 0
    cdef int b
    for b in range(n_blocks):
        if ncols[b] > max_cols:
            max_cols = ncols[b]
        if nrows[b] > max_rows:
            max_rows = nrows[b]

    # padded copies of the per-block state; written back on exit
    a3_np = np.zeros((n_blocks, max_rows, max_cols), dtype=np.complex128)
    g3_np = np.zeros((n_blocks, max_rows, max_rows), dtype=np.complex128)
    h3_np = np.zeros((n_blocks, max_cols, max_cols), dtype=np.complex128)
    for b in range(n_blocks):
        a3_np[b, : nrows[b], : ncols[b]] = blocks[b].a
        g3_np[b, : nrows[b], : nrows[b]] = blocks[b].g
        h3_np[b, : ncols[b], : ncols[b]] = blocks[b].h
    cdef cnp.complex128_t[:, :, ::1] a3 = a3_np
    cdef cnp.complex128_t[:, :, ::1] g3 = g3_np
    cdef cnp.complex128_t[:, :, ::1] h3 = h3_np
    cdef cnp.complex128_t[:, ::1] chol = np.empty((max_cols, max_cols), dtype=np.complex128)

    pk, po, pc, ps = [], [], [], [0]
    for blk in blocks:
        for entry in blk.patterns:
            pk.append(entry[0])
            po.append(entry[1])
            pc.append(entry[2])
        ps.append(len(pk))
    cdef cnp.int64_t[::1] pat_kind = np.array(pk or [0], dtype=np.int64)
    cdef cnp.int64_t[::1] pat_other = np.array(po or [0], dtype=np.int64)
    cdef cnp.float64_t[::1] pat_coeff = np.array(pc or [0.0])
    cdef cnp.int64_t[::1] pat_start = np.array(ps, dtype=np.int64)

    cdef cnp.complex128_t[::1] new_row = np.empty(max_cols, dtype=np.complex128)
    cdef cnp.complex128_t[::1] old_row = np.empty(max_cols, dtype=np.complex128)
    cdef cnp.int64_t[::1] accepted = np.zeros(n_blocks, dtype=np.int64)

    cdef int s, r, m, mt, j, i, kind, other, pi, bad
    cdef double d_log, coeff, d, s_nn, s_oo
    cdef double complex acc, s_on, t_acc, dj

    bad = 0
    for s in range(n_sweeps):
        for b in range(n_blocks):
            r = rows[s, b]
            mt = ncols[b]
            m = nrows[b]
            s_nn = 0.0
            s_oo = 0.0
            for j in range(mt):
                old_row[j] = a3[b, r, j]
                new_row[j] = old_row[j] + noise[s, b, j] * steps[b]
                s_nn += new_row[j].real * new_row[j].real + new_row[j].imag * new_row[j].imag
                s_oo += old_row[j].real * old_row[j].real + old_row[j].imag * old_row[j].imag
            d_log = -gauss[b] * (s_nn - s_oo)
            for pi in range(pat_start[b], pat_start[b + 1]):
                kind = pat_kind[pi]
                other = pat_other[pi]
                coeff = pat_coeff[pi]
                if kind == KIND_HH:
                    d = (_quad(h3, other, new_row, mt)
                         - _quad(h3, other, old_row, mt))
                elif kind == KIND_HSQ:
                    s_on = 0.0
                    for j in range(mt):
                        s_on += old_row[j] * new_row[j].conjugate()
                    d = (2.0 * (_quad(h3, b, new_row, mt) - _quad(h3, b, old_row, mt))
                         + s_nn * s_nn + s_oo * s_oo
                         - 2.0 * (s_on.real * s_on.real + s_on.imag * s_on.imag))
                elif kind == KIND_GG:
                    t_acc = 0.0
                    for i in range(m):
                        acc = 0.0
                        for j in range(mt):
                            acc += a3[b, i, j] * (new_row[j] - old_row[j]).conjugate()
                        t_acc += acc * g3[other, r, i]
                    s_on = 0.0
                    for j in range(mt):
                        dj = new_row[j] - old_row[j]
                        s_on += dj * dj.conjugate()
                    d = 2.0 * t_acc.real + s_on.real * g3[other, r, r].real
                else:
                    d = s_nn - s_oo
                d_log += coeff * d
            if d_log != d_log:
                bad = 1
                break
            if d_log < 0.0 and unif[s, b] > exp(d_log):
                continue
            if not _norm_ok(h3, b, old_row, new_row, chol, mt, k_cut2):
                continue
            for j in range(mt):
                a3[b, r, j] = new_row[j]
            for i in range(mt):
                for j in range(mt):
                    h3[b, i, j] += (new_row[i].conjugate() * new_row[j]
                                    - old_row[i].conjugate() * old_row[j])
            for i in range(m):
                acc = 0.0
                for j in range(mt):
                    acc += a3[b, i, j] * new_row[j].conjugate()
                g3[b, i, r] = acc
                g3[b, r, i] = acc.conjugate()
            accepted[b] += 1
        if bad:
            break

    for b in range(n_blocks):
        blocks[b].a[:, :] = a3_np[b, : nrows[b], : ncols[b]]
        blocks[b].g[:, :] = g3_np[b, : nrows[b], : nrows[b]]
        blocks[b].h[:, :] = h3_np[b, : ncols[b], : ncols[b]]
    if bad:
        raise FloatingPointError("non-finite log-density difference in MC proposal")
    return np.asarray(accepted)


cdef double _quad(cnp.complex128_t[:, :, ::1] x3, int b,
                  cnp.complex128_t[::1] vec, int n) noexcept:
    # sum over i, j of conj(v_i) v_j X[j, i], row-contiguous inner loop
    cdef int i, j
    cdef double complex acc, inner
    acc = 0.0
    for j in range(n):
        inner = 0.0
        for i in range(n):
            inner += x3[b, j, i] * vec[i].conjugate()
        acc += vec[j] * inner
    return acc.real


cdef int _norm_ok(cnp.complex128_t[:, :, ::1] h3, int b,
                  cnp.complex128_t[::1] old_row, cnp.complex128_t[::1] new_row,
                  cnp.complex128_t[:, ::1] chol, int n, double bound) noexcept:
    # Decide lambda_max(H') <= bound where H' is the rank-two update of the
    # cached Gram: Gershgorin row sums settle the common case, an in-place
    # Cholesky of bound*I - H' settles the rest exactly.
    cdef int i, j, k
    cdef double worst = 0.0, rowsum, pivot
    cdef double complex hij, acc
    for i in range(n):
        rowsum = 0.0
        for j in range(n):
            hij = (h3[b, i, j] + new_row[i].conjugate() * new_row[j]
                   - old_row[i].conjugate() * old_row[j])
            # sqrt-free row bound: |re| + |im| >= |z|
            rowsum += (hij.real if hij.real >= 0 else -hij.real) + (hij.imag if hij.imag >= 0 else -hij.imag)
        if rowsum > worst:
            worst = rowsum
    if worst <= bound:
        return 1
    # chol <- bound*I - H', then in-place lower Cholesky with early exit
    for i in range(n):
        for j in range(n):
            hij = (h3[b, i, j] + new_row[i].conjugate() * new_row[j]
                   - old_row[i].conjugate() * old_row[j])
            chol[i, j] = -hij
        chol[i, i] = chol[i, i] + bound
    for k in range(n):
        pivot = chol[k, k].real
        for j in range(k):
            pivot -= (chol[k, j].real * chol[k, j].real
                      + chol[k, j].imag * chol[k, j].imag)
        if pivot <= 0.0:
            return 0
        pivot = sqrt(pivot)
        chol[k, k] = pivot
        for i in range(k + 1, n):
            acc = chol[i, k]
            for j in range(k):
                acc -= chol[i, j] * chol[k, j].conjugate()
            chol[i, k] = acc / pivot
    return 1
