# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: radix-tree construction, per-segment traversal + exact
tests, and the all-pairs baseline.

Arithmetic mirrors the pure Python reference exactly (float32 box compares,
double-precision intersection math, same operation order); the extension is
compiled with -ffp-contract=off so the two backends stay bit-identical.
All loops run without the GIL, so the engine can drive them from threads.
"""

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

cdef extern from *:
    """
    static inline int rs_atomic_inc(int *p) {
        return __atomic_fetch_add(p, 1, __ATOMIC_ACQ_REL);
    }
    """
    int rs_atomic_inc(int* p) nogil

DEF EMPTY = -1
DEF DET_EPSILON = 1e-9
DEF BARY_EPSILON = 1e-7

# Mode tags (must match the _compiled wrapper).
DEF MODE_BOOLEAN = 0
DEF MODE_BARYCENTRIC = 1
DEF MODE_COUNT = 2

# Kernel status codes.
DEF STATUS_OK = 0
DEF STATUS_STACK_OVERFLOW = 1


cdef inline float _fmin(float a, float b) nogil:
    return a if a < b else b


cdef inline float _fmax(float a, float b) nogil:
    return a if a > b else b


cdef inline bint _overlap(const float* a, const float* b) nogil:
    return (
        a[0] <= b[1] and a[1] >= b[0]
        and a[2] <= b[3] and a[3] >= b[2]
        and a[4] <= b[5] and a[5] >= b[4]
    )


cdef inline bint _delta_less(
    const unsigned long long* codes, const int* ids, int a, int b
) nogil:
    cdef unsigned long long xa = codes[a] ^ codes[a + 1]
    cdef unsigned long long xb = codes[b] ^ codes[b + 1]
    cdef int ia, ib
    if xa != xb:
        return xa < xb
    ia = ids[a] ^ ids[a + 1]
    ib = ids[b] ^ ids[b + 1]
    if ia != ib:
        return ia < ib
    return a < b


cdef inline bint _mt_hit(
    const float* va, const float* vb, const float* vc,
    const float* s, const float* e,
    double* t_out, double* u_out, double* v_out,
) nogil:
    """Moller-Trumbore in double precision; same op order as geometry.py."""
    cdef double ax = va[0], ay = va[1], az = va[2]
    cdef double sx = s[0], sy = s[1], sz = s[2]
    cdef double e1x = <double>vb[0] - ax
    cdef double e1y = <double>vb[1] - ay
    cdef double e1z = <double>vb[2] - az
    cdef double e2x = <double>vc[0] - ax
    cdef double e2y = <double>vc[1] - ay
    cdef double e2z = <double>vc[2] - az
    cdef double dx = <double>e[0] - sx
    cdef double dy = <double>e[1] - sy
    cdef double dz = <double>e[2] - sz

    cdef double px = dy * e2z - dz * e2y
    cdef double py = dz * e2x - dx * e2z
    cdef double pz = dx * e2y - dy * e2x
    cdef double det = e1x * px + e1y * py + e1z * pz
    if fabs(det) < DET_EPSILON:
        return 0
    cdef double inv_det = 1.0 / det

    cdef double tx = sx - ax
    cdef double ty = sy - ay
    cdef double tz = sz - az
    cdef double u = (tx * px + ty * py + tz * pz) * inv_det
    if u < -BARY_EPSILON or u > 1.0 + BARY_EPSILON:
        return 0

    cdef double qx = ty * e1z - tz * e1y
    cdef double qy = tz * e1x - tx * e1z
    cdef double qz = tx * e1y - ty * e1x
    cdef double v = (dx * qx + dy * qy + dz * qz) * inv_det
    if v < -BARY_EPSILON or u + v > 1.0 + BARY_EPSILON:
        return 0

    cdef double t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
    if t < 0.0 or t > 1.0:
        return 0

    t_out[0] = t
    u_out[0] = u
    v_out[0] = v
    return 1


def construct_range(
    unsigned long long[::1] codes,
    int[::1] ids,
    int[::1] child_l,
    int[::1] child_r,
    int[::1] range_l,
    int[::1] range_r,
    int[::1] visit,
    int[::1] int_tri,
    float[:, ::1] int_bounds,
    float[:, ::1] leaf_bounds,
    int n,
    int lo,
    int hi,
):
    """Climb from leaves [lo, hi) toward the root, linking parents.

    Visit counters are incremented atomically, so disjoint leaf ranges may be
    processed by concurrent threads; the resulting tree is identical for any
    schedule.
    """
    cdef int i
    with nogil:
        for i in range(lo, hi):
            _climb(
                &codes[0], &ids[0], &child_l[0], &child_r[0],
                &range_l[0], &range_r[0], &visit[0], &int_tri[0],
                int_bounds, leaf_bounds, n, i,
            )


cdef void _climb(
    const unsigned long long* codes, const int* ids,
    int* child_l, int* child_r, int* range_l, int* range_r,
    int* visit, int* int_tri,
    float[:, ::1] int_bounds, float[:, ::1] leaf_bounds,
    int n, int i,
) nogil:
    cdef int n_int = n - 1
    cdef int left = i, right = i
    cdef int node = n_int + i
    cdef int parent, k
    cdef const float* lb
    cdef const float* rb
    while True:
        if left == 0 and right == n - 1:
            child_l[n - 1] = node  # root-pointer slot
            if node < n_int:
                int_tri[node] = -2
            return
        if left == 0 or (right != n - 1 and _delta_less(codes, ids, right, left - 1)):
            parent = right
            child_l[parent] = node
            range_l[parent] = left
        else:
            parent = left - 1
            child_r[parent] = node
            range_r[parent] = right
        if rs_atomic_inc(&visit[parent]) == 0:
            return  # first arriver stops; the sibling continues the climb
        left = range_l[parent]
        right = range_r[parent]
        lb = _bounds_ptr(child_l[parent], n_int, int_bounds, leaf_bounds)
        rb = _bounds_ptr(child_r[parent], n_int, int_bounds, leaf_bounds)
        for k in range(3):
            int_bounds[parent, 2 * k] = _fmin(lb[2 * k], rb[2 * k])
            int_bounds[parent, 2 * k + 1] = _fmax(lb[2 * k + 1], rb[2 * k + 1])
        node = parent


cdef inline const float* _bounds_ptr(
    int ref, int n_int, float[:, ::1] int_bounds, float[:, ::1] leaf_bounds
) nogil:
    if ref < n_int:
        return &int_bounds[ref, 0]
    return &leaf_bounds[ref - n_int, 0]


def batch_query(
    float[:, ::1] verts,
    int[:, ::1] tris,
    float[:, ::1] starts,
    float[:, ::1] ends,
    float[:, ::1] seg_boxes,
    float[:, ::1] int_bounds,
    int[::1] child_l,
    int[::1] child_r,
    int[::1] leaf_tri,
    float[:, ::1] leaf_bounds,
    int root,
    int n_tri,
    int mode,
    int max_coll,
    int max_stack,
    int lo,
    int hi,
    int[::1] detected,
    int[::1] counts,
    int[::1] tri_out,
    float[::1] dist_out,
    float[:, ::1] points_out,
):
    """Traverse + exact-test segments [lo, hi); returns (status, bad_segment)."""
    cdef int* stack = <int*> malloc(max_stack * sizeof(int))
    cdef int* buf = <int*> malloc(max_coll * sizeof(int))
    if stack == NULL or buf == NULL:
        free(stack)
        free(buf)
        raise MemoryError("could not allocate traversal scratch")

    cdef int status = STATUS_OK
    cdef int bad_segment = -1
    cdef int n_int = n_tri - 1
    cdef int i, top, node, count, k, tid, ia, ib, ic
    cdef int child_a, child_b
    cdef bint leaf_a, leaf_b, over_a, over_b, trav_a, trav_b, buffer_full
    cdef bint det_flag, has_best
    cdef int n_hits, best_tri
    cdef double t, u, v, best_t
    cdef double sx, sy, sz, dx, dy, dz, px, py, pz, ddx, ddy, ddz
    cdef const float* qbox
    cdef const float* sp
    cdef const float* ep

    with nogil:
        for i in range(lo, hi):
            qbox = &seg_boxes[i, 0]
            sp = &starts[i, 0]
            ep = &ends[i, 0]
            stack[0] = EMPTY
            top = 1
            node = root
            det_flag = 0
            has_best = 0
            n_hits = 0
            best_t = 0.0
            best_tri = -1

            while True:
                # --- coarse phase: refill the candidate buffer ---
                count = 0
                buffer_full = 0
                while node != EMPTY and not buffer_full:
                    if node >= n_int:
                        if _overlap(qbox, &leaf_bounds[node - n_int, 0]):
                            buf[count] = leaf_tri[node - n_int]
                            count += 1
                            buffer_full = count >= max_coll - 1
                        top -= 1
                        node = stack[top]
                        continue
                    child_a = child_l[node]
                    child_b = child_r[node]
                    leaf_a = child_a >= n_int
                    leaf_b = child_b >= n_int
                    over_a = _overlap(
                        qbox, _bounds_ptr(child_a, n_int, int_bounds, leaf_bounds)
                    )
                    over_b = _overlap(
                        qbox, _bounds_ptr(child_b, n_int, int_bounds, leaf_bounds)
                    )
                    if over_a and leaf_a:
                        buf[count] = leaf_tri[child_a - n_int]
                        count += 1
                        buffer_full = count >= max_coll - 1
                    if over_b and leaf_b:
                        buf[count] = leaf_tri[child_b - n_int]
                        count += 1
                        buffer_full = buffer_full or count >= max_coll - 1
                    trav_a = over_a and not leaf_a
                    trav_b = over_b and not leaf_b
                    if not trav_a and not trav_b:
                        top -= 1
                        node = stack[top]
                    else:
                        node = child_a if trav_a else child_b
                        if trav_a and trav_b:
                            if top >= max_stack:
                                status = STATUS_STACK_OVERFLOW
                                bad_segment = i
                                break
                            stack[top] = child_b
                            top += 1
                if status != STATUS_OK:
                    break

                # --- fine phase: exact tests on buffered candidates ---
                for k in range(count):
                    if mode == MODE_BOOLEAN and det_flag:
                        break
                    tid = buf[k]
                    ia = tris[tid, 0]
                    ib = tris[tid, 1]
                    ic = tris[tid, 2]
                    if _mt_hit(
                        &verts[ia, 0], &verts[ib, 0], &verts[ic, 0],
                        sp, ep, &t, &u, &v,
                    ):
                        det_flag = 1
                        n_hits += 1
                        if not has_best or t < best_t or (t == best_t and tid < best_tri):
                            has_best = 1
                            best_t = t
                            best_tri = tid
                if node == EMPTY or (mode == MODE_BOOLEAN and det_flag):
                    break
            if status != STATUS_OK:
                break

            if mode == MODE_BOOLEAN:
                detected[i] = det_flag
            elif mode == MODE_COUNT:
                counts[i] = n_hits
            elif has_best:
                detected[i] = 1
                tri_out[i] = best_tri
                sx = sp[0]
                sy = sp[1]
                sz = sp[2]
                dx = <double>ep[0] - sx
                dy = <double>ep[1] - sy
                dz = <double>ep[2] - sz
                px = sx + best_t * dx
                py = sy + best_t * dy
                pz = sz + best_t * dz
                ddx = px - sx
                ddy = py - sy
                ddz = pz - sz
                dist_out[i] = <float>sqrt(ddx * ddx + ddy * ddy + ddz * ddz)
                points_out[i, 0] = <float>px
                points_out[i, 1] = <float>py
                points_out[i, 2] = <float>pz

    free(stack)
    free(buf)
    return status, bad_segment


def batch_baseline(
    float[:, ::1] verts,
    int[:, ::1] tris,
    float[:, ::1] tri_boxes,
    float[:, ::1] starts,
    float[:, ::1] ends,
    float[:, ::1] seg_boxes,
    int mode,
    int lo,
    int hi,
    int[::1] detected,
    int[::1] counts,
    int[::1] tri_out,
    float[::1] dist_out,
    float[:, ::1] points_out,
):
    """Prescreen + exact test over every (segment, triangle) pair."""
    cdef int n_tri = tris.shape[0]
    cdef int i, j, ia, ib, ic
    cdef bint det_flag, has_best
    cdef int n_hits, best_tri
    cdef double t, u, v, best_t
    cdef double sx, sy, sz, dx, dy, dz, px, py, pz, ddx, ddy, ddz
    cdef const float* qbox
    cdef const float* sp
    cdef const float* ep

    with nogil:
        for i in range(lo, hi):
            qbox = &seg_boxes[i, 0]
            sp = &starts[i, 0]
            ep = &ends[i, 0]
            det_flag = 0
            has_best = 0
            n_hits = 0
            best_t = 0.0
            best_tri = -1
            for j in range(n_tri):
                if not _overlap(qbox, &tri_boxes[j, 0]):
                    continue
                ia = tris[j, 0]
                ib = tris[j, 1]
                ic = tris[j, 2]
                if not _mt_hit(
                    &verts[ia, 0], &verts[ib, 0], &verts[ic, 0], sp, ep, &t, &u, &v
                ):
                    continue
                det_flag = 1
                n_hits += 1
                if mode == MODE_BOOLEAN:
                    break
                if not has_best or t < best_t or (t == best_t and j < best_tri):
                    has_best = 1
                    best_t = t
                    best_tri = j

            if mode == MODE_BOOLEAN:
                detected[i] = det_flag
            elif mode == MODE_COUNT:
                counts[i] = n_hits
            elif has_best:
                detected[i] = 1
                tri_out[i] = best_tri
                sx = sp[0]
                sy = sp[1]
                sz = sp[2]
                dx = <double>ep[0] - sx
                dy = <double>ep[1] - sy
                dz = <double>ep[2] - sz
                px = sx + best_t * dx
                py = sy + best_t * dy
                pz = sz + best_t * dz
                ddx = px - sx
                ddy = py - sy
                ddz = pz - sz
                dist_out[i] = <float>sqrt(ddx * ddx + ddy * ddy + ddz * ddz)
                points_out[i, 0] = <float>px
                points_out[i, 1] = <float>py
                points_out[i, 2] = <float>pz
