# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Line-for-line mirror of ``_kernels_py`` — keep in sync."""

from libc.math cimport exp, fabs, pow, INFINITY
from libc.stdint cimport int32_t, int64_t, uint8_t

COMPILED = True

cdef double _MARGIN_EPS = 1e-15


cdef inline double _sigmoid(double z) nogil:
    cdef double p, e
    if z >= 0.0:
        p = 1.0 / (1.0 + exp(-z))
    else:
        e = exp(z)
        p = e / (1.0 + e)
    if p < _MARGIN_EPS:
        p = _MARGIN_EPS
    elif p > 1.0 - _MARGIN_EPS:
        p = 1.0 - _MARGIN_EPS
    return p


cdef inline double _dot_bias(const int32_t* idx, const double* val, Py_ssize_t nnz,
                             const double* w, Py_ssize_t d1) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t t
    for t in range(nnz):
        acc += val[t] * w[idx[t]]
    return acc + w[d1 - 1]


cdef inline void _sgd_step(double* w, Py_ssize_t d1, const int32_t* idx,
                           const double* val, Py_ssize_t nnz, double target,
                           double step) nogil:
    cdef double g = _sigmoid(_dot_bias(idx, val, nnz, w, d1)) - target
    cdef Py_ssize_t t
    for t in range(nnz):
        w[idx[t]] -= step * g * val[t]
    w[d1 - 1] -= step * g


cdef inline void _nag_sync(double* w, double* vel, int64_t* last, Py_ssize_t coord,
                           int64_t step_now, double mu) nogil:
    cdef int64_t k = step_now - last[coord]
    cdef double v, decay
    if k > 0:
        v = vel[coord]
        if v != 0.0:
            decay = pow(mu, <double>k)
            w[coord] += v * (mu * (1.0 - decay) / (1.0 - mu))
            vel[coord] = v * decay
        last[coord] = step_now


cdef inline int64_t _nag_step(double* w, double* vel, int64_t* last, Py_ssize_t d1,
                              int64_t step_now, const int32_t* idx, const double* val,
                              Py_ssize_t nnz, double target, double step, double mu) nogil:
    cdef Py_ssize_t b = d1 - 1
    cdef Py_ssize_t t, c
    cdef double acc = 0.0
    cdef double g
    for t in range(nnz):
        _nag_sync(w, vel, last, idx[t], step_now, mu)
    _nag_sync(w, vel, last, b, step_now, mu)
    for t in range(nnz):
        c = idx[t]
        acc += val[t] * (w[c] + mu * vel[c])
    acc += w[b] + mu * vel[b]
    g = _sigmoid(acc) - target
    for t in range(nnz):
        c = idx[t]
        vel[c] = mu * vel[c] - step * g * val[t]
        w[c] += vel[c]
        last[c] = step_now + 1
    vel[b] = mu * vel[b] - step * g
    w[b] += vel[b]
    last[b] = step_now + 1
    return step_now + 1


cdef inline void _nag_finalize(double* w, double* vel, int64_t* last, Py_ssize_t d1,
                               int64_t step_now, double mu) nogil:
    cdef Py_ssize_t c
    for c in range(d1):
        _nag_sync(w, vel, last, c, step_now, mu)


def sigmoid(double z):
    return _sigmoid(z)


def dot_bias(const int32_t[::1] indices, const double[::1] values, const double[::1] w):
    cdef Py_ssize_t nnz = indices.shape[0]
    if nnz == 0:
        return w[w.shape[0] - 1]
    return _dot_bias(&indices[0], &values[0], nnz, &w[0], w.shape[0])


def margin(const int32_t[::1] indices, const double[::1] values, const double[::1] w):
    return _sigmoid(dot_bias(indices, values, w))


def sgd_step(double[::1] w, const int32_t[::1] indices, const double[::1] values,
             double target, double step):
    cdef Py_ssize_t nnz = indices.shape[0]
    cdef const int32_t* idx = &indices[0] if nnz > 0 else NULL
    cdef const double* val = &values[0] if nnz > 0 else NULL
    _sgd_step(&w[0], w.shape[0], idx, val, nnz, target, step)


def nag_step(double[::1] w, double[::1] vel, int64_t[::1] last, int64_t step_now,
             const int32_t[::1] indices, const double[::1] values, double target,
             double step, double mu):
    cdef Py_ssize_t nnz = indices.shape[0]
    cdef const int32_t* idx = &indices[0] if nnz > 0 else NULL
    cdef const double* val = &values[0] if nnz > 0 else NULL
    return _nag_step(&w[0], &vel[0], &last[0], w.shape[0], step_now, idx, val, nnz,
                     target, step, mu)


def nag_finalize(double[::1] w, double[::1] vel, int64_t[::1] last, int64_t step_now,
                 double mu):
    _nag_finalize(&w[0], &vel[0], &last[0], w.shape[0], step_now, mu)


def train_node(const int64_t[::1] f_indptr, const int32_t[::1] f_indices,
               const double[::1] f_values, const int64_t[::1] l_indptr,
               const int32_t[::1] l_labels, const int64_t[::1] ex_ids,
               const int32_t[::1] loc_of_label, double[:, ::1] weights,
               double[:, ::1] vel, int64_t[:, ::1] last, double[::1] p_marg,
               double[:, ::1] p_cond, double[::1] lv, int epochs, double lambda1,
               double lambda2, int opt_kind, double step, double mu,
               double[::1] epoch_j):
    cdef int m = <int>p_marg.shape[0]
    cdef int n_masks = (1 << m) - 1
    cdef double c_v = 0.0
    cdef int64_t steps[8]
    cdef double hyp[8]
    cdef double hyp_c[8]
    cdef Py_ssize_t n_ex = ex_ids.shape[0]
    cdef Py_ssize_t d1 = weights.shape[1]
    cdef Py_ssize_t n, t
    cdef int64_t i, xs, xe, ls, le
    cdef double ylen, bit, bal, tot, mwp, ci, J, best_j, lk, pik, tgt, pred
    cdef int e, s, j, l, k, best_mask
    cdef const int32_t* x_idx
    cdef const double* x_val
    for j in range(m):
        steps[j] = 0
    with nogil:
        for e in range(epochs):
            J = 0.0  # running sum of chosen objective values
            for n in range(n_ex):
                i = ex_ids[n]
                xs = f_indptr[i]
                xe = f_indptr[i + 1]
                ls = l_indptr[i]
                le = l_indptr[i + 1]
                ylen = <double>(le - ls)
                c_v += ylen
                for t in range(ls, le):
                    lv[loc_of_label[l_labels[t]]] += 1.0
                x_idx = &f_indices[xs] if xe > xs else NULL
                x_val = &f_values[xs] if xe > xs else NULL

                best_j = INFINITY
                best_mask = 1
                for s in range(1, n_masks + 1):
                    for j in range(m):
                        bit = <double>((s >> j) & 1)
                        hyp[j] = ((c_v - ylen) * p_marg[j] + ylen * bit) / c_v
                    bal = 0.0
                    tot = 0.0
                    for j in range(m):
                        tot += hyp[j]
                        for l in range(j + 1, m):
                            bal += fabs(hyp[j] - hyp[l])
                    mwp = fabs(tot - 1.0)
                    ci = 0.0
                    for t in range(ls, le):
                        k = loc_of_label[l_labels[t]]
                        lk = lv[k]
                        pik = lk / c_v
                        for j in range(m):
                            bit = <double>((s >> j) & 1)
                            hyp_c[j] = ((lk - 1.0) * p_cond[k, j] + bit) / lk
                        for j in range(m):
                            for l in range(j + 1, m):
                                ci += pik * fabs(hyp_c[j] - hyp_c[l])
                    if bal - lambda1 * ci + lambda2 * mwp < best_j:
                        best_j = bal - lambda1 * ci + lambda2 * mwp
                        best_mask = s
                J += best_j

                for j in range(m):
                    tgt = <double>((best_mask >> j) & 1)
                    if opt_kind == 0:
                        _sgd_step(&weights[j, 0], d1, x_idx, x_val, xe - xs, tgt, step)
                    else:
                        steps[j] = _nag_step(&weights[j, 0], &vel[j, 0], &last[j, 0],
                                             d1, steps[j], x_idx, x_val, xe - xs,
                                             tgt, step, mu)
                    pred = _sigmoid(_dot_bias(x_idx, x_val, xe - xs, &weights[j, 0], d1))
                    p_marg[j] = ((c_v - ylen) * p_marg[j] + ylen * pred) / c_v
                    for t in range(ls, le):
                        k = loc_of_label[l_labels[t]]
                        p_cond[k, j] = ((lv[k] - 1.0) * p_cond[k, j] + pred) / lv[k]
            epoch_j[e] = J / <double>n_ex
        if opt_kind == 1:
            for j in range(m):
                _nag_finalize(&weights[j, 0], &vel[j, 0], &last[j, 0], d1, steps[j], mu)
    return c_v


def route_examples(const int64_t[::1] f_indptr, const int32_t[::1] f_indices,
                   const double[::1] f_values, const int64_t[::1] ex_ids,
                   double[:, ::1] weights):
    import numpy as np
    cdef int m = <int>weights.shape[0]
    cdef Py_ssize_t d1 = weights.shape[1]
    masks_arr = np.zeros(ex_ids.shape[0], dtype=np.uint8)
    cdef uint8_t[::1] masks = masks_arr
    cdef Py_ssize_t n
    cdef int64_t i, xs, xe
    cdef int mask, j, arg
    cdef double d, best
    cdef const int32_t* x_idx
    cdef const double* x_val
    with nogil:
        for n in range(ex_ids.shape[0]):
            i = ex_ids[n]
            xs = f_indptr[i]
            xe = f_indptr[i + 1]
            x_idx = &f_indices[xs] if xe > xs else NULL
            x_val = &f_values[xs] if xe > xs else NULL
            mask = 0
            best = -INFINITY
            arg = 0
            for j in range(m):
                d = _dot_bias(x_idx, x_val, xe - xs, &weights[j, 0], d1)
                if d > 0.0:
                    mask |= 1 << j
                if d > best:
                    best = d
                    arg = j
            if mask == 0:
                mask = 1 << arg
            masks[n] = <uint8_t>mask
    return masks_arr


cdef inline Py_ssize_t _add_hist(const int64_t[::1] hist_indptr,
                                 const int32_t[::1] hist_labels,
                                 const double[::1] hist_vals, double mass,
                                 int32_t v, double[::1] acc, int32_t[::1] touched,
                                 Py_ssize_t n_touched) nogil:
    cdef int64_t t
    cdef int32_t lbl
    for t in range(hist_indptr[v], hist_indptr[v + 1]):
        lbl = hist_labels[t]
        if acc[lbl] == 0.0:
            touched[n_touched] = lbl
            n_touched += 1
        acc[lbl] += hist_vals[t] / mass
    return n_touched


def descend(const int32_t[:, ::1] children, const uint8_t[::1] is_leaf,
            const int32_t[::1] wrow, const double[:, :, ::1] weights,
            const int64_t[::1] hist_indptr, const int32_t[::1] hist_labels,
            const double[::1] hist_vals, const double[::1] hist_mass,
            const int32_t[::1] depth, const int32_t[::1] x_indices,
            const double[::1] x_values, double[::1] acc, int32_t[::1] touched,
            Py_ssize_t n_touched, int32_t[::1] stack_node, int32_t[::1] stack_fb):
    cdef int m = <int>children.shape[1]
    cdef Py_ssize_t d1 = weights.shape[2]
    cdef Py_ssize_t nnz = x_indices.shape[0]
    cdef const int32_t* x_idx = &x_indices[0] if nnz > 0 else NULL
    cdef const double* x_val = &x_values[0] if nnz > 0 else NULL
    cdef Py_ssize_t top = 0
    cdef bint found = False, sent
    cdef int32_t fb_best = -1
    cdef int n_leaves = 0
    cdef int32_t v, fb
    cdef int j, arg
    cdef double d, best
    with nogil:
        stack_node[top] = 0
        stack_fb[top] = 0
        top += 1
        while top > 0:
            top -= 1
            v = stack_node[top]
            fb = stack_fb[top]
            if hist_mass[v] > 0.0:
                fb = v
            if is_leaf[v]:
                n_leaves += 1
                if hist_mass[v] > 0.0:
                    found = True
                    n_touched = _add_hist(hist_indptr, hist_labels, hist_vals,
                                          hist_mass[v], v, acc, touched, n_touched)
                elif fb_best < 0 or depth[fb] > depth[fb_best] or (
                        depth[fb] == depth[fb_best] and fb < fb_best):
                    fb_best = fb
                continue
            best = -INFINITY
            arg = 0
            sent = False
            for j in range(m):
                d = _dot_bias(x_idx, x_val, nnz, &weights[wrow[v], j, 0], d1)
                if d > 0.0:
                    stack_node[top] = children[v, j]
                    stack_fb[top] = fb
                    top += 1
                    sent = True
                if d > best:
                    best = d
                    arg = j
            if not sent:
                stack_node[top] = children[v, arg]
                stack_fb[top] = fb
                top += 1
        if not found and fb_best >= 0:
            n_touched = _add_hist(hist_indptr, hist_labels, hist_vals,
                                  hist_mass[fb_best], fb_best, acc, touched, n_touched)
    return n_touched, n_leaves
