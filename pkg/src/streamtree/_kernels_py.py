"""Pure-Python kernels: the readable reference for the compiled core.

Every function here has a line-for-line mirror in ``_kernels.pyx``. Both
operate on the same flat numpy arrays, use float64 throughout, and apply
operations in the same order, so the two backends produce identical
results on the same platform. Keep them in sync.
"""

import math

import numpy as np

COMPILED = False

# Margins are kept strictly inside (0, 1) so the cross-entropy loss and
# the probability recurrences never see an exact 0 or 1.
_MARGIN_EPS = 1e-15


def sigmoid(z):
    """Numerically stable logistic function, clamped to (0, 1)."""
    if z >= 0.0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    if p < _MARGIN_EPS:
        p = _MARGIN_EPS
    elif p > 1.0 - _MARGIN_EPS:
        p = 1.0 - _MARGIN_EPS
    return p


def dot_bias(indices, values, w):
    """Sparse dot product against a dense vector with a trailing bias slot."""
    acc = 0.0
    for t in range(len(indices)):
        acc += values[t] * w[indices[t]]
    return acc + w[len(w) - 1]


def margin(indices, values, w):
    return sigmoid(dot_bias(indices, values, w))


def sgd_step(w, indices, values, target, step):
    """One cross-entropy gradient step touching only the support + bias."""
    g = margin(indices, values, w) - target
    for t in range(len(indices)):
        w[indices[t]] -= step * g * values[t]
    w[len(w) - 1] -= step * g


def _nag_sync(w, vel, last, coord, step_now, mu):
    """Apply the pending momentum-only decay to one coordinate.

    Between gradient touches a coordinate evolves as v <- mu*v, w <- w + v
    each step; k pending steps collapse to the closed form below.
    """
    k = step_now - last[coord]
    if k > 0:
        v = vel[coord]
        if v != 0.0:
            decay = mu ** float(k)  # float exponent: matches C pow bit-for-bit
            w[coord] += v * (mu * (1.0 - decay) / (1.0 - mu))
            vel[coord] = v * decay
        last[coord] = step_now


def nag_step(w, vel, last, step_now, indices, values, target, step, mu):
    """One Nesterov step; returns the new step counter.

    The gradient is evaluated at the look-ahead point w + mu*v. Only the
    example's support and the bias are touched; all other coordinates are
    decayed lazily via ``_nag_sync``.
    """
    b = len(w) - 1
    for t in range(len(indices)):
        _nag_sync(w, vel, last, indices[t], step_now, mu)
    _nag_sync(w, vel, last, b, step_now, mu)
    acc = 0.0
    for t in range(len(indices)):
        c = indices[t]
        acc += values[t] * (w[c] + mu * vel[c])
    acc += w[b] + mu * vel[b]
    g = sigmoid(acc) - target
    for t in range(len(indices)):
        c = indices[t]
        vel[c] = mu * vel[c] - step * g * values[t]
        w[c] += vel[c]
        last[c] = step_now + 1
    vel[b] = mu * vel[b] - step * g
    w[b] += vel[b]
    last[b] = step_now + 1
    return step_now + 1


def nag_finalize(w, vel, last, step_now, mu):
    """Flush pending momentum decay on every coordinate."""
    for c in range(len(w)):
        _nag_sync(w, vel, last, c, step_now, mu)


def train_node(
    f_indptr,
    f_indices,
    f_values,
    l_indptr,
    l_labels,
    ex_ids,
    loc_of_label,
    weights,
    vel,
    last,
    p_marg,
    p_cond,
    lv,
    epochs,
    lambda1,
    lambda2,
    opt_kind,
    step,
    mu,
    epoch_j,
):
    """Train one node's direction regressors on its example stream.

    For each example (epochs passes): bump the label-occurrence counters,
    pick the direction subset minimizing the split objective, take one
    gradient step per direction regressor with that subset as targets,
    then fold the fresh margins into the marginal and per-label direction
    probabilities. Counters accumulate across epochs.

    Mutates ``weights``/``vel``/``last``, ``p_marg`` (m,), ``p_cond``
    (n_local, m), ``lv`` (n_local,) and writes the per-epoch mean of the
    chosen objective values into ``epoch_j``. Returns the final
    label-occurrence count c_v.
    """
    m = p_marg.shape[0]
    n_masks = (1 << m) - 1
    c_v = 0.0
    steps = [0] * m
    hyp = [0.0] * m
    hyp_c = [0.0] * m
    n_ex = len(ex_ids)
    for e in range(epochs):
        j_sum = 0.0
        for n in range(n_ex):
            i = ex_ids[n]
            xs, xe = f_indptr[i], f_indptr[i + 1]
            ls, le = l_indptr[i], l_indptr[i + 1]
            ylen = le - ls
            c_v += ylen
            for t in range(ls, le):
                lv[loc_of_label[l_labels[t]]] += 1.0
            x_idx = f_indices[xs:xe]
            x_val = f_values[xs:xe]

            best_j = math.inf
            best_mask = 1
            for s in range(1, n_masks + 1):
                for j in range(m):
                    bit = float((s >> j) & 1)
                    hyp[j] = ((c_v - ylen) * p_marg[j] + ylen * bit) / c_v
                bal = 0.0
                tot = 0.0
                for j in range(m):
                    tot += hyp[j]
                    for l in range(j + 1, m):
                        bal += abs(hyp[j] - hyp[l])
                mwp = abs(tot - 1.0)
                ci = 0.0
                for t in range(ls, le):
                    k = loc_of_label[l_labels[t]]
                    lk = lv[k]
                    pik = lk / c_v
                    for j in range(m):
                        bit = float((s >> j) & 1)
                        hyp_c[j] = ((lk - 1.0) * p_cond[k, j] + bit) / lk
                    for j in range(m):
                        for l in range(j + 1, m):
                            ci += pik * abs(hyp_c[j] - hyp_c[l])
                J = bal - lambda1 * ci + lambda2 * mwp
                if J < best_j:
                    best_j = J
                    best_mask = s
            j_sum += best_j

            for j in range(m):
                tgt = float((best_mask >> j) & 1)
                if opt_kind == 0:
                    sgd_step(weights[j], x_idx, x_val, tgt, step)
                else:
                    steps[j] = nag_step(
                        weights[j], vel[j], last[j], steps[j], x_idx, x_val, tgt, step, mu
                    )
                pred = margin(x_idx, x_val, weights[j])
                p_marg[j] = ((c_v - ylen) * p_marg[j] + ylen * pred) / c_v
                for t in range(ls, le):
                    k = loc_of_label[l_labels[t]]
                    p_cond[k, j] = ((lv[k] - 1.0) * p_cond[k, j] + pred) / lv[k]
        epoch_j[e] = j_sum / n_ex
    if opt_kind == 1:
        for j in range(m):
            nag_finalize(weights[j], vel[j], last[j], steps[j], mu)
    return c_v


def route_examples(f_indptr, f_indices, f_values, ex_ids, weights):
    """Direction bitmask per example: children whose raw score is positive,
    falling back to the single highest-scoring child (ties: lowest index).
    """
    m = weights.shape[0]
    masks = np.zeros(len(ex_ids), dtype=np.uint8)
    for n in range(len(ex_ids)):
        i = ex_ids[n]
        xs, xe = f_indptr[i], f_indptr[i + 1]
        x_idx = f_indices[xs:xe]
        x_val = f_values[xs:xe]
        mask = 0
        best = -math.inf
        arg = 0
        for j in range(m):
            d = dot_bias(x_idx, x_val, weights[j])
            if d > 0.0:
                mask |= 1 << j
            if d > best:
                best = d
                arg = j
        if mask == 0:
            mask = 1 << arg
        masks[n] = mask
    return masks


def descend(
    children,
    is_leaf,
    wrow,
    weights,
    hist_indptr,
    hist_labels,
    hist_vals,
    hist_mass,
    depth,
    x_indices,
    x_values,
    acc,
    touched,
    n_touched,
    stack_node,
    stack_fb,
):
    """Send one example down the tree, accumulating normalized leaf
    histograms into ``acc`` (newly touched labels appended to ``touched``).

    Empty leaves contribute nothing; if no populated leaf is reached at
    all, the deepest populated node seen on the way down (ties: lowest
    node id) stands in. Returns (new n_touched, number of leaves reached).
    """
    m = children.shape[1]
    top = 0
    stack_node[top] = 0
    stack_fb[top] = 0
    top += 1
    found = False
    fb_best = -1
    n_leaves = 0
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
                n_touched = _add_hist(
                    hist_indptr, hist_labels, hist_vals, hist_mass[v], v, acc, touched, n_touched
                )
            elif fb_best < 0 or depth[fb] > depth[fb_best] or (
                depth[fb] == depth[fb_best] and fb < fb_best
            ):
                fb_best = fb
            continue
        best = -math.inf
        arg = 0
        sent = False
        for j in range(m):
            d = dot_bias(x_indices, x_values, weights[wrow[v]][j])
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
        n_touched = _add_hist(
            hist_indptr, hist_labels, hist_vals, hist_mass[fb_best], fb_best, acc, touched, n_touched
        )
    return n_touched, n_leaves


def _add_hist(hist_indptr, hist_labels, hist_vals, mass, v, acc, touched, n_touched):
    for t in range(hist_indptr[v], hist_indptr[v + 1]):
        lbl = hist_labels[t]
        if acc[lbl] == 0.0:
            touched[n_touched] = lbl
            n_touched += 1
        acc[lbl] += hist_vals[t] / mass
    return n_touched
