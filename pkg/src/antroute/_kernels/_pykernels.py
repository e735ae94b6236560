"""Pure-Python versions of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` that must return
bit-identical results: same operation order, no fused multiply-add.
"""


def unit_disk_edges(xs, ys, radius):
    """Return sorted ``(i, j)`` pairs, ``i < j``, with distance <= radius."""
    r2 = radius * radius
    n = len(xs)
    edges = []
    for i in range(n):
        xi = xs[i]
        yi = ys[i]
        for j in range(i + 1, n):
            dx = xs[j] - xi
            dy = ys[j] - yi
            if dx * dx + dy * dy <= r2:
                edges.append((i, j))
    return edges


def power_normalize(taus, k):
    """Return ``tau**k / sum(tau**k)`` for each tau, summed left to right."""
    powered = [t ** k for t in taus]
    total = 0.0
    for p in powered:
        total += p
    if not total > 0.0:
        return None
    return [p / total for p in powered]


def pick_index(probs, u):
    """Inverse-CDF lookup of ``u`` in ``probs`` (listed order)."""
    acc = 0.0
    last = len(probs) - 1
    for i in range(last):
        acc += probs[i]
        if u < acc:
            return i
    return last
