# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of ``_pykernels``; results must match bit for bit."""

from libc.math cimport pow


def unit_disk_edges(xs, ys, double radius):
    cdef Py_ssize_t n = len(xs)
    cdef Py_ssize_t i, j
    cdef double r2 = radius * radius
    cdef double xi, yi, dx, dy
    cdef double[::1] cx
    cdef double[::1] cy
    edges = []
    if n == 0:
        return edges
    import array
    ax = array.array("d", xs)
    ay = array.array("d", ys)
    cx = ax
    cy = ay
    for i in range(n):
        xi = cx[i]
        yi = cy[i]
        for j in range(i + 1, n):
            dx = cx[j] - xi
            dy = cy[j] - yi
            if dx * dx + dy * dy <= r2:
                edges.append((i, j))
    return edges


def power_normalize(taus, double k):
    cdef Py_ssize_t n = len(taus)
    cdef Py_ssize_t i
    cdef double total = 0.0
    cdef double p
    powered = [0.0] * n
    for i in range(n):
        p = pow(<double>taus[i], k)
        powered[i] = p
        total += p
    if not total > 0.0:
        return None
    return [<double>powered[i] / total for i in range(n)]


def pick_index(probs, double u):
    cdef Py_ssize_t last = len(probs) - 1
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(last):
        acc += <double>probs[i]
        if u < acc:
            return i
    return last
