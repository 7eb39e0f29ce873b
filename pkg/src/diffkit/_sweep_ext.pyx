# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reverse sweep over a float64 tape (see _sweep.py)."""


def reverse_sweep(const long long[::1] parent0, const long long[::1] parent1,
                  const double[::1] partial0, const double[::1] partial1,
                  double[::1] adjoints, Py_ssize_t start):
    cdef Py_ssize_t i
    cdef long long j
    cdef double a
    with nogil:
        i = start
        while i >= 0:
            a = adjoints[i]
            if a != 0.0:
                j = parent0[i]
                if j >= 0:
                    adjoints[j] = adjoints[j] + a * partial0[i]
                    j = parent1[i]
                    if j >= 0:
                        adjoints[j] = adjoints[j] + a * partial1[i]
            i -= 1
