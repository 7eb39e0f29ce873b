"""Pure-Python reverse sweep over a float64 tape.

Must stay arithmetically identical to ``_sweep_ext.pyx``: same visiting
order, same zero-adjoint skip, one multiply and one add per edge.
"""


def reverse_sweep(parent0, parent1, partial0, partial1, adjoints, start):
    p0 = parent0.tolist()
    p1 = parent1.tolist()
    d0 = partial0.tolist()
    d1 = partial1.tolist()
    adj = adjoints.tolist()
    for i in range(start, -1, -1):
        a = adj[i]
        if a == 0.0:
            continue
        j = p0[i]
        if j >= 0:
            adj[j] = adj[j] + a * d0[i]
            j = p1[i]
            if j >= 0:
                adj[j] = adj[j] + a * d1[i]
    adjoints[:] = adj
