"""Independent reference computations for the test suite.

Nothing here goes through hmhf's quadrature tables or reference element:
basis functions are written out by hand and integrals use adaptive Simpson.
"""

import math

import numpy as np


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=50):
    """Adaptive Simpson quadrature of a scalar function on [a, b]."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(
            m, b, fm, frm, fb, right, tol / 2, depth - 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def integrate_cells(f, n_cells, tol=1e-13):
    """Sum of adaptive Simpson over the cells of a uniform mesh of [0, 1]."""
    h = 1.0 / n_cells
    return sum(adaptive_simpson(f, c * h, (c + 1) * h, tol / n_cells) for c in range(n_cells))


def basis(i, n_cells, degree):
    """Global Lagrange basis function i (dofs left to right) and its derivative."""
    h = 1.0 / n_cells
    if degree == 1:
        ri = i * h

        def phi(r):
            return max(0.0, 1.0 - abs(r - ri) / h)

        def dphi(r):
            if abs(r - ri) >= h:
                return 0.0
            return -1.0 / h if r > ri else 1.0 / h

        return phi, dphi
    if degree == 2:
        cell, local = divmod(i, 2)
        if local == 1:  # midpoint bubble of cell `cell`
            a = cell * h

            def phi(r):
                x = (r - a) / h
                return 4.0 * x * (1.0 - x) if 0.0 <= x <= 1.0 else 0.0

            def dphi(r):
                x = (r - a) / h
                return (4.0 - 8.0 * x) / h if 0.0 <= x <= 1.0 else 0.0

            return phi, dphi
        ri = cell * h

        def phi(r):
            x = (r - ri) / h
            if 0.0 <= x <= 1.0:  # left end of the cell to the right
                return (1.0 - x) * (1.0 - 2.0 * x)
            if -1.0 <= x < 0.0:
                y = x + 1.0
                return y * (2.0 * y - 1.0)
            return 0.0

        def dphi(r):
            x = (r - ri) / h
            if 0.0 <= x <= 1.0:
                return (4.0 * x - 3.0) / h
            if -1.0 <= x < 0.0:
                y = x + 1.0
                return (4.0 * y - 1.0) / h
            return 0.0

        return phi, dphi
    raise ValueError(degree)


def _safe_div_r(val, r):
    return 0.0 if r == 0.0 else val / r


def oracle_matrices(n_cells, degree):
    """Dense M_r and A_r on the free dofs by adaptive quadrature."""
    n_tot = degree * n_cells + 1
    free = range(1, n_tot - 1)
    bases = {i: basis(i, n_cells, degree) for i in range(n_tot)}
    n = n_tot - 2
    m = np.zeros((n, n))
    a = np.zeros((n, n))
    for ii, i in enumerate(free):
        for jj, j in enumerate(free):
            if abs(i - j) > degree or jj < ii:
                continue
            pi, dpi = bases[i]
            pj, dpj = bases[j]
            m[ii, jj] = integrate_cells(lambda r: pi(r) * pj(r) * r, n_cells)
            a[ii, jj] = integrate_cells(
                lambda r: dpi(r) * dpj(r) * r + _safe_div_r(pi(r) * pj(r), r), n_cells
            )
            m[jj, ii], a[jj, ii] = m[ii, jj], a[ii, jj]
    return m, a


def oracle_fe_value(coeffs, n_cells, degree):
    """Callable evaluating sum_i c_i phi_i(r) with the hand-written basis."""
    bases = [basis(i, n_cells, degree) for i in range(len(coeffs))]

    def u(r):
        return sum(c * b[0](r) for c, b in zip(coeffs, bases) if c != 0.0)

    return u


def oracle_load(coeffs, n_cells, degree):
    """b_i = ∫ f(u) phi_i / r dr on the free dofs."""
    u = oracle_fe_value(coeffs, n_cells, degree)
    n_tot = degree * n_cells + 1
    out = []
    for i in range(1, n_tot - 1):
        phi, _ = basis(i, n_cells, degree)

        def integrand(r):
            z = u(r)
            return _safe_div_r((z - 0.5 * math.sin(2.0 * z)) * phi(r), r)

        out.append(integrate_cells(integrand, n_cells))
    return np.array(out)


def oracle_energy(u, du, n_cells=64, tol=1e-13):
    """Continuous energy 1/2 ∫ (u'^2 + sin^2 u / r^2) r dr of a smooth profile."""
    return integrate_cells(
        lambda r: 0.5 * (du(r) ** 2 * r + _safe_div_r(math.sin(u(r)) ** 2, r)), n_cells, tol
    )
