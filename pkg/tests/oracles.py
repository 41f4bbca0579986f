"""Slow, independent reference implementations used only by the tests."""

from fractions import Fraction

import numpy as np


def median_oracle(u, mass, gamma):
    """inf{a : mass{u > a} < gamma * total}, by enumerating levels in exact rationals."""
    u = [float(v) for v in u]
    w = [Fraction(float(m)) for m in mass]
    total = sum(w)
    g = Fraction(float(gamma))
    for a in sorted(set(u)):
        above = sum(wi for ui, wi in zip(u, w) if ui > a)
        if above < g * total:
            return a
    raise AssertionError("unreachable: the top level always qualifies")


def balls_below(space, x, R=np.inf):
    """Member lists of all distinct open balls B(x, r), 0 < r < R."""
    d = space.dist_row(x)
    out = []
    for dj in np.unique(d):
        if dj < R:
            out.append(np.flatnonzero(d <= dj))
    return out


def median_maximal_oracle(space, u, gamma, R=np.inf):
    a = np.abs(np.asarray(u, dtype=float))
    return np.array([max(median_oracle(a[b], space.mass[b], gamma) for b in balls_below(space, x, R))
                     for x in range(space.n)])


def hl_maximal_oracle(space, u, R=np.inf):
    a = np.abs(np.asarray(u, dtype=float))
    out = []
    for x in range(space.n):
        best = Fraction(0)
        for b in balls_below(space, x, R):
            w = [Fraction(float(m)) for m in space.mass[b]]
            avg = sum(wi * Fraction(float(v)) for wi, v in zip(w, a[b])) / sum(w)
            best = max(best, avg)
        out.append(float(best))
    return np.array(out)


def indicator_maximal_exact(space, E, x, R=np.inf):
    """sup over balls at x of mass(E cap B) / mass(B) as an exact fraction."""
    best = Fraction(0)
    for b in balls_below(space, x, R):
        w = [Fraction(float(m)) for m in space.mass[b]]
        inE = sum(wi for wi, i in zip(w, b) if E[i])
        best = max(best, inE / sum(w))
    return best


def l1_gradient_bruteforce(C, mass, step=0.5):
    """min sum m g over g in step*Z^n with g_x + g_y >= C[x, y]; pruned depth-first search.

    Exact for the LP when the pair bounds are integers and step = 1/2 (vertices are half-integral).
    """
    n = C.shape[0]
    levels = np.arange(0.0, C.max() + step / 2, step)
    # feasible start: half the largest bound at each point (pair sums then dominate)
    best = [float(mass @ (0.5 * C.max(axis=1))) + step]
    g = np.zeros(n)

    def go(k, cost):
        if k == n:
            best[0] = min(best[0], cost)
            return
        # every later node must cover its pairs with the nodes already fixed
        need = np.maximum((C[k:, :k] - g[None, :k]).max(axis=1, initial=0.0), 0.0)
        # plus the single worst pair among the free nodes
        gap = np.maximum(C[k:, k:] - need[:, None] - need[None, :], 0.0)
        extra = float((gap * np.minimum(mass[k:, None], mass[None, k:])).max())
        if cost + mass[k:] @ need + extra >= best[0]:
            return
        for v in levels[levels >= need[0] - 1e-12]:
            g[k] = v
            go(k + 1, cost + mass[k] * v)
        g[k] = 0.0

    go(0, 0.0)
    return best[0]


def lorentz_quadrature(u, mass, p, q):
    """(int_0^inf lambda^(q-1) mu{|u| > lambda}^(q/p) d lambda)^(1/q) by piecewise adaptive quadrature."""
    from scipy import integrate
    a = np.abs(np.asarray(u, dtype=float))
    w = np.asarray(mass, dtype=float)
    levels = np.concatenate(([0.0], np.unique(a[a > 0])))
    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        dist = w[a > lo].sum()   # constant on (lo, hi)
        val, _ = integrate.quad(lambda t: t ** (q - 1) * dist ** (q / p), lo, hi, epsabs=0, epsrel=1e-13, limit=200)
        total += val
    return total ** (1.0 / q)


def dyadic_masses(rng, n, lo=0.1, hi=10.0):
    """Random masses in [lo, hi] on the 1/64 grid, so partial sums are exact in floating point."""
    k = np.round(rng.uniform(lo, hi, n) * 64)
    return np.clip(k, np.ceil(lo * 64), np.floor(hi * 64)) / 64


def _shrunk_gamma(gamma, mA, mB):
    """Largest float g' <= gamma * mA / mB, checked in exact rationals."""
    g = float(gamma * mA / mB)
    while Fraction(g) * Fraction(mB) > Fraction(gamma) * Fraction(mA):
        g = float(np.nextafter(g, 0.0))
    return g


def median_property_failures(space, u, v, gamma, gamma2, center, r_small, r_big, shift, factor):
    """Names of the median properties that fail on one instance (a: gamma order, b: u order, c: nesting,
    d: shift, e: scaling, f: absolute value, g: splitting).

    Every median is taken from the library and must also equal the rational
    level-enumeration oracle; u, v, shift and factor are integers so sums and
    products are exact.
    """
    from medianscape.medians import gamma_median
    m = space.mass
    bad = []

    def med(w, g, idx=None):
        idx = np.arange(space.n) if idx is None else idx
        val = gamma_median(w[idx], g, m[idx])
        if val != median_oracle(w[idx], m[idx], g):
            bad.append("oracle")
        return val

    lo, hi = min(gamma, gamma2), max(gamma, gamma2)
    if not med(u, lo) >= med(u, hi):
        bad.append("a")
    w = u + np.abs(v)
    if not med(u, gamma) <= med(w, gamma):
        bad.append("b")
    d = space.dist_row(center)
    A, B = np.flatnonzero(d < r_small), np.flatnonzero(d < r_big)
    g_b = _shrunk_gamma(gamma, m[A].sum(), m[B].sum())
    if g_b > 0 and not med(u, gamma, A) <= med(u, g_b, B):
        bad.append("c")
    if not med(u + shift, gamma) == med(u, gamma) + shift:
        bad.append("d")
    if not med(factor * u, gamma) == factor * med(u, gamma):
        bad.append("e")
    if not abs(med(u, gamma)) <= med(np.abs(u), min(gamma, 1 - gamma)):
        bad.append("f")
    if not med(u + v, gamma) <= med(u, gamma / 2) + med(v, gamma / 2):
        bad.append("g")
    return bad


def cover_failures(space, cover):
    """Names of the partition-of-unity properties that fail, checked from the sparse weights."""
    n = space.n
    bad = set()
    total = np.zeros(n)
    count = np.zeros(n, dtype=np.int64)
    near = np.zeros(n, dtype=bool)
    for x, s, v, b in zip(cover.centers, cover.support, cover.phi, cover.balls):
        total[s] += v
        count[s[v > 0]] += 1
        d = space.dist_row(int(x))
        near |= d < cover.r / 2
        if np.any(d[s[v > 0]] >= 2 * cover.r):
            bad.add("support")
        on_b = np.isin(s, b)
        if on_b.sum() != b.size or v[on_b].min() < 1.0 / cover.overlap_bound:
            bad.add("lower")
    if np.max(np.abs(total - 1.0)) > 1e-12:
        bad.add("sum")
    if count.max() > cover.overlap_bound:
        bad.add("overlap")
    if not near.all():
        bad.add("half-balls")
    if not cover.kappa <= cover.overlap_bound + 1:
        bad.add("lipschitz")
    return sorted(bad)


def cover_lipschitz(space, cover, chunk=256):
    """max_i max_{x in supp phi_i, y != x} |phi_i(x) - phi_i(y)| / d(x, y), by enumeration.

    With rho = distance from x_i to the nearest point off the support, every
    pair attaining the maximum has y in the closed ball B(x_i, 4r + rho), so the
    columns are restricted to that ball.
    """
    best = 0.0
    for x, s, v in zip(cover.centers, cover.support, cover.phi):
        d = space.dist_row(int(x))
        off = d >= 2 * cover.r
        rho = d[off].min() if off.any() else 0.0
        cols = np.flatnonzero(d <= 4 * cover.r + rho)
        full = np.zeros(space.n)
        full[s] = v
        fc = full[cols]
        for lo in range(0, s.size, chunk):
            D = space.dist_block(s[lo:lo + chunk], cols)
            D[D == 0] = np.inf
            best = max(best, float((np.abs(v[lo:lo + chunk, None] - fc[None, :]) / D).max()))
    return best
