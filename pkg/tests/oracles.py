"""Independent brute-force oracles.  Nothing here reuses the package's fast paths."""
from __future__ import annotations

import cmath
import math
from itertools import product

import numpy as np


def mat(a, b, c, d):
    return (a, b, c, d)


def mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def inv(x):
    a, b, c, d = x
    return (d, -b, -c, a)


def sl2_mod(q):
    """Every element of SL(2, Z/qZ) by exhaustive search."""
    return [
        (a, b, c, d)
        for a, b, c, d in product(range(q), repeat=4)
        if (a * d - b * c - 1) % q == 0
    ]


def quotient_by_closure(gens, q):
    """Image of <gens> mod q by plain set-based breadth-first search."""
    gens = [tuple(x % q for x in g) for g in gens]
    ident = (1 % q, 0, 0, 1 % q)
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(t % q for t in mul(x, g))
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def pairing(v, gamma, w, x=0, J=1):
    """<v (1, J x; 0, 1) gamma, w> with plain integer arithmetic."""
    u = (v[0], v[0] * J * x + v[1])
    a, b, c, d = gamma
    r = (u[0] * a + u[1] * c, u[0] * b + u[1] * d)
    return r[0] * w[0] + r[1] * w[1]


def reduced_words(gens, max_length):
    """All freely reduced words up to max_length, as matrices (with repeats if not free)."""
    sym = list(gens) + [inv(g) for g in gens]
    k = len(gens)
    out = [(1, 0, 0, 1)]
    layer = [((1, 0, 0, 1), -1)]
    for _ in range(max_length):
        nxt = []
        for x, last in layer:
            for i, g in enumerate(sym):
                if last >= 0 and (i == last + k or i == last - k):
                    continue
                nxt.append((mul(x, g), i))
        out.extend(x for x, _ in nxt)
        layer = nxt
    return out


def naive_ramanujan(q, n):
    s = sum(cmath.exp(2j * math.pi * a * n / q) for a in range(q) if math.gcd(a, q) == 1)
    return round(s.real)


def naive_representation(A, B, X, psi, n_values):
    """Double loop over gamma and x of psi(x/X) [A x + B = n]."""
    lo, hi = math.floor(0.5 * X), math.ceil(2.5 * X)
    out = {}
    for n in n_values:
        total = 0.0
        for a, b in zip(A, B):
            for x in range(lo, hi + 1):
                if a * x + b == n:
                    total += float(psi(x / X))
        out[n] = total
    return out


def dft(R, lo, theta):
    k = np.arange(len(R)) + lo
    return np.array([np.sum(R * np.exp(2j * np.pi * k * t)) for t in np.atleast_1d(theta)])


def lubotzky_bottom_row_member(c, d, max_steps=10_000):
    """Is (c, d) the bottom row of some element of <(1,3;0,1), (1,0;3,1)>?

    Right multiplication by (1,3k;0,1) sends (c, d) to (c, d + 3kc) and by
    (1,0;3k,1) to (c + 3kd, d).  In this Schottky group the larger entry of
    a non-trivial bottom row can always be shrunk, so the greedy descent
    terminates at (0, 1) exactly for orbit members.
    """
    if math.gcd(c, d) != 1:
        return False
    for _ in range(max_steps):
        if c == 0:
            return d == 1
        if d == 0:
            return False
        if abs(d) > abs(c):
            k = round(d / (3 * c))
            nd = d - 3 * k * c
            if abs(nd) >= abs(d):
                return False
            d = nd
        else:
            k = round(c / (3 * d))
            nc = c - 3 * k * d
            if abs(nc) >= abs(c):
                return False
            c = nc
    raise RuntimeError("descent did not terminate")


def pruned_word_ball(gens, T):
    """Elements of norm < T reached by freely reduced words whose every prefix has norm < T."""
    sym = list(gens) + [inv(g) for g in gens]
    k = len(gens)
    t2 = T * T
    ident = (1, 0, 0, 1)
    out = {ident} if 2 < t2 else set()
    layer = [(ident, -1)]
    while layer:
        nxt = []
        for x, last in layer:
            for i, g in enumerate(sym):
                if last >= 0 and (i == last + k or i == last - k):
                    continue
                y = mul(x, g)
                if sum(t * t for t in y) < t2:
                    out.add(y)
                    nxt.append((y, i))
        layer = nxt
    return out
