"""
Finite quotients of the group modulo q, admissible residues, and discovery
of the modulus that carries every local obstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import factorint, primerange

from .errors import CapacityError, ConfigError, UnstablePrimeError
from .matgroup import GroupSpec, Mat2

DEFAULT_CAPACITY = 10**7
_DENSE_LIMIT = 2**16


@dataclass(frozen=True, slots=True)
class ModMat:
    a: int
    b: int
    c: int
    d: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise ConfigError(f"invalid modulus {self.q}")
        if (self.a * self.d - self.b * self.c - 1) % self.q:
            raise ConfigError(f"{self} has determinant != 1 mod {self.q}")

    def __mul__(self, other: "ModMat") -> "ModMat":
        return modmat_mul(self, other)

    def as_tuple(self):
        return (self.a, self.b, self.c, self.d)


def reduce_mod(x: Mat2, q: int) -> ModMat:
    if q < 1:
        raise ConfigError(f"invalid modulus {q}")
    return ModMat(x.a % q, x.b % q, x.c % q, x.d % q, q)


def modmat_mul(x: ModMat, y: ModMat) -> ModMat:
    if x.q != y.q:
        raise ConfigError(f"moduli differ: {x.q} vs {y.q}")
    q = x.q
    return ModMat(
        (x.a * y.a + x.b * y.c) % q,
        (x.a * y.b + x.b * y.d) % q,
        (x.c * y.a + x.d * y.c) % q,
        (x.c * y.b + x.d * y.d) % q,
        q,
    )


def sl2_order(q: int) -> int:
    """|SL(2, Z/qZ)| = q^3 prod_{p | q} (1 - p^-2)."""
    out = q**3
    for p in factorint(q):
        out = out // (p * p) * (p * p - 1)
    return out


# -- packed keys ---------------------------------------------------------------


def _encode(a, b, c, d, q):
    return ((a * q + b) * q + c) * q + d


def _decode(keys, q):
    d = keys % q
    keys = keys // q
    c = keys % q
    keys = keys // q
    return keys // q, keys % q, c, d


def _bfs_closure(start: np.ndarray, step, capacity: int, what: str) -> np.ndarray:
    """Closure of ``start`` under ``step`` (array of keys -> list of key arrays)."""
    seen = np.unique(start)
    frontier = seen
    while len(frontier):
        cand = np.unique(np.concatenate(step(frontier)))
        new = np.setdiff1d(cand, seen, assume_unique=True)
        if len(seen) + len(new) > capacity:
            raise CapacityError(f"{what} exceeds capacity {capacity}")
        seen = np.union1d(seen, new)
        frontier = new
    return seen


def _check_key_range(q: int, power: int):
    if q**power >= 2**62:
        raise CapacityError(f"modulus {q} too large for packed keys")


@lru_cache(maxsize=512)
def _closure_keys(generators: tuple[Mat2, ...], q: int, capacity: int) -> np.ndarray:
    _check_key_range(q, 4)
    if sl2_order(q) <= capacity:
        capacity = sl2_order(q)
    gens = [reduce_mod(g, q) for g in generators]

    def step(keys):
        a, b, c, d = _decode(keys, q)
        return [
            _encode((a * h.a + b * h.c) % q, (a * h.b + b * h.d) % q, (c * h.a + d * h.c) % q, (c * h.b + d * h.d) % q, q)
            for h in gens
        ]

    ident = np.array([_encode(1 % q, 0, 0, 1 % q, q)], dtype=np.int64)
    return _bfs_closure(ident, step, capacity, f"quotient mod {q}")


def subgroup_closure(g: GroupSpec, q: int, capacity: int = DEFAULT_CAPACITY) -> np.ndarray:
    """Image of the group in SL(2, Z/qZ), as sorted packed keys ((a q + b) q + c) q + d."""
    if q < 1:
        raise ConfigError(f"invalid modulus {q}")
    return _closure_keys(g.generators, q, capacity)


def quotient_elements(keys: np.ndarray, q: int) -> list[ModMat]:
    a, b, c, d = _decode(keys, q)
    return [ModMat(*t, q) for t in zip(a.tolist(), b.tolist(), c.tolist(), d.tolist())]


@dataclass(frozen=True)
class CongruenceTable:
    q: int
    quotient: np.ndarray  # packed keys
    value_counts: np.ndarray  # multiplicity of <v gamma0, w> mod q over the quotient
    full_quotient: bool

    @property
    def size(self) -> int:
        return len(self.quotient)

    @property
    def admissible(self) -> frozenset[int]:
        return frozenset(np.nonzero(self.value_counts)[0].tolist())

    def contains(self, n: int) -> bool:
        return bool(self.value_counts[n % self.q])

    def elements(self) -> list[ModMat]:
        return quotient_elements(self.quotient, self.q)


@lru_cache(maxsize=512)
def congruence_table(g: GroupSpec, q: int, capacity: int = DEFAULT_CAPACITY) -> CongruenceTable:
    keys = subgroup_closure(g, q, capacity)
    a, b, c, d = _decode(keys, q)
    (v1, v2), (w1, w2) = g.v, g.w
    vals = (v1 * (a * w1 + b * w2) + v2 * (c * w1 + d * w2)) % q
    counts = np.bincount(vals, minlength=q)
    return CongruenceTable(q, keys, counts, len(keys) == sl2_order(q))


# -- admissible residues -------------------------------------------------------


class ResidueSet:
    """Residues mod q; a bitmask below 2^16, a frozenset above.  Same interface either way."""

    def __init__(self, q: int, residues: Iterable[int]):
        self.q = q
        res = np.unique(np.asarray(list(residues), dtype=np.int64) % q) if q > 1 else np.zeros(1, np.int64)
        if q <= _DENSE_LIMIT:
            self._mask = np.zeros(q, dtype=bool)
            self._mask[res] = True
            self._set = None
        else:
            self._mask = None
            self._set = frozenset(res.tolist())

    def __contains__(self, n: int) -> bool:
        if self._mask is not None:
            return bool(self._mask[n % self.q])
        return (n % self.q) in self._set

    def __len__(self) -> int:
        return int(self._mask.sum()) if self._mask is not None else len(self._set)

    def __iter__(self):
        return iter(sorted(self.as_frozenset()))

    def as_frozenset(self) -> frozenset[int]:
        if self._mask is not None:
            return frozenset(np.nonzero(self._mask)[0].tolist())
        return self._set

    def __eq__(self, other) -> bool:
        if isinstance(other, ResidueSet):
            return self.q == other.q and self.as_frozenset() == other.as_frozenset()
        return self.as_frozenset() == frozenset(other)

    def __repr__(self):
        return f"ResidueSet(q={self.q}, {sorted(self.as_frozenset())})"


@lru_cache(maxsize=1024)
def _orbit_values(g: GroupSpec, q: int, capacity: int) -> frozenset[int]:
    # v * Lambda_q is the orbit of v under right multiplication; keys x*q + y
    _check_key_range(q, 2)
    gens = [reduce_mod(h, q) for h in g.generators]

    def step(keys):
        x, y = keys // q, keys % q
        return [((x * h.a + y * h.c) % q) * q + (x * h.b + y * h.d) % q for h in gens]

    start = np.array([(g.v[0] % q) * q + g.v[1] % q], dtype=np.int64)
    orbit = _bfs_closure(start, step, capacity, f"orbit of v mod {q}")
    x, y = orbit // q, orbit % q
    return frozenset(np.unique((x * g.w[0] + y * g.w[1]) % q).tolist())


def admissible_residues(g: GroupSpec, q: int, capacity: int = DEFAULT_CAPACITY) -> ResidueSet:
    """{<v gamma0, w> mod q : gamma0 in Lambda_q}, computed on the orbit v * Lambda_q."""
    if q < 1:
        raise ConfigError(f"invalid modulus {q}")
    if q == 1:
        return ResidueSet(1, [0])
    return ResidueSet(q, _orbit_values(g, q, capacity))


def _preimage(res: frozenset[int], q: int, p: int) -> frozenset[int]:
    return frozenset(r + i * q for r in res for i in range(p))


# -- the obstruction modulus ---------------------------------------------------


@dataclass(frozen=True)
class PrimeStability:
    prime: int
    k: int
    residues: frozenset[int]  # admissible residues mod prime**k
    levels_checked: int
    lifted_by_surjectivity: bool

    @property
    def power(self) -> int:
        return self.prime**self.k


@dataclass(frozen=True)
class ObstructionReport:
    Z: int
    admissible_classes: frozenset[int]
    density_c: Fraction
    search_bound: tuple[int, int]  # (prime_bound, power_bound)
    primes: tuple[PrimeStability, ...] = ()

    def to_csv(self) -> str:
        lines = ["prime,power,stabilized_k"]
        for ps in self.primes:
            lines.append(f"{ps.prime},{ps.power},{ps.k}")
        classes = ";".join(str(r) for r in sorted(self.admissible_classes))
        lines.append(f"Z,{self.Z},classes,{classes},c,{self.density_c.numerator}/{self.density_c.denominator}")
        return "\n".join(lines) + "\n"


def _stability_for_prime(g: GroupSpec, p: int, power_bound: int, capacity: int) -> PrimeStability:
    full_mod_p = congruence_table(g, p, capacity).full_quotient
    if full_mod_p and p >= 5:
        # a closed subgroup of SL2(Z_p) surjecting onto SL2(F_p), p >= 5, is everything
        return PrimeStability(p, 0, frozenset({0}), 1, True)
    levels = [frozenset({0})]
    for j in range(1, power_bound + 1):
        levels.append(admissible_residues(g, p**j, capacity).as_frozenset())
    lifts = [levels[j + 1] == _preimage(levels[j], p**j, p) for j in range(power_bound)]
    if not lifts[-1]:
        raise UnstablePrimeError(p, power_bound)
    k = power_bound - 1
    while k > 0 and lifts[k - 1]:
        k -= 1
    return PrimeStability(p, k, levels[k], power_bound, False)


def _crt_join(r1: frozenset[int], m1: int, r2: frozenset[int], m2: int) -> frozenset[int]:
    inv = pow(m1, -1, m2) if m2 > 1 else 0
    out = set()
    for a in r1:
        for b in r2:
            out.add(a + m1 * (((b - a) * inv) % m2))
    return frozenset(x % (m1 * m2) for x in out)


def discover_Z(
    g: GroupSpec,
    prime_bound: int = 50,
    power_bound: int = 4,
    capacity: int = DEFAULT_CAPACITY,
) -> ObstructionReport:
    """Find Z and the admissible classes mod Z, certified up to the search bounds.

    For each prime p <= prime_bound, k is the least exponent such that the
    admissible set mod p^(j+1) is the full preimage of the one mod p^j for
    every j from k up to power_bound - 1.
    """
    if prime_bound < 2 or power_bound < 1:
        raise ConfigError("prime_bound must be >= 2 and power_bound >= 1")
    Z, classes = 1, frozenset({0})
    records = []
    for p in primerange(2, prime_bound + 1):
        ps = _stability_for_prime(g, int(p), power_bound, capacity)
        records.append(ps)
        if ps.k:
            classes = _crt_join(classes, Z, ps.residues, ps.power)
            Z *= ps.power
    return ObstructionReport(
        Z, classes, Fraction(len(classes), Z), (prime_bound, power_bound), tuple(records)
    )


def is_admissible(report: ObstructionReport, n: int) -> bool:
    return (n % report.Z) in report.admissible_classes


def admissible_mask(report: ObstructionReport, lo: int, hi: int) -> np.ndarray:
    """Boolean array over lo..hi marking admissible integers."""
    n = np.arange(lo, hi + 1, dtype=np.int64)
    mask = np.zeros(report.Z, dtype=bool)
    mask[list(report.admissible_classes)] = True
    return mask[n % report.Z]


# -- bad modulus probe -----------------------------------------------------------


@dataclass(frozen=True)
class ProbeResult:
    q: int
    full_quotient: bool
    index: int


def bad_modulus_probe(g: GroupSpec, q_list: Sequence[int], capacity: int = DEFAULT_CAPACITY) -> list[ProbeResult]:
    out = []
    for q in q_list:
        size = len(subgroup_closure(g, q, capacity))
        order = sl2_order(q)
        out.append(ProbeResult(q, size == order, order // size))
    return out


def bad_modulus_candidate(results: Iterable[ProbeResult]) -> int:
    """lcm of the prime-power moduli at which the quotient is not full."""
    out = 1
    for r in results:
        if not r.full_quotient and r.q > 1 and len(factorint(r.q)) == 1:
            out = math.lcm(out, r.q)
    return out
