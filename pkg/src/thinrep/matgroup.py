"""
Exact integer arithmetic in SL(2, Z) and enumeration of norm balls in a
finitely generated subgroup.

Group elements are stored as int64 rows ``(a, b, c, d)`` when handled in
bulk, and as :class:`Mat2` when handled one at a time.  The matrix norm is
the Frobenius norm, kept squared so everything stays in exact integers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    ArithmeticOverflowError,
    CapacityError,
    ConfigError,
    InsufficientDataError,
    NotReducibleError,
)

OVERFLOW_GUARD = (2**63 - 1) // 8
# largest prune radius for which 4*R^2 and the row products fit in int64
_MAX_RADIUS = 10**9
DEFAULT_MAX_ELEMENTS = 20_000_000


def _check_guard(name: str, value: int) -> int:
    if abs(value) > OVERFLOW_GUARD:
        raise ArithmeticOverflowError(f"entry {name} = {value} exceeds the overflow guard {OVERFLOW_GUARD}")
    return value


@dataclass(frozen=True, slots=True)
class Mat2:
    """A 2x2 integer matrix of determinant one, ``(a, b; c, d)``."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for name in "abcd":
            value = int(getattr(self, name))
            object.__setattr__(self, name, _check_guard(name, value))
        if self.a * self.d - self.b * self.c != 1:
            raise ConfigError(f"matrix {self} has determinant {self.a * self.d - self.b * self.c}, expected 1")

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1, 0, 0, 1)

    @classmethod
    def parse(cls, text: str) -> "Mat2":
        try:
            a, b, c, d = (int(t) for t in text.split(","))
        except ValueError as exc:
            raise ConfigError(f"cannot parse matrix {text!r}; expected 'a,b,c,d'") from exc
        return cls(a, b, c, d)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def inverse(self) -> "Mat2":
        return Mat2(self.d, -self.b, -self.c, self.a)

    def norm_sq(self) -> int:
        return norm_sq(self)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __matmul__(self, other: "Mat2") -> "Mat2":
        return mat_mul(self, other)

    def __str__(self) -> str:
        return f"{self.a},{self.b},{self.c},{self.d}"


def mat_mul(x: Mat2, y: Mat2) -> Mat2:
    entries = {
        "a": x.a * y.a + x.b * y.c,
        "b": x.a * y.b + x.b * y.d,
        "c": x.c * y.a + x.d * y.c,
        "d": x.c * y.b + x.d * y.d,
    }
    for name, value in entries.items():
        _check_guard(name, value)
    return Mat2(**entries)


def norm_sq(x: Mat2) -> int:
    """Squared Frobenius norm a^2 + b^2 + c^2 + d^2."""
    return _check_guard("norm_sq", x.a * x.a + x.b * x.b + x.c * x.c + x.d * x.d)


def _as_mat(x) -> Mat2:
    return x if isinstance(x, Mat2) else Mat2(*x)


def _primitive(u: tuple[int, int]) -> bool:
    return math.gcd(u[0], u[1]) == 1


@dataclass(frozen=True)
class GroupSpec:
    """One problem instance: generators of the group, the parabolic step J
    (so that ``(1, J; 0, 1)`` generates the stabilizer of infinity), and the
    primitive vectors v, w.

    ``prune_factor=None`` means the default ``16 * max generator norm``.
    ``angular_divisor`` is the constant in the ball condition ``|A| >= T / divisor``.
    """

    generators: tuple[Mat2, ...]
    J: int = 1
    v: tuple[int, int] = (1, 0)
    w: tuple[int, int] = (0, 1)
    prune_factor: float | None = None
    angular_divisor: float = 100.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        gens = tuple(_as_mat(g) for g in self.generators)
        if not gens:
            raise ConfigError("generator list is empty")
        object.__setattr__(self, "generators", gens)
        v = tuple(int(t) for t in self.v)
        w = tuple(int(t) for t in self.w)
        if len(v) != 2 or len(w) != 2:
            raise ConfigError("v and w must be integer pairs")
        if not _primitive(v) or not _primitive(w):
            raise ConfigError(f"v={v} and w={w} must be primitive vectors")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)
        if int(self.J) != self.J or self.J <= 0:
            raise ConfigError(f"parabolic step J must be a positive integer, got {self.J}")
        object.__setattr__(self, "J", int(self.J))
        if self.prune_factor is not None and not self.prune_factor > 0:
            raise ConfigError("prune_factor must be positive")
        if not self.angular_divisor > 0:
            raise ConfigError("angular_divisor must be positive")

    @property
    def normalized(self) -> bool:
        """True when v1 != 0 and w2 != 0, the shape the linear forms need."""
        return self.v[0] != 0 and self.w[1] != 0

    @property
    def max_generator_norm(self) -> float:
        return max(math.sqrt(norm_sq(g)) for g in self.generators)

    @property
    def effective_prune_factor(self) -> float:
        if self.prune_factor is not None:
            return float(self.prune_factor)
        return 16.0 * self.max_generator_norm

    def symmetric_generators(self) -> tuple[Mat2, ...]:
        """Generators followed by their inverses, duplicates removed, order kept."""
        out: list[Mat2] = []
        for g in list(self.generators) + [g.inverse() for g in self.generators]:
            if g not in out:
                out.append(g)
        return tuple(out)

    def with_vectors(self, v=None, w=None) -> "GroupSpec":
        return GroupSpec(
            self.generators,
            self.J,
            self.v if v is None else v,
            self.w if w is None else w,
            self.prune_factor,
            self.angular_divisor,
            self.name,
        )


# -- bulk row arithmetic ----------------------------------------------------


def _right_mul(rows: np.ndarray, g: Mat2) -> np.ndarray:
    a, b, c, d = rows.T
    return np.stack(
        [a * g.a + b * g.c, a * g.b + b * g.d, c * g.a + d * g.c, c * g.b + d * g.d],
        axis=1,
    )


def rows_norm_sq(rows: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", rows, rows)


def _lexsort_rows(rows: np.ndarray, *extra) -> np.ndarray:
    return np.lexsort(tuple(extra) + (rows[:, 3], rows[:, 2], rows[:, 1], rows[:, 0]))


def unique_rows(rows: np.ndarray) -> np.ndarray:
    """Distinct rows, sorted lexicographically by (a, b, c, d)."""
    if len(rows) == 0:
        return rows.reshape(0, 4)
    s = rows[_lexsort_rows(rows)]
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = np.any(s[1:] != s[:-1], axis=1)
    return s[keep]


def _drop_known(cand: np.ndarray, known: Sequence[np.ndarray]) -> np.ndarray:
    """Rows of ``cand`` (already unique) not present in any array of ``known``."""
    known = [k for k in known if len(k)]
    if not known or not len(cand):
        return cand
    old = np.concatenate(known)
    allrows = np.concatenate([old, cand])
    tags = np.concatenate([np.zeros(len(old), np.int8), np.ones(len(cand), np.int8)])
    order = _lexsort_rows(allrows, tags)
    s, t = allrows[order], tags[order]
    repeat = np.zeros(len(s), dtype=bool)
    repeat[1:] = np.all(s[1:] == s[:-1], axis=1)
    return s[(t == 1) & ~repeat]


def _sorted_rows(rows: np.ndarray) -> np.ndarray:
    if len(rows) == 0:
        return rows.reshape(0, 4)
    return rows[_lexsort_rows(rows)]


# -- balls ------------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """A finite set of group elements of norm below T, rows sorted by (a,b,c,d)."""

    T: float
    elements: np.ndarray
    angular_filtered: bool = False

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Mat2]:
        for row in self.elements.tolist():
            yield Mat2(*row)

    def __contains__(self, x) -> bool:
        t = _as_mat(x).as_tuple()
        return t in self.as_set()

    def as_set(self) -> set[tuple[int, int, int, int]]:
        return {tuple(r) for r in self.elements.tolist()}

    def norms_sq(self) -> np.ndarray:
        return rows_norm_sq(self.elements)


def iter_ball_layers(
    g: GroupSpec,
    T: float,
    *,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    workers: int = 1,
) -> Iterator[np.ndarray]:
    """Breadth-first search of the Cayley graph restricted to norm <= prune_factor*T.

    Yields, layer by layer, the newly found elements of norm < T.  Every
    element is yielded exactly once.  Since the generating set is symmetric,
    neighbours of layer k lie in layers k-1, k, k+1, so only the two most
    recent layers are kept for deduplication.
    """
    if not T > 0:
        raise ConfigError(f"ball radius must be positive, got T={T}")
    radius = g.effective_prune_factor * T
    if radius > _MAX_RADIUS:
        raise ArithmeticOverflowError(
            f"prune radius {radius:.3g} exceeds the exact int64 range ({_MAX_RADIUS})"
        )
    gens = g.symmetric_generators()
    gmax = max(max(abs(e) for e in h.as_tuple()) for h in gens)
    if 2 * radius * gmax > OVERFLOW_GUARD:
        raise ArithmeticOverflowError("generator entries too large for the prune radius")
    r2 = radius * radius
    t2 = T * T

    prev = np.empty((0, 4), dtype=np.int64)
    cur = np.array([[1, 0, 0, 1]], dtype=np.int64)
    visited = 1
    yield cur[rows_norm_sq(cur) < t2]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while len(cur):
            if pool is None:
                cands = [_right_mul(cur, h) for h in gens]
            else:
                chunks = np.array_split(cur, workers)
                cands = list(pool.map(lambda ch_h: _right_mul(*ch_h), [(ch, h) for h in gens for ch in chunks]))
            cand = np.concatenate(cands)
            cand = cand[rows_norm_sq(cand) <= r2]
            new = _drop_known(unique_rows(cand), [prev, cur])
            visited += len(new)
            if visited > max_elements:
                raise CapacityError(
                    f"ball search visited more than {max_elements} elements (T={T}, radius={radius:.4g})"
                )
            yield new[rows_norm_sq(new) < t2]
            prev, cur = cur, new
    finally:
        if pool is not None:
            pool.shutdown()


def enumerate_ball(
    g: GroupSpec,
    T: float,
    *,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    workers: int = 1,
) -> Ball:
    """All group elements with ``||gamma|| < T`` reachable by the pruned search."""
    layers = list(iter_ball_layers(g, T, max_elements=max_elements, workers=workers))
    return Ball(float(T), _sorted_rows(np.concatenate(layers)), False)


def linear_form_arrays(rows: np.ndarray, g: GroupSpec) -> tuple[np.ndarray, np.ndarray]:
    """Progression step A and offset B for every row (vectorized linear forms)."""
    (v1, v2), (w1, w2) = g.v, g.w
    a, b, c, d = rows.T
    lower = c * w1 + d * w2
    A = v1 * lower * g.J
    B = v1 * (a * w1 + b * w2) + v2 * lower
    return A, B


def filter_angular(ball: Ball, g: GroupSpec) -> Ball:
    """Keep the elements with ``|A_gamma| >= T / angular_divisor``."""
    if ball.angular_filtered:
        raise ConfigError("ball is already angular-filtered")
    if len(ball) == 0:
        return Ball(ball.T, ball.elements, True)
    A, _ = linear_form_arrays(ball.elements, g)
    keep = np.abs(A) * g.angular_divisor >= ball.T
    return Ball(ball.T, ball.elements[keep], True)


def ball_T(g: GroupSpec, T: float, **kw) -> Ball:
    """The circle-method ensemble B_T: norm ball plus the angular condition."""
    return filter_angular(enumerate_ball(g, T, **kw), g)


# -- oracle -----------------------------------------------------------------


def word_ball_oracle(
    g: GroupSpec,
    T: float,
    *,
    stop_factor: float | None = None,
    max_length: int = 20,
    max_words: int = 60_000_000,
) -> Ball:
    """Brute-force ball: evaluate every freely reduced word, length by length.

    No norm pruning is applied inside a length.  Enumeration stops after the
    first length at which every word has norm at least ``stop_factor * T``
    (default: the group's prune factor), or at ``max_length``.
    """
    gens = g.symmetric_generators()
    inv_index = [gens.index(h.inverse()) if h.inverse() in gens else -1 for h in gens]
    stop = (g.effective_prune_factor if stop_factor is None else stop_factor) * T
    t2, s2 = T * T, stop * stop
    layer = np.array([[1, 0, 0, 1]], dtype=np.int64)
    found = [layer[rows_norm_sq(layer) < t2]]
    last = np.array([-1])
    total = 1
    for _ in range(max_length):
        rows, letters = [], []
        for k, h in enumerate(gens):
            keep = last != inv_index[k]
            if not keep.any():
                continue
            rows.append(_right_mul(layer[keep], h))
            letters.append(np.full(int(keep.sum()), k))
        layer = np.concatenate(rows)
        last = np.concatenate(letters)
        total += len(layer)
        if total > max_words:
            raise CapacityError(f"word oracle exceeded {max_words} words")
        ns = rows_norm_sq(layer)
        found.append(layer[ns < t2])
        if ns.min() >= s2:
            break
    return Ball(float(T), unique_rows(np.concatenate(found)), False)


# -- growth -----------------------------------------------------------------


@dataclass(frozen=True)
class DeltaEstimate:
    samples: tuple[tuple[float, int], ...]
    slope: float
    delta_hat: float
    residual: float


def estimate_delta(g: GroupSpec, T_samples: Sequence[float], **kw) -> DeltaEstimate:
    """Least-squares fit of log #{||gamma|| < T} against log T; delta is half the slope."""
    Ts = [float(t) for t in T_samples]
    if len(Ts) < 3:
        raise InsufficientDataError("need at least 3 radius samples")
    if any(b <= a for a, b in zip(Ts, Ts[1:])):
        raise ConfigError("radius samples must be strictly increasing")
    ns = np.sort(enumerate_ball(g, Ts[-1], **kw).norms_sq())
    counts = [int(np.searchsorted(ns, t * t, side="left")) for t in Ts]
    if min(counts) == 0:
        raise InsufficientDataError(f"empty ball at some sample radius: {list(zip(Ts, counts))}")
    x, y = np.log(Ts), np.log(counts)
    (slope, icept), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return DeltaEstimate(tuple(zip(Ts, counts)), float(slope), float(slope) / 2, resid)


# -- elementary test ----------------------------------------------------------


def _fixed_form(x: Mat2) -> tuple[int, int, int]:
    # fixed points of z -> (az+b)/(cz+d) are the roots of c z^2 + (d-a) z - b
    return (x.c, x.d - x.a, -x.b)


def _share_fixed_point(f, h) -> bool:
    (a1, b1, c1), (a2, b2, c2) = f, h
    res = (a1 * c2 - a2 * c1) ** 2 - (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1)
    return res == 0


def is_elementary(g: GroupSpec, word_length: int = 3) -> bool:
    """Heuristic: non-elementary iff two short non-elliptic words have no common fixed point."""
    words = [Mat2.identity()]
    frontier = [Mat2.identity()]
    for _ in range(word_length):
        frontier = [mat_mul(x, h) for x in frontier for h in g.symmetric_generators()]
        words.extend(frontier)
    loxo = []
    seen = set()
    for x in words:
        if abs(x.trace) >= 2 and x.as_tuple() not in {(1, 0, 0, 1), (-1, 0, 0, -1)}:
            if x.as_tuple() not in seen:
                seen.add(x.as_tuple())
                loxo.append(_fixed_form(x))
    for i, f in enumerate(loxo):
        for h in loxo[i + 1:]:
            if not _share_fixed_point(f, h):
                return False
    return True


# -- words in Gamma(2) ----------------------------------------------------------

GAMMA2_A = Mat2(1, 2, 0, 1)
GAMMA2_B = Mat2(1, 0, 2, 1)


def in_gamma2(x: Mat2) -> bool:
    return x.a % 2 == 1 and x.d % 2 == 1 and x.b % 2 == 0 and x.c % 2 == 0


def _power(x: Mat2, k: int) -> Mat2:
    out, base = Mat2.identity(), (x if k >= 0 else x.inverse())
    for _ in range(abs(k)):
        out = mat_mul(out, base)
    return out


def primitive_reduce(x: Mat2) -> tuple[Mat2, int, int]:
    """Return ``(A^m x B^n, m, n)`` with |b|, |c| < |d| and d unchanged.

    A = (1,2;0,1) acts on the left (shifts b by 2md), B = (1,0;2,1) on the
    right (shifts c by 2nd).  Parity in Gamma(2) makes both shifts unique.
    """
    x = _as_mat(x)
    if x.d == 0:
        raise NotReducibleError("d = 0: no primitive representative")
    if not in_gamma2(x):
        raise NotReducibleError(f"{x} is not in Gamma(2)")
    d = x.d
    # unique m with |b + 2 m d| < |d|; b even, d odd so b/(2d) is never a half-integer
    m = -((x.b + d) // (2 * d))
    n = -((x.c + d) // (2 * d))
    reduced = Mat2(x.a + 2 * m * x.c + 2 * n * (x.b + 2 * m * d), x.b + 2 * m * d, x.c + 2 * n * d, d)
    return reduced, m, n


def word_to_matrix(word: Iterable[int]) -> Mat2:
    """Product of a word over {A, B}: letters +-1 for A^{+-1}, +-2 for B^{+-1}."""
    out = Mat2.identity()
    for letter in word:
        base = {1: GAMMA2_A, 2: GAMMA2_B}.get(abs(letter))
        if base is None:
            raise ConfigError(f"letter {letter} is not one of +-1, +-2")
        out = mat_mul(out, base if letter > 0 else base.inverse())
    return out


def word_exponent_test(word: Iterable[int]) -> bool:
    """True iff the A-exponent sum and the B-exponent sum both vanish."""
    sums = {1: 0, 2: 0}
    for letter in word:
        if abs(letter) not in sums:
            raise ConfigError(f"letter {letter} is not one of +-1, +-2")
        sums[abs(letter)] += 1 if letter > 0 else -1
    return sums[1] == 0 and sums[2] == 0


def gamma0_filter(rows: np.ndarray, P: int) -> np.ndarray:
    """Rows lying in Gamma_0(P), i.e. with c = 0 mod P."""
    return rows[rows[:, 2] % P == 0]
