"""
Linear forms attached to group elements, the represented set in a window,
the exceptional set, the smooth weight psi and the representation function.

For gamma = (a, b; c, d) the orbit of v under the stabilizer of infinity
gives the progression

    <v (1, J x; 0, 1) gamma, w> = A x + B,
    A = v1 (c w1 + d w2) J,   B = v1 (a w1 + b w2) + v2 (c w1 + d w2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .congruence import ObstructionReport, admissible_mask
from .errors import ConfigError, ElementaryGroupError, NumericError
from .matgroup import (
    Ball,
    GroupSpec,
    Mat2,
    _check_guard,
    _right_mul,
    ball_T,
    is_elementary,
    iter_ball_layers,
    linear_form_arrays,
    mat_mul,
    norm_sq,
    rows_norm_sq,
)

_CHUNK = 1_000_000


@dataclass(frozen=True, slots=True)
class LinearForm:
    A: int
    B: int
    source: Mat2

    def __call__(self, x: int) -> int:
        return self.A * x + self.B


def linear_form(gamma: Mat2, g: GroupSpec) -> LinearForm:
    (v1, v2), (w1, w2) = g.v, g.w
    lower = gamma.c * w1 + gamma.d * w2
    A = _check_guard("A", v1 * lower * g.J)
    B = _check_guard("B", v1 * (gamma.a * w1 + gamma.b * w2) + v2 * lower)
    return LinearForm(A, B, gamma)


def pair_value(g: GroupSpec, gamma: Mat2, x: int = 0) -> int:
    """<v (1, J x; 0, 1) gamma, w>, evaluated by explicit products."""
    u1 = g.v[0]
    u2 = g.v[0] * g.J * x + g.v[1]
    r1 = u1 * gamma.a + u2 * gamma.c
    r2 = u1 * gamma.b + u2 * gamma.d
    return r1 * g.w[0] + r2 * g.w[1]


def verify_witness(g: GroupSpec, n: int, gamma: Mat2, x: int) -> bool:
    return pair_value(g, gamma, x) == n


# -- normalizing v and w -------------------------------------------------------


def _short_words(g: GroupSpec, max_length: int) -> list[Mat2]:
    """Identity, then freely reduced words by length in generator order."""
    gens = g.symmetric_generators()
    inv = [gens.index(h.inverse()) if h.inverse() in gens else -1 for h in gens]
    out = [Mat2.identity()]
    layer = [(Mat2.identity(), -1)]
    for _ in range(max_length):
        nxt = []
        for x, last in layer:
            for k, h in enumerate(gens):
                if last >= 0 and inv[last] == k:
                    continue
                nxt.append((mat_mul(x, h), k))
        out.extend(x for x, _ in nxt)
        layer = nxt
    return out


def precompose_fix(g: GroupSpec, max_length: int = 4) -> GroupSpec:
    """Return an equivalent spec with v1 != 0 and w2 != 0.

    v is replaced by v gamma and w by gamma' w (w as a column), with gamma,
    gamma' the smallest-norm short words that work; ties go to the word found
    first.  The represented set is unchanged because gamma Lambda = Lambda.
    """
    if g.normalized:
        return g
    cands = sorted(_short_words(g, max_length), key=norm_sq)  # stable
    v, w = g.v, g.w
    if v[0] == 0:
        for x in cands:
            if v[0] * x.a + v[1] * x.c != 0:
                v = (v[0] * x.a + v[1] * x.c, v[0] * x.b + v[1] * x.d)
                break
        else:
            raise ElementaryGroupError(f"no word of length <= {max_length} moves v={g.v} off the axis")
    if w[1] == 0:
        for x in cands:
            if x.c * w[0] + x.d * w[1] != 0:
                w = (x.a * w[0] + x.b * w[1], x.c * w[0] + x.d * w[1])
                break
        else:
            raise ElementaryGroupError(f"no word of length <= {max_length} moves w={g.w} off the axis")
    return g.with_vectors(v, w)


def check_parabolic(g: GroupSpec, max_length: int = 3) -> None:
    """The progression fill needs (1, J; 0, 1) in the group."""
    target = Mat2(1, g.J, 0, 1)
    for x in _short_words(g, max_length):
        if x == target:
            return
    raise ConfigError(f"(1,{g.J};0,1) is not a word of length <= {max_length} in the generators")


def _require_nonelementary(g: GroupSpec) -> None:
    if is_elementary(g):
        raise ElementaryGroupError("the group is elementary")


# -- progression hits ------------------------------------------------------------


def progression_hits(A: np.ndarray, B: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    """All (i, n) with |n| <= N and n = A[i] x + B[i] for some integer x."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    step = np.abs(A)
    const = step == 0
    safe = np.where(const, 1, step)
    first = np.where(const, B, B + ((-N - B) // safe + ((-N - B) % safe != 0)) * safe)
    count = np.where(const, (np.abs(B) <= N).astype(np.int64), np.maximum(0, (N - first) // safe + 1))
    idx = np.repeat(np.arange(len(A)), count)
    offs = np.arange(int(count.sum())) - np.repeat(np.cumsum(count) - count, count)
    return idx, first[idx] + offs * step[idx]


# -- represented window ------------------------------------------------------------


@dataclass
class RepWindow:
    """Represented integers in [-N, N] found from the ball of radius T_used."""

    N: int
    represented: np.ndarray  # bool over -N..N
    T_used: float
    g: GroupSpec
    direct_and_progression: bool = True
    witness_rows: np.ndarray | None = field(default=None, repr=False)

    def __contains__(self, n: int) -> bool:
        return -self.N <= n <= self.N and bool(self.represented[n + self.N])

    def values(self) -> np.ndarray:
        return np.nonzero(self.represented)[0] - self.N

    def __len__(self) -> int:
        return int(self.represented.sum())

    def witness(self, n: int) -> tuple[Mat2, int] | None:
        """(gamma, x) with <v (1, J x; 0, 1) gamma, w> = n, or None if n is not marked."""
        if n not in self:
            return None
        if self.witness_rows is None:
            raise ConfigError("window was built without witnesses")
        gamma = Mat2(*self.witness_rows[n + self.N].tolist())
        f = linear_form(gamma, self.g)
        x = 0 if f.A == 0 else (n - f.B) // f.A
        return gamma, x


class _WitnessStore:
    def __init__(self, N: int):
        size = 2 * N + 1
        self.rows = np.zeros((size, 4), dtype=np.int64)
        self.key1 = np.full(size, np.iinfo(np.int64).max, dtype=np.int64)  # norm^2
        self.key2 = np.full(size, np.iinfo(np.int64).max, dtype=np.int64)  # |x|

    def offer(self, pos, rows, k1, k2):
        if not len(pos):
            return
        order = np.lexsort((k2, k1, pos))
        pos, rows, k1, k2 = pos[order], rows[order], k1[order], k2[order]
        first = np.ones(len(pos), dtype=bool)
        first[1:] = pos[1:] != pos[:-1]
        pos, rows, k1, k2 = pos[first], rows[first], k1[first], k2[first]
        better = (k1 < self.key1[pos]) | ((k1 == self.key1[pos]) & (k2 < self.key2[pos]))
        p = pos[better]
        self.rows[p] = rows[better]
        self.key1[p] = k1[better]
        self.key2[p] = k2[better]


def _mark_fast(rep: np.ndarray, A: np.ndarray, B: np.ndarray, N: int) -> None:
    """Set every n in [-N, N] lying on one of the progressions A x + B."""
    step = np.abs(A)
    const = step == 0
    cb = B[const]
    cb = cb[np.abs(cb) <= N]
    rep[cb + N] = True
    step, B = step[~const], B[~const]
    r = B % step
    big = step > 2 * N  # at most one point in the window
    for cand in (r[big], r[big] - step[big]):
        ok = (cand >= -N) & (cand <= N)
        rep[cand[ok] + N] = True
    small = ~big
    if not small.any():
        return
    pairs = np.unique(np.stack([step[small], r[small]], axis=1), axis=0)
    for a, s in pairs.tolist():
        start = s + ((-N - s) // a + ((-N - s) % a != 0)) * a
        if start <= N:
            rep[start + N :: a] = True


def _chunks(layers: Iterable[np.ndarray], size: int = _CHUNK) -> Iterator[np.ndarray]:
    buf, n = [], 0
    for layer in layers:
        if len(layer):
            buf.append(layer)
            n += len(layer)
        if n >= size:
            yield np.concatenate(buf)
            buf, n = [], 0
    if buf:
        yield np.concatenate(buf)


def _check_window(N: int):
    if int(N) != N or N < 0:
        raise ConfigError(f"window half-width must be a non-negative integer, got {N}")


def represent_sweep(
    g: GroupSpec,
    N: int,
    Ts: Sequence[float],
    *,
    witnesses: bool = False,
    workers: int = 1,
    max_elements: int | None = None,
) -> dict[float, RepWindow]:
    """Represented windows for several radii from one pass over the largest ball."""
    _check_window(N)
    N = int(N)
    Ts = sorted(float(t) for t in Ts)
    if not Ts:
        raise ConfigError("no radii given")
    check_parabolic(g)
    reps = {T: np.zeros(2 * N + 1, dtype=bool) for T in Ts}
    stores = {T: _WitnessStore(N) for T in Ts} if witnesses else {}
    kw = {"workers": workers}
    if max_elements is not None:
        kw["max_elements"] = max_elements
    for rows in _chunks(iter_ball_layers(g, Ts[-1], **kw)):
        ns = rows_norm_sq(rows)
        A, B = linear_form_arrays(rows, g)
        for T in Ts:
            sel = ns < T * T
            if not sel.any():
                continue
            if witnesses:
                i, n = progression_hits(A[sel], B[sel], N)
                Ai, Bi = A[sel][i], B[sel][i]
                absx = np.where(Ai == 0, 0, np.abs((n - Bi) // np.where(Ai == 0, 1, Ai)))
                reps[T][n + N] = True
                stores[T].offer(n + N, rows[sel][i], ns[sel][i], absx)
            else:
                _mark_fast(reps[T], A[sel], B[sel], N)
    return {
        T: RepWindow(N, reps[T], T, g, True, stores[T].rows if witnesses else None) for T in Ts
    }


def represent_set(g: GroupSpec, N: int, T: float, *, witnesses: bool = False, **kw) -> RepWindow:
    """Integers in [-N, N] of the form A_gamma x + B_gamma for gamma in the (unfiltered) ball."""
    return represent_sweep(g, N, [T], witnesses=witnesses, **kw)[float(T)]


def represent_set_oracle(g: GroupSpec, N: int, T: float, *, max_length: int = 10**7) -> RepWindow:
    """Independent path: freely reduced words pruned at norm prune_factor*T,
    each evaluated explicitly at every x whose value can land in [-N, N]."""
    _check_window(N)
    check_parabolic(g)
    N = int(N)
    gens = g.symmetric_generators()
    inv = np.array([gens.index(h.inverse()) if h.inverse() in gens else -1 for h in gens])
    stop2 = (g.effective_prune_factor * T) ** 2
    rep = np.zeros(2 * N + 1, dtype=bool)
    layer = np.array([[1, 0, 0, 1]], dtype=np.int64)
    last = np.array([-1])
    (v1, v2), (w1, w2) = g.v, g.w

    def mark(rows):
        rows = rows[rows_norm_sq(rows) < T * T]
        if not len(rows):
            return
        a, b, c, d = rows.T
        # the value is affine in x with slope s = v1 J (c w1 + d w2)
        s = v1 * g.J * (c * w1 + d * w2)
        base = (v1 * a + v2 * c) * w1 + (v1 * b + v2 * d) * w2
        xs, idx = _x_ranges(s, base, N)
        u1 = np.full(len(idx), v1)
        u2 = v1 * g.J * xs + v2
        vals = (u1 * a[idx] + u2 * c[idx]) * w1 + (u1 * b[idx] + u2 * d[idx]) * w2
        ok = np.abs(vals) <= N
        rep[vals[ok] + N] = True

    mark(layer)
    for _ in range(max_length):
        nm, nl = [], []
        for k, h in enumerate(gens):
            keep = last != inv[k]
            m = _right_mul(layer[keep], h)
            ok = rows_norm_sq(m) < stop2
            nm.append(m[ok])
            nl.append(np.full(int(ok.sum()), k))
        layer, last = np.concatenate(nm), np.concatenate(nl)
        if not len(layer):
            break
        mark(layer)
    return RepWindow(N, rep, float(T), g, True, None)


def _x_ranges(s, base, N):
    """All (x, row) with |s x + base| <= N; x = 0 alone when s = 0."""
    sign = np.where(s < 0, -1, 1)
    s, base = s * sign, base * sign
    safe = np.where(s == 0, 1, s)
    lo = np.where(s == 0, 0, -((N + base) // safe))
    hi = np.where(s == 0, np.where(np.abs(base) <= N, 0, -1), (N - base) // safe)
    counts = np.maximum(0, hi - lo + 1)
    idx = np.repeat(np.arange(len(s)), counts)
    offs = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    return lo[idx] + offs, idx


# -- exceptional set ------------------------------------------------------------------


def exceptional_from_window(window: RepWindow, report: ObstructionReport) -> list[int]:
    adm = admissible_mask(report, -window.N, window.N)
    return (np.nonzero(adm & ~window.represented)[0] - window.N).tolist()


def exceptional_sweep(
    g: GroupSpec, report: ObstructionReport, N: int, Ts: Sequence[float], **kw
) -> dict[float, list[int]]:
    """Exceptional lists for several radii from one pass over the largest ball."""
    _require_nonelementary(g)
    windows = represent_sweep(g, N, Ts, **kw)
    return {T: exceptional_from_window(w, report) for T, w in windows.items()}


def exceptional_set(g: GroupSpec, report: ObstructionReport, N: int, T: float, **kw) -> list[int]:
    """Admissible n in [-N, N] not found among the progressions of the radius-T ball."""
    return exceptional_sweep(g, report, N, [T], **kw)[float(T)]


def exceptional_csv(values: Sequence[int], g: GroupSpec, N: int, T: float, report: ObstructionReport) -> str:
    gens = ";".join(str(h) for h in g.generators)
    head = [
        f"# generators={gens} J={g.J} v={g.v[0]},{g.v[1]} w={g.w[0]},{g.w[1]}",
        f"# N={N} T={T:.17g} Z={report.Z} classes={';'.join(map(str, sorted(report.admissible_classes)))}",
        f"# search_bound=primes<={report.search_bound[0]},powers<={report.search_bound[1]}",
    ]
    return "\n".join(head + [str(v) for v in sorted(values)]) + "\n"


# -- smooth weight ----------------------------------------------------------------------

PSI_SUPPORT = (0.5, 2.5)
_PSI_SCALE = math.exp(4.0 / 3.0)
PSI_HAT_CUTOFF = 150.0  # |psi_hat| is below 1e-15 beyond this
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def psi_eval(u):
    """Smooth bump on (0.5, 2.5), at least 1 on [1, 2], peak e^{1/3} at 1.5."""
    u = np.asarray(u, dtype=float)
    s = u - 1.5
    inside = np.abs(s) < 1
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        val = _PSI_SCALE * np.exp(-1.0 / (1.0 - s * s))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _even_part_transform(y: np.ndarray, panels: int) -> np.ndarray:
    # int_{-1}^{1} psi0(s) cos(2 pi s y) ds with composite Gauss-Legendre
    edges = np.linspace(-1.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1] - edges[0])
    s = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    wts = np.tile(half * _GL_WEIGHTS, panels)
    f = psi_eval(s + 1.5) * wts
    return np.cos(2 * np.pi * np.outer(y, s)) @ f


def _real_hat(y: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    out = np.zeros_like(y)
    live = np.abs(y) <= PSI_HAT_CUTOFF
    if not live.any():
        return out
    yl = y[live]
    panels = max(8, int(np.ceil(np.abs(yl).max())) + 8)
    prev = _even_part_transform(yl, panels)
    for _ in range(6):
        panels *= 2
        cur = _even_part_transform(yl, panels)
        if np.all(np.abs(cur - prev) <= np.maximum(rtol * np.abs(cur), 1e-14)):
            out[live] = cur
            return out
        prev = cur
    raise NumericError("psi_hat quadrature did not converge")


def psi_hat(y):
    """Fourier transform int psi(u) e(-u y) du.  psi is symmetric about 1.5, so
    this is e(-1.5 y) times a real even function, computed by quadrature."""
    y = np.asarray(y, dtype=float)
    flat = y.ravel()
    real = _real_hat(np.abs(flat))
    out = (np.exp(-3j * np.pi * flat) * real).reshape(y.shape)
    return complex(out) if out.ndim == 0 else out


@dataclass
class SmoothWeight:
    """psi with memoized samples of its transform.

    ``tail_bound_exponent`` records that |psi_hat(y)| decays faster than any
    power of y; beyond ``cutoff`` it is treated as 0.
    """

    support: tuple[float, float] = PSI_SUPPORT
    cutoff: float = PSI_HAT_CUTOFF
    tail_bound_exponent: float = math.inf
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, u):
        return psi_eval(u)

    def hat(self, y: float) -> complex:
        key = float(y)
        if key not in self._cache:
            self._cache[key] = psi_hat(key)
        return self._cache[key]

    def hat_many(self, y) -> np.ndarray:
        return psi_hat(y)


# -- ensemble and representation function ----------------------------------------------------


@dataclass(frozen=True)
class Ensemble:
    """B_T together with the x-range and weights used by R_N."""

    g: GroupSpec
    ball: Ball
    X: float
    A: np.ndarray
    B: np.ndarray
    x: np.ndarray  # integers with psi(x/X) > 0
    weights: np.ndarray  # psi(x/X)

    @property
    def size(self) -> int:
        return len(self.ball)

    def value_grid(self) -> np.ndarray:
        """f_gamma(x) for every gamma (rows) and x (columns)."""
        return self.A[:, None] * self.x[None, :] + self.B[:, None]

    def representation_array(self) -> tuple[int, np.ndarray]:
        """(offset, R) with R[n - offset] = R_N(n) on the full range of values."""
        if self.size == 0 or len(self.x) == 0:
            return 0, np.zeros(1)
        vals = self.value_grid()
        lo = int(vals.min())
        R = np.zeros(int(vals.max()) - lo + 1)
        np.add.at(R, (vals - lo).ravel(), np.broadcast_to(self.weights, vals.shape).ravel())
        return lo, R


def x_support(X: float) -> tuple[np.ndarray, np.ndarray]:
    lo = math.floor(PSI_SUPPORT[0] * X) + 1
    hi = math.ceil(PSI_SUPPORT[1] * X) - 1
    x = np.arange(lo, hi + 1, dtype=np.int64)
    w = psi_eval(x / X)
    keep = w > 0
    return x[keep], w[keep]


def make_ensemble(g: GroupSpec, T: float, X: float, *, ball: Ball | None = None, **kw) -> Ensemble:
    if ball is None:
        ball = ball_T(g, T, **kw)
    if not ball.angular_filtered:
        raise ConfigError("the ensemble needs the angular-filtered ball B_T")
    A, B = linear_form_arrays(ball.elements, g)
    x, w = x_support(X)
    return Ensemble(g, ball, float(X), A, B, x, w)


def representation_function(ens: Ensemble, n) -> np.ndarray | float:
    """R_N(n) = sum over gamma in B_T and x of psi(x/X) [f_gamma(x) = n]."""
    n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
    if ens.size == 0:
        out = np.zeros(len(n_arr))
    else:
        lo, R = ens.representation_array()
        idx = n_arr - lo
        ok = (idx >= 0) & (idx < len(R))
        out = np.where(ok, R[np.clip(idx, 0, len(R) - 1)], 0.0)
    return float(out[0]) if np.ndim(n) == 0 else out
