"""
Circle-method numerics for the representation function R_N: tent and spike
functions, Ramanujan sums, the truncated singular series, main and error
terms, the Poisson form of R_N-hat near rationals, minor-arc integrals, and
the exponent algebra that picks N, T, X, M, Q0, K0.

Fourier convention: e(t) = exp(2 pi i t) and f-hat(y) = int f(u) e(-u y) du.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.signal import fftconvolve
from sympy import divisors, mobius, totient

from .congruence import DEFAULT_CAPACITY, congruence_table
from .errors import ConfigError, InfeasibleParametersError, NumericError, ResolutionError
from .matgroup import GroupSpec, ball_T, linear_form_arrays
from .represent import Ensemble, make_ensemble, psi_hat

# -- parameter algebra -----------------------------------------------------------

CONSTRAINTS = (
    "Q0^5*K0 <= T^(2delta/7-5/21)",
    "K0 <= T^(3delta/2-3/4)",
    "Q0^2 <= K0",
    "Q0 >= T^(4-4delta)",
)


def as_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(repr(float(x)))


def k0_exponent(delta) -> Fraction:
    return Fraction(4, 49) * as_fraction(delta) - Fraction(10, 147)


def q0_exponent(delta, eps1) -> Fraction:
    return Fraction(2, 49) * as_fraction(delta) - Fraction(5, 147) - as_fraction(eps1)


def constraint_slacks(delta, eps1, q_exp=None, k_exp=None) -> dict[str, Fraction]:
    """Slack of each constraint as an exponent of T; negative means violated."""
    d = as_fraction(delta)
    rho = q0_exponent(d, eps1) if q_exp is None else as_fraction(q_exp)
    kappa = k0_exponent(d) if k_exp is None else as_fraction(k_exp)
    return {
        CONSTRAINTS[0]: Fraction(2, 7) * d - Fraction(5, 21) - (5 * rho + kappa),
        CONSTRAINTS[1]: Fraction(3, 2) * d - Fraction(3, 4) - kappa,
        CONSTRAINTS[2]: kappa - 2 * rho,
        CONSTRAINTS[3]: rho - (4 - 4 * d),
    }


def violated_constraints(delta, eps1) -> list[str]:
    return [name for name, s in constraint_slacks(delta, eps1).items() if s < 0]


def delta_boundary(constraint: str = CONSTRAINTS[3], eps1=0) -> Fraction:
    """The delta at which a constraint's slack vanishes under the default K0, Q0 choice."""
    if constraint not in CONSTRAINTS:
        raise ConfigError(f"unknown constraint {constraint!r}")
    s0 = constraint_slacks(0, eps1)[constraint]
    s1 = constraint_slacks(1, eps1)[constraint] - s0
    if s1 == 0:
        raise ConfigError(f"slack of {constraint!r} does not depend on delta")
    return -s0 / s1


@dataclass(frozen=True)
class CircleParams:
    N: float
    T: float
    X: float
    M: float
    Q0: float
    K0: float
    eps0: Fraction
    eps1: Fraction
    delta: Fraction
    T_exponent: Fraction
    q0_exponent: Fraction
    k0_exponent: Fraction
    slacks: dict = field(default_factory=dict, compare=False)
    overridden: tuple[str, ...] = ()

    def summary(self) -> list[tuple[str, str]]:
        rows = [
            ("N", f"{self.N:.17g}"),
            ("T", f"{self.T:.17g}"),
            ("X", f"{self.X:.17g}"),
            ("M", f"{self.M:.17g}"),
            ("Q0", f"{self.Q0:.17g}"),
            ("K0", f"{self.K0:.17g}"),
            ("delta", str(self.delta)),
            ("eps0", str(self.eps0)),
            ("eps1", str(self.eps1)),
            ("T_exponent", str(self.T_exponent)),
            ("Q0_exponent", str(self.q0_exponent)),
            ("K0_exponent", str(self.k0_exponent)),
        ]
        rows += [(f"slack[{k}]", str(v)) for k, v in self.slacks.items()]
        if self.overridden:
            rows.append(("overridden", ";".join(self.overridden)))
            rows.append(("Q0_exponent_actual", f"{math.log(self.Q0) / math.log(self.T):.17g}"))
            rows.append(("K0_exponent_actual", f"{math.log(self.K0) / math.log(self.T):.17g}"))
        return rows


def choose_parameters(
    N: float,
    delta=1,
    eps0=Fraction(1, 1000),
    eps1=Fraction(1, 1000),
    T_exponent=Fraction(1, 2),
    *,
    Q0: float | None = None,
    K0: float | None = None,
) -> CircleParams:
    """T = N^alpha, X = N/T, M = T^(1+eps0), and the default K0, Q0 powers of T.

    The four constraints are checked on exact rational exponents.  Explicit
    ``Q0``/``K0`` overrides skip that check (they are for fixture-scale
    experiments) and are recorded in ``overridden``.
    """
    d, e0, e1, alpha = (as_fraction(t) for t in (delta, eps0, eps1, T_exponent))
    if not (Fraction(5, 6) < d <= 1):
        raise ConfigError(f"delta must lie in (5/6, 1], got {d}")
    if not (0 < alpha <= Fraction(1, 2)):
        raise ConfigError(f"T exponent must lie in (0, 1/2], got {alpha}")
    if e0 <= 0 or e1 < 0:
        raise ConfigError("eps0 must be positive and eps1 non-negative")
    if not N > 1:
        raise ConfigError(f"N must exceed 1, got {N}")
    slacks = constraint_slacks(d, e1)
    bad = [k for k, s in slacks.items() if s < 0]
    overridden = tuple(name for name, val in (("Q0", Q0), ("K0", K0)) if val is not None)
    if bad and not overridden:
        raise InfeasibleParametersError(bad)
    T = float(N) ** float(alpha)
    rho, kappa = q0_exponent(d, e1), k0_exponent(d)
    q0 = T ** float(rho) if Q0 is None else float(Q0)
    k0 = T ** float(kappa) if K0 is None else float(K0)
    if q0 <= 0 or k0 <= 0:
        raise ConfigError("Q0 and K0 must be positive")
    return CircleParams(
        float(N), T, float(N) / T, T ** float(1 + e0), q0, k0, e0, e1, d, alpha, rho, kappa, slacks, overridden
    )


# -- tent, spike, Ramanujan sums ------------------------------------------------------


def hat_t(x):
    x = np.asarray(x, dtype=float)
    out = np.maximum(0.0, 1.0 - np.abs(x))
    return float(out) if out.ndim == 0 else out


def hat_t_fourier(y):
    """(sin(pi y) / (pi y))^2, equal to 1 at y = 0."""
    y = np.asarray(y, dtype=float)
    out = np.sinc(y) ** 2
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def farey_fractions(Q: int) -> tuple[tuple[int, int], ...]:
    """All (a, q) with 1 <= q <= Q, 0 <= a < q, gcd(a, q) = 1."""
    return tuple((a, q) for q in range(1, Q + 1) for a in range(q) if math.gcd(a, q) == 1)


def spike(theta, p: CircleParams):
    """Sum of tents of half-width K0/N at every a/q, q <= Q0, with all integer shifts."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    width = p.K0 / p.N
    # after reducing to [-1/2, 1/2] only the nearest shift can reach a tent narrower than 1/2
    reach = 0 if width < 0.5 else int(math.ceil(width)) + 1
    out = np.zeros_like(th)
    for a, q in farey_fractions(int(math.floor(p.Q0))):
        base = th - a / q
        base = base - np.round(base)
        for m in range(-reach, reach + 1):
            out += hat_t((base + m) / width)
    return float(out[0]) if np.ndim(theta) == 0 else out


@lru_cache(maxsize=None)
def ramanujan_sum(q: int, n: int) -> int:
    """c_q(n) = sum over d | gcd(q, n) of d mu(q/d)."""
    if q < 1:
        raise ConfigError(f"modulus must be positive, got {q}")
    return int(sum(d * mobius(q // d) for d in divisors(math.gcd(q, n))))


def ramanujan_row(q: int) -> np.ndarray:
    """c_q(k) for k = 0..q-1."""
    return np.array([ramanujan_sum(q, k) for k in range(q)], dtype=np.int64)


def euler_phi(q: int) -> int:
    return int(totient(q))


# -- singular series ----------------------------------------------------------------


@dataclass(frozen=True)
class SingularSeries:
    """Truncated singular series n -> sum over q <= Q0 of the q-th local term.

    The q-th term is (1/#Lambda_q) sum_a sum_{gamma0} e((<v gamma0, w> - n) a/q),
    with a over units mod q when ``coprime`` (Ramanujan sums), else over all
    residues.
    """

    g: GroupSpec
    Q0: float
    coprime: bool = True
    capacity: int = DEFAULT_CAPACITY

    @property
    def moduli(self) -> range:
        return range(1, int(math.floor(self.Q0)) + 1)

    def local_terms(self, q: int) -> np.ndarray:
        """Exact q-th term for every residue class of n mod q, as floats."""
        return _local_terms(self.g, q, self.coprime, self.capacity)

    def __call__(self, n):
        n_arr = np.atleast_1d(np.asarray(n, dtype=np.int64))
        out = np.zeros(len(n_arr))
        for q in self.moduli:
            out += self.local_terms(q)[n_arr % q]
        return float(out[0]) if np.ndim(n) == 0 else out

    def exact(self, n: int) -> Fraction:
        total = Fraction(0)
        for q in self.moduli:
            t = congruence_table(self.g, q, self.capacity)
            kern = ramanujan_row(q) if self.coprime else q * (np.arange(q) == 0)
            num = sum(int(t.value_counts[r]) * int(kern[(r - n) % q]) for r in range(q))
            total += Fraction(num, t.size)
        return total


@lru_cache(maxsize=4096)
def _local_terms(g: GroupSpec, q: int, coprime: bool, capacity: int) -> np.ndarray:
    t = congruence_table(g, q, capacity)
    kern = ramanujan_row(q) if coprime else q * (np.arange(q) == 0).astype(np.int64)
    # term(n) = sum_r P(r) kern(r - n)
    idx = (np.arange(q)[None, :] - np.arange(q)[:, None]) % q  # [n, r] -> r - n
    num = (kern[idx] * t.value_counts[None, :]).sum(axis=1)
    return num / t.size


def singular_series(g: GroupSpec, n, Q0: float, *, coprime: bool = True, capacity: int = DEFAULT_CAPACITY):
    return SingularSeries(g, Q0, coprime, capacity)(n)


def singular_series_bruteforce(g: GroupSpec, n: int, Q0: float, *, coprime: bool = True) -> complex:
    """Direct exponential sums over the quotient; used as a cross-check."""
    total = 0j
    for q in range(1, int(math.floor(Q0)) + 1):
        t = congruence_table(g, q)
        els = t.elements()
        vals = np.array([g.v[0] * (x.a * g.w[0] + x.b * g.w[1]) + g.v[1] * (x.c * g.w[0] + x.d * g.w[1]) for x in els])
        a_range = [a for a in range(q) if math.gcd(a, q) == 1] if coprime else range(q)
        s = 0j
        for a in a_range:
            s += np.exp(2j * np.pi * (vals - n) * a / q).sum()
        total += s / len(els)
    return total


# -- the ensemble on a parameter set ------------------------------------------------------


def circle_ensemble(g: GroupSpec, p: CircleParams, **kw) -> Ensemble:
    return make_ensemble(g, p.T, p.X, **kw)


def rhat(ens: Ensemble, theta):
    """R_N-hat(theta) = sum over gamma, x of psi(x/X) e(f_gamma(x) theta), directly."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros(len(th), dtype=complex)
    if ens.size and len(ens.x):
        vals = ens.value_grid().ravel().astype(float)
        wts = np.broadcast_to(ens.weights, (ens.size, len(ens.x))).ravel()
        step = max(1, 2_000_000 // max(1, len(vals)))
        for i in range(0, len(th), step):
            ph = np.exp(2j * np.pi * np.outer(th[i : i + step], vals))
            out[i : i + step] = ph @ wts
    return complex(out[0]) if np.ndim(theta) == 0 else out


def rhat_grid(ens: Ensemble, G: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(theta_j, R_N-hat(theta_j)) at theta_j = j/G via one FFT of the R_N array."""
    lo, R = ens.representation_array()
    if G is None:
        G = 8 * len(R)
    if G < len(R):
        raise ResolutionError(f"grid of {G} points aliases a spectrum of length {len(R)}")
    # e(n j / G) only depends on n mod G, so place R(n) at index n mod G
    shifted = np.roll(np.concatenate([R, np.zeros(G - len(R))]), lo % G)
    return np.arange(G) / G, G * np.fft.ifft(shifted)


def parseval(ens: Ensemble, G: int | None = None) -> tuple[float, float]:
    """(sum of R_N(n)^2, grid quadrature of |R_N-hat|^2 over [0, 1])."""
    _, R = ens.representation_array()
    _, vals = rhat_grid(ens, G)
    return float(np.dot(R, R)), float(np.mean(np.abs(vals) ** 2))


# -- Poisson form near a rational ------------------------------------------------------------


def poisson_formula(ens: Ensemble, a: int, q: int, beta: float, y_terms: int = 0) -> complex:
    """X sum over gamma with q | a A_gamma - y of e(a B/q) psi-hat(-(A X beta + y X/q)) e(B beta).

    ``y_terms=0`` keeps only y = 0; larger values add the aliased frequencies
    |y| <= y_terms, recovering R_N-hat exactly once the transform has decayed.
    """
    if ens.size == 0:
        return 0j
    A = ens.A.astype(float)
    B = ens.B
    Ai = ens.A
    total = 0j
    for y in range(-y_terms, y_terms + 1):
        sel = (a * Ai - y) % q == 0
        if not sel.any():
            continue
        arg = A[sel] * ens.X * beta + y * ens.X / q
        phase = np.exp(2j * np.pi * (((a * B[sel]) % q) / q + B[sel] * beta))
        total += ens.X * np.sum(phase * psi_hat(-arg))
    return total


def poisson_check(ens: Ensemble, p: CircleParams, a: int, q: int, beta: float) -> float:
    """Relative residual |R_N-hat(a/q + beta) - y=0 term| / (1 + |R_N-hat|)."""
    if q < 1 or math.gcd(a, q) != 1:
        raise ConfigError(f"need q >= 1 and gcd(a, q) = 1, got a={a}, q={q}")
    lhs = _rhat_at(ens, a, q, beta)
    rhs = poisson_formula(ens, a, q, beta)
    return abs(lhs - rhs) / (1 + abs(lhs))


def _rhat_at(ens: Ensemble, a: int, q: int, beta: float) -> complex:
    # split the phase as e(f a/q) e(f beta) with the rational part reduced exactly
    if ens.size == 0:
        return 0j
    vals = ens.value_grid()
    wts = np.broadcast_to(ens.weights, vals.shape)
    phase = np.exp(2j * np.pi * (((a * vals) % q) / q + vals * beta))
    return complex(np.sum(wts * phase))


# -- main and error terms ------------------------------------------------------------------


def _window(p: CircleParams, lo: int | None, hi: int | None) -> tuple[int, int]:
    lo = -int(p.N) if lo is None else int(lo)
    hi = int(p.N) if hi is None else int(hi)
    if hi < lo:
        raise ConfigError("empty window")
    return lo, hi


def _convolve_kernel(ens: Ensemble, lo: int, hi: int, kernel) -> np.ndarray:
    """out[n - lo] = sum_m R(m) kernel(m - n) for lo <= n <= hi."""
    r_lo, R = ens.representation_array()
    r_hi = r_lo + len(R) - 1
    # k = m - n ranges over [r_lo - hi, r_hi - lo]
    k = np.arange(r_lo - hi, r_hi - lo + 1)
    ker = kernel(k)
    full = fftconvolve(R, ker[::-1], mode="full")
    # full[i] = sum_m R[m - r_lo] ker_rev[i - (m - r_lo)]; ker_rev[j] = kernel(k[-1 - j])
    # with n = lo + t we need m - n = k[-1 - j] -> j = (r_hi - lo) - (m - n)
    # so i = (m - r_lo) + (r_hi - lo) - (m - n) = r_hi - r_lo + t
    start = r_hi - r_lo
    return full[start : start + (hi - lo + 1)]


def archimedean_factor(ens: Ensemble, p: CircleParams, lo=None, hi=None) -> np.ndarray:
    """(K0/N) sum over x, gamma of psi(x/X) t-hat((K0/N)(f_gamma(x) - n)) on [lo, hi]."""
    lo, hi = _window(p, lo, hi)
    if ens.size == 0:
        return np.zeros(hi - lo + 1)
    c = p.K0 / p.N
    return c * _convolve_kernel(ens, lo, hi, lambda k: hat_t_fourier(c * k))


def main_term(
    ens: Ensemble, p: CircleParams, lo=None, hi=None, *, coprime: bool = True, series: SingularSeries | None = None
) -> np.ndarray:
    """M_N(n) = S_{Q0}(n) times the Archimedean factor, for n in [lo, hi]."""
    lo, hi = _window(p, lo, hi)
    if ens.size == 0:
        return np.zeros(hi - lo + 1)
    series = series or SingularSeries(ens.g, p.Q0, coprime)
    return series(np.arange(lo, hi + 1)) * archimedean_factor(ens, p, lo, hi)


def spike_main_term(ens: Ensemble, p: CircleParams, lo=None, hi=None) -> np.ndarray:
    """The integral of spike * R_N-hat * e(-n theta), in closed form:
    (K0/N) sum_m R(m) t-hat((K0/N)(m - n)) sum_{q <= Q0} c_q(m - n)."""
    lo, hi = _window(p, lo, hi)
    if ens.size == 0:
        return np.zeros(hi - lo + 1)
    c = p.K0 / p.N
    Q = int(math.floor(p.Q0))
    rows = [(q, ramanujan_row(q)) for q in range(1, Q + 1)]

    def kernel(k):
        s = np.zeros(len(k))
        for q, row in rows:
            s += row[k % q]
        return s * hat_t_fourier(c * k)

    return c * _convolve_kernel(ens, lo, hi, kernel)


def spike_main_term_quadrature(ens: Ensemble, p: CircleParams, n: int, nodes: int = 32) -> float:
    """Numerical integral of spike(theta) R_N-hat(theta) e(-n theta) over [0, 1].

    Each tent is integrated on its two linear pieces, split into panels of
    ``nodes`` Gauss-Legendre points with about four oscillations of the
    integrand per panel.
    """
    if ens.size == 0:
        return 0.0
    h = p.K0 / p.N
    lo, R = ens.representation_array()
    span = max(abs(lo - n), abs(lo + len(R) - 1 - n))
    panels = int(math.ceil(h * span / 4)) + 1
    u, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(0.0, h, panels + 1)
    total = 0j
    for a, q in farey_fractions(int(math.floor(p.Q0))):
        for sign in (-1.0, 1.0):
            for e0, e1 in zip(edges[:-1], edges[1:]):
                beta = sign * (0.5 * (e1 - e0) * u + 0.5 * (e1 + e0))
                wts = 0.5 * (e1 - e0) * w * hat_t(beta / h)
                th = a / q + beta
                total += np.sum(wts * rhat(ens, th) * np.exp(-2j * np.pi * n * th))
    if abs(total.imag) > 1e-6 * max(1.0, abs(total.real)):
        raise NumericError(f"spike integral has imaginary part {total.imag:.3g}")
    return float(total.real)


def representation_window(ens: Ensemble, p: CircleParams, lo=None, hi=None) -> np.ndarray:
    lo, hi = _window(p, lo, hi)
    out = np.zeros(hi - lo + 1)
    if ens.size == 0:
        return out
    r_lo, R = ens.representation_array()
    a, b = max(lo, r_lo), min(hi, r_lo + len(R) - 1)
    if a <= b:
        out[a - lo : b - lo + 1] = R[a - r_lo : b - r_lo + 1]
    return out


def error_term(ens: Ensemble, p: CircleParams, lo=None, hi=None, **kw) -> np.ndarray:
    """E_N = R_N - M_N on [lo, hi]."""
    return representation_window(ens, p, lo, hi) - main_term(ens, p, lo, hi, **kw)


@dataclass(frozen=True)
class CircleSweep:
    n: np.ndarray
    R: np.ndarray
    M: np.ndarray
    E: np.ndarray
    admissible: np.ndarray

    def to_csv(self) -> str:
        lines = ["n,R_N,M_N,E_N,admissible"]
        for n, r, m, e, a in zip(self.n.tolist(), self.R.tolist(), self.M.tolist(), self.E.tolist(), self.admissible.tolist()):
            lines.append(f"{n},{r:.17g},{m:.17g},{e:.17g},{int(a)}")
        return "\n".join(lines) + "\n"


def circle_sweep(ens: Ensemble, p: CircleParams, admissible_fn, lo=None, hi=None, **kw) -> CircleSweep:
    lo, hi = _window(p, lo, hi)
    n = np.arange(lo, hi + 1)
    R = representation_window(ens, p, lo, hi)
    M = main_term(ens, p, lo, hi, **kw)
    return CircleSweep(n, R, M, R - M, np.array([bool(admissible_fn(int(k))) for k in n]))


def error_l2(ens: Ensemble, p: CircleParams, **kw) -> float:
    """sum of E_N(n)^2 over the value range of R_N widened by N on each side."""
    if ens.size == 0:
        return 0.0
    r_lo, R = ens.representation_array()
    lo, hi = r_lo - int(p.N), r_lo + len(R) - 1 + int(p.N)
    E = error_term(ens, p, lo, hi, **kw)
    return float(np.dot(E, E))


# -- multiplicities and shifted counts ------------------------------------------------------


def multiplicity_classes(g: GroupSpec, T: float, **kw) -> dict[tuple[int, int], np.ndarray]:
    """Rows of B_T grouped by their (A, B) pair."""
    ball = ball_T(g, T, **kw)
    if len(ball) == 0:
        return {}
    A, B = linear_form_arrays(ball.elements, g)
    keys = np.stack([A, B], axis=1)
    order = np.lexsort((B, A))
    keys, rows = keys[order], ball.elements[order]
    cut = np.nonzero(np.any(keys[1:] != keys[:-1], axis=1))[0] + 1
    return {tuple(k[0].tolist()): r for k, r in zip(np.split(keys, cut), np.split(rows, cut))}


def multiplicity_histogram(g: GroupSpec, T: float, **kw) -> dict[int, int]:
    """multiplicity -> number of (A, B) pairs shared by exactly that many elements of B_T."""
    classes = multiplicity_classes(g, T, **kw)
    sizes = np.array([len(r) for r in classes.values()], dtype=np.int64)
    if not len(sizes):
        return {}
    m, c = np.unique(sizes, return_counts=True)
    return dict(zip(m.tolist(), c.tolist()))


def stabilizer_check(g: GroupSpec, rows: np.ndarray) -> bool:
    """All elements of one (A, B) class send w to the same vector, so
    gamma^-1 gamma' fixes w (as a column vector) for every pair."""
    a, b, c, d = rows.T
    w1, w2 = g.w
    img = np.stack([a * w1 + b * w2, c * w1 + d * w2], axis=1)
    return bool(np.all(img == img[0]))


def shifted_count(ens: Ensemble, p: CircleParams, x: int, n: int) -> int:
    """#{gamma in B_T : |f_gamma(x) - n| <= N / (2 K0)}."""
    if ens.size == 0:
        return 0
    vals = ens.A * int(x) + ens.B
    return int(np.sum(np.abs(vals - n) <= p.N / (2 * p.K0)))


# -- minor arcs ------------------------------------------------------------------------------


@dataclass(frozen=True)
class MinorArcProfile:
    I1: float
    I2: float
    I3: float
    I4: float
    dyadic: tuple[tuple[float, float], ...]  # (Q, I_Q)
    dominated: float  # integral of |1 - spike|^2 |R_N-hat|^2
    grid: int
    rel_change: float

    @property
    def total(self) -> float:
        return self.I1 + self.I2 + self.I3 + self.I4

    def dyadic_csv(self) -> str:
        return "q,I_Q\n" + "".join(f"{q:.17g},{v:.17g}\n" for q, v in self.dyadic)


class _GridIntegrator:
    """Trapezoid integrals of a sampled periodic function over arbitrary arcs."""

    def __init__(self, values: np.ndarray):
        self.G = len(values)
        self.f = np.concatenate([values, values[:1]])
        self.cum = np.concatenate([[0.0], np.cumsum(0.5 * (self.f[1:] + self.f[:-1]))]) / self.G
        self.period = self.cum[-1]

    def _F(self, t):
        # antiderivative from 0 to t, t any real, linear interpolation of f
        k = np.floor(t)
        s = (t - k) * self.G
        i = np.floor(s).astype(np.int64)
        i = np.minimum(i, self.G - 1)
        frac = s - i
        fi, fj = self.f[i], self.f[i + 1]
        part = (fi * frac + 0.5 * (fj - fi) * frac**2) / self.G
        return k * self.period + self.cum[i] + part

    def integral(self, lo, hi):
        return self._F(np.asarray(hi)) - self._F(np.asarray(lo))


def minor_arc_profile(
    ens: Ensemble, p: CircleParams, grid: int | None = None, *, c_near: float = 1.0, tol: float = 0.1
) -> MinorArcProfile:
    """Quadratures of the four minor-arc integrals, the dyadic pieces of I4, and
    the dominated integral of |1 - spike|^2 |R_N-hat|^2, all on one uniform grid.

    The near-zero range |beta| << 1/N is taken as |beta| <= c_near / N.
    Raises ResolutionError when halving the grid moves the total by more than ``tol``.
    """
    if ens.size == 0:
        return MinorArcProfile(0.0, 0.0, 0.0, 0.0, (), 0.0, 0, 0.0)
    _, R = ens.representation_array()
    if grid is None:
        grid = 1 << int(math.ceil(math.log2(8 * len(R))))
    fine = _profile_on_grid(ens, p, grid, c_near)
    coarse = _profile_on_grid(ens, p, grid // 2, c_near)
    change = abs(fine[0] + fine[1] + fine[2] + fine[3] - sum(coarse[:4])) / max(1e-300, sum(fine[:4]))
    if change > tol:
        raise ResolutionError(f"grid of {grid} points: quadrature moved by {change:.1%} on halving")
    return MinorArcProfile(*fine, grid=grid, rel_change=change)


def _profile_on_grid(ens: Ensemble, p: CircleParams, G: int, c_near: float):
    theta, vals = rhat_grid(ens, G)
    power = np.abs(vals) ** 2
    integ = _GridIntegrator(power)
    N, M, K0 = p.N, p.M, p.K0
    h = K0 / N
    Qmax = int(math.floor(M))
    Q0 = int(math.floor(p.Q0))
    I1 = I2 = I3 = I4 = 0.0
    # I1 on a finer local grid since its weight is not constant
    u, w = np.polynomial.legendre.leggauss(48)
    for a, q in farey_fractions(min(Q0, Qmax)):
        for s0, s1 in ((-h, 0.0), (0.0, h)):
            beta = 0.5 * (s1 - s0) * u + 0.5 * (s1 + s0)
            wts = 0.5 * (s1 - s0) * w * (beta / h) ** 2
            I1 += float(np.sum(wts * np.abs(rhat(ens, a / q + beta)) ** 2))
        outer = 1.0 / (q * M)
        if outer > h:
            I2 += float(integ.integral(a / q + h, a / q + outer) + integ.integral(a / q - outer, a / q - h))
    dyadic: dict[float, float] = {}
    Qs = []
    Q = float(p.Q0)
    while Q < M:
        Qs.append(Q)
        Q *= 2
    for q in range(Q0 + 1, Qmax + 1):
        units = np.array([a for a in range(q) if math.gcd(a, q) == 1])
        outer = 1.0 / (q * M)
        near = min(c_near / N, outer)
        centers = units / q
        i4 = float(np.sum(integ.integral(centers - near, centers + near)))
        I4 += i4
        if outer > near:
            I3 += float(np.sum(integ.integral(centers + near, centers + outer) + integ.integral(centers - outer, centers - near)))
        for Qd in Qs:
            if Qd < q < 2 * Qd:
                dyadic[Qd] = dyadic.get(Qd, 0.0) + i4
    T_sp = spike(theta, p)
    dominated = float(np.mean(np.abs(1 - T_sp) ** 2 * power))
    dy = tuple((Qd, dyadic.get(Qd, 0.0)) for Qd in Qs)
    return I1, I2, I3, I4, dy, dominated
