"""
Run configuration: a flat ``key = value`` text format.

Generators are written as ``a,b,c,d`` quadruples separated by ``;``, vectors
as ``x,y``.  Lines starting with ``#`` are comments.  ``serialize`` emits the
canonical form (fixed key order, normalized values), and parsing that form
gives back an equal config.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

from .circle import CircleParams, as_fraction, choose_parameters
from .errors import ConfigError
from .fixtures import fixture
from .matgroup import GroupSpec, Mat2


def _parse_vec(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"expected a pair x,y, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"non-integer vector {text!r}") from None


def _parse_gens(text: str) -> tuple[Mat2, ...]:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            try:
                out.append(Mat2.parse(chunk))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    if not out:
        raise ConfigError("no generators given")
    return tuple(out)


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def _num(text: str, kind=float):
    try:
        return kind(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"bad {kind.__name__} value {text!r}") from None


def _fmt_float(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class RunConfig:
    generators: tuple[Mat2, ...]
    J: int = 1
    v: tuple[int, int] = (1, 0)
    w: tuple[int, int] = (0, 1)
    prune_factor: float | None = None
    angular_divisor: float = 100.0
    name: str = ""
    N: int | None = None
    T: float | None = None
    T_sweep: tuple[float, ...] = ()
    T_exponent: Fraction = Fraction(1, 2)
    delta: Fraction = Fraction(1)
    eps0: Fraction = Fraction(1, 1000)
    eps1: Fraction = Fraction(1, 1000)
    Q0: float | None = None
    K0: float | None = None
    max_elements: int = 20_000_000
    quotient_capacity: int = 10_000_000
    prime_bound: int = 50
    power_bound: int = 4
    seed: int = 0
    threads: int = 1
    out: str | None = None

    def __post_init__(self):
        self.group_spec()  # validates generators, J, v, w
        for name in ("T_exponent", "delta", "eps0", "eps1"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        # normalize numeric types so that serialize() is canonical
        for name in ("prune_factor", "T", "Q0", "K0"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "angular_divisor", float(self.angular_divisor))
        object.__setattr__(self, "T_sweep", tuple(float(t) for t in self.T_sweep))
        if self.N is not None and (int(self.N) != self.N or self.N < 1):
            raise ConfigError(f"N must be a positive integer, got {self.N}")
        if self.T is not None and not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if any(not t > 0 for t in self.T_sweep):
            raise ConfigError("T_sweep values must be positive")
        for name in ("max_elements", "quotient_capacity", "prime_bound", "power_bound", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if self.N is not None and (self.Q0 is not None or self.K0 is not None or self.T is None):
            self.circle_params()

    def group_spec(self) -> GroupSpec:
        return GroupSpec(self.generators, self.J, self.v, self.w, self.prune_factor, self.angular_divisor, self.name)

    def circle_params(self) -> CircleParams:
        if self.N is None:
            raise ConfigError("N is required")
        return choose_parameters(self.N, self.delta, self.eps0, self.eps1, self.T_exponent, Q0=self.Q0, K0=self.K0)

    @classmethod
    def from_group(cls, g: GroupSpec, **kw) -> "RunConfig":
        return cls(g.generators, g.J, g.v, g.w, g.prune_factor, g.angular_divisor, g.name, **kw)

    @classmethod
    def from_fixture(cls, name: str, **kw) -> "RunConfig":
        return cls.from_group(fixture(name), **kw)

    # -- text form ----------------------------------------------------------

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None or (f.name == "T_sweep" and not val):
                continue
            if f.name == "generators":
                text = ";".join(str(g) for g in val)
            elif f.name in ("v", "w"):
                text = f"{val[0]},{val[1]}"
            elif f.name == "T_sweep":
                text = ",".join(_fmt_float(t) for t in val)
            elif isinstance(val, Fraction):
                text = str(val)
            elif isinstance(val, float):
                text = _fmt_float(val)
            else:
                text = str(val)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        raw: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = val
        kw = {}
        base = None
        if "fixture" in raw:
            base = fixture(raw.pop("fixture"))
        known = {f.name for f in fields(cls)}
        for key, val in raw.items():
            if key not in known:
                raise ConfigError(f"unknown key {key!r}")
            kw[key] = _convert(key, val)
        if base is not None:
            for name in ("generators", "J", "v", "w", "prune_factor", "angular_divisor", "name"):
                kw.setdefault(name, getattr(base, name))
        if "generators" not in kw:
            raise ConfigError("generators (or fixture) is required")
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.parse(text)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def _convert(key: str, val: str):
    if key == "generators":
        return _parse_gens(val)
    if key in ("v", "w"):
        return _parse_vec(val)
    if key in ("J", "N", "max_elements", "quotient_capacity", "prime_bound", "power_bound", "seed", "threads"):
        return _num(val, int)
    if key in ("prune_factor", "angular_divisor", "T", "Q0", "K0"):
        return _num(val, float)
    if key == "T_sweep":
        return _parse_floats(val)
    if key in ("T_exponent", "delta", "eps0", "eps1"):
        return _num(val, Fraction)
    return val
