"""Weighted-sum identities for U(n) and its specializations, checked exactly.

Every identity has the shape ``c^(m+1) * X(m+1) = const + sum_{i=0}^{m} c^i * (...)``.
The left side is evaluated with :func:`term_fast` (matrix powering); the right
side is a literal running sum over a :func:`iter_terms` stream, so the two sides
never share an evaluation path.  Each right side is produced as a generator of
partial sums ``rhs(0), rhs(1), ...``, which lets a sweep over ``m`` reuse one
pass instead of re-summing every prefix.
"""

from __future__ import annotations

import enum
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .errors import UsageError
from .sequences import (
    FIBONACCI,
    LUCAS,
    PELL,
    PELL_LUCAS,
    RationalLike,
    SequenceParams,
    as_rational,
    format_rational,
    iter_terms,
    parse_rational,
    term_fast,
)

ONE = Fraction(1)


class IdentityId(enum.Enum):
    MASTER = "master"
    GEN_FIB = "gen-fib"
    FIB_C = "fib-c"
    SURY = "sury"
    MARQUES = "marques"
    LUCAS_C = "lucas-c"
    GEN_FIB_C1 = "gen-fib-c1"
    GEN_PELL = "gen-pell"
    PELL_C = "pell-c"
    PELL_C2 = "pell-c2"
    PELL_LUCAS_C = "pell-lucas-c"
    GEN_PELL_C1 = "gen-pell-c1"


def _check_c(c: Fraction) -> Fraction:
    c = as_rational(c)
    if c == 0:
        raise UsageError("c must be nonzero")
    return c


def _check_m(m: int) -> int:
    if isinstance(m, Fraction):
        if m.denominator != 1:
            raise UsageError(f"m must be an integer, got {format_rational(m)}")
        m = m.numerator
    if not isinstance(m, int) or isinstance(m, bool):
        raise UsageError(f"m must be an integer, got {m!r}")
    if m < 0:
        raise UsageError(f"m must be >= 0, got {m}")
    return m


def _nth(partials: Iterator[Fraction], m: int) -> Fraction:
    return next(itertools.islice(partials, m, None))


def _windows(params: SequenceParams) -> Iterator[tuple[Fraction, Fraction, Fraction]]:
    """Yield (U(i-1), U(i), U(i+1)) for i = 0, 1, 2, ..."""
    stream = iter_terms(params, -1)
    before, cur = next(stream), next(stream)
    for after in stream:
        yield before, cur, after
        before, cur = cur, after


# -- right-hand sides as partial-sum streams --------------------------------


def _master_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    r = params.r
    acc = params.b - r * params.a
    r1, c1 = r - 1, c - 1
    weight = ONE
    for before, cur, after in _windows(params):
        acc += weight * (r1 * cur + c1 * after + before)
        yield acc
        weight *= c


def _gen_fib_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = params.b - params.a
    c1 = c - 1
    weight = ONE
    for before, _, after in _windows(params):
        acc += weight * (c1 * after + before)
        yield acc
        weight *= c


def _fib_c_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(0)
    c1 = c - 1
    weight = ONE
    for before, _, after in _windows(FIBONACCI):
        acc += weight * (c1 * after + before)
        yield acc
        weight *= c


def _sury_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(0)
    weight = ONE
    for lucas in iter_terms(LUCAS, 0):
        acc += weight * lucas
        yield acc
        weight *= 2


def _marques_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    # sum_{i=0}^{m} 3^i L(i) + sum_{i=0}^{m+1} 3^(i-1) F(i); the second sum runs
    # one index ahead, so its i = 0 term (3^-1 * F(0)) is added up front.
    fib = iter_terms(FIBONACCI, 0)
    acc = Fraction(1, 3) * next(fib)
    weight = ONE
    for lucas, fib_next in zip(iter_terms(LUCAS, 0), fib):
        acc += weight * lucas + weight * fib_next
        yield acc
        weight *= 3


def _lucas_c_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(2)
    c1 = c - 1
    weight = ONE
    for before, _, after in _windows(LUCAS):
        acc += weight * (c1 * after + before)
        yield acc
        weight *= c


def _gen_fib_c1_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = params.b - params.a
    for before in iter_terms(params, -1):
        acc += before
        yield acc


def _gen_pell_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = params.b - 2 * params.a
    c1 = c - 1
    weight = ONE
    for before, cur, after in _windows(params):
        acc += weight * (cur + c1 * after + before)
        yield acc
        weight *= c


def _pell_c_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(0)
    c2 = c - 2
    weight = ONE
    pell = iter_terms(PELL, 0)
    cur = next(pell)
    for after, pell_lucas in zip(pell, iter_terms(PELL_LUCAS, 0)):
        acc += weight * (cur + c2 * after + pell_lucas)
        yield acc
        weight *= c
        cur = after


def _pell_c2_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(0)
    weight = ONE
    for pell, pell_lucas in zip(iter_terms(PELL, 0), iter_terms(PELL_LUCAS, 0)):
        acc += weight * (pell + pell_lucas)
        yield acc
        weight *= 2


def _pell_lucas_c_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = Fraction(2)
    c1 = c - 1
    weight = ONE
    for before, cur, after in _windows(PELL_LUCAS):
        acc += weight * (cur + c1 * after + before)
        yield acc
        weight *= c


def _gen_pell_c1_partials(params: SequenceParams, c: Fraction) -> Iterator[Fraction]:
    acc = params.b - 2 * params.a
    for before, cur, _ in _windows(params):
        acc += cur + before
        yield acc


# -- left-hand sides ---------------------------------------------------------


def _weighted_lhs(params: SequenceParams, c: Fraction, m: int) -> Fraction:
    return c ** (m + 1) * term_fast(params, m + 1)


def _plain_lhs(params: SequenceParams, c: Fraction, m: int) -> Fraction:
    return term_fast(params, m + 1)


@dataclass(frozen=True)
class Identity:
    id: IdentityId
    title: str
    pins: dict
    lhs: Callable[[SequenceParams, Fraction, int], Fraction] = field(repr=False)
    partials: Callable[[SequenceParams, Fraction], Iterator[Fraction]] = field(repr=False)
    lhs_expr: str = ""
    rhs_expr: str = ""

    @property
    def free(self) -> tuple[str, ...]:
        return tuple(k for k in ("a", "b", "r", "c") if k not in self.pins)


def _pins(**kw) -> dict:
    return {k: Fraction(v) for k, v in kw.items()}


REGISTRY: dict[IdentityId, Identity] = {
    entry.id: entry
    for entry in [
        Identity(
            IdentityId.MASTER,
            "c^(m+1) U(m+1) = b - r a + sum c^i [(r-1) U(i) + (c-1) U(i+1) + U(i-1)]",
            _pins(),
            _weighted_lhs,
            _master_partials,
            "c^(m+1) * U(a, b, r, m+1)",
            "b - r*a + sum(i = 0..m, c^i * ((r-1)*U(a, b, r, i) + (c-1)*U(a, b, r, i+1) + U(a, b, r, i-1)))",
        ),
        Identity(
            IdentityId.GEN_FIB,
            "c^(m+1) G(m+1) = b - a + sum c^i [(c-1) G(i+1) + G(i-1)]",
            _pins(r=1),
            _weighted_lhs,
            _gen_fib_partials,
            "c^(m+1) * U(a, b, 1, m+1)",
            "b - a + sum(i = 0..m, c^i * ((c-1)*U(a, b, 1, i+1) + U(a, b, 1, i-1)))",
        ),
        Identity(
            IdentityId.FIB_C,
            "c^(m+1) F(m+1) = sum c^i [(c-1) F(i+1) + F(i-1)]",
            _pins(a=1, b=1, r=1),
            _weighted_lhs,
            _fib_c_partials,
            "c^(m+1) * F(m+1)",
            "sum(i = 0..m, c^i * ((c-1)*F(i+1) + F(i-1)))",
        ),
        Identity(
            IdentityId.SURY,
            "2^(m+1) F(m+1) = sum 2^i L(i)",
            _pins(a=1, b=1, r=1, c=2),
            _weighted_lhs,
            _sury_partials,
            "2^(m+1) * F(m+1)",
            "sum(i = 0..m, 2^i * L(i))",
        ),
        Identity(
            IdentityId.MARQUES,
            "3^(m+1) F(m+1) = sum_{0..m} 3^i L(i) + sum_{0..m+1} 3^(i-1) F(i)",
            _pins(a=1, b=1, r=1, c=3),
            _weighted_lhs,
            _marques_partials,
            "3^(m+1) * F(m+1)",
            "sum(i = 0..m, 3^i * L(i)) + sum(i = 0..m+1, 3^(i-1) * F(i))",
        ),
        Identity(
            IdentityId.LUCAS_C,
            "c^(m+1) L(m+1) = 2 + sum c^i [(c-1) L(i+1) + L(i-1)]",
            _pins(a=1, b=3, r=1),
            _weighted_lhs,
            _lucas_c_partials,
            "c^(m+1) * L(m+1)",
            "2 + sum(i = 0..m, c^i * ((c-1)*L(i+1) + L(i-1)))",
        ),
        Identity(
            IdentityId.GEN_FIB_C1,
            "G(m+1) = b - a + sum G(i-1)",
            _pins(r=1, c=1),
            _plain_lhs,
            _gen_fib_c1_partials,
            "U(a, b, 1, m+1)",
            "b - a + sum(i = 0..m, U(a, b, 1, i-1))",
        ),
        Identity(
            IdentityId.GEN_PELL,
            "c^(m+1) P(m+1) = b - 2a + sum c^i [P(i) + (c-1) P(i+1) + P(i-1)]",
            _pins(r=2),
            _weighted_lhs,
            _gen_pell_partials,
            "c^(m+1) * U(a, b, 2, m+1)",
            "b - 2*a + sum(i = 0..m, c^i * (U(a, b, 2, i) + (c-1)*U(a, b, 2, i+1) + U(a, b, 2, i-1)))",
        ),
        Identity(
            IdentityId.PELL_C,
            "c^(m+1) P(m+1) = sum c^i [P(i) + (c-2) P(i+1) + Q(i)]",
            _pins(a=1, b=2, r=2),
            _weighted_lhs,
            _pell_c_partials,
            "c^(m+1) * P(m+1)",
            "sum(i = 0..m, c^i * (P(i) + (c-2)*P(i+1) + Q(i)))",
        ),
        Identity(
            IdentityId.PELL_C2,
            "2^(m+1) P(m+1) = sum 2^i [P(i) + Q(i)]",
            _pins(a=1, b=2, r=2, c=2),
            _weighted_lhs,
            _pell_c2_partials,
            "2^(m+1) * P(m+1)",
            "sum(i = 0..m, 2^i * (P(i) + Q(i)))",
        ),
        Identity(
            IdentityId.PELL_LUCAS_C,
            "c^(m+1) Q(m+1) = 2 + sum c^i [Q(i) + (c-1) Q(i+1) + Q(i-1)]",
            _pins(a=2, b=6, r=2),
            _weighted_lhs,
            _pell_lucas_c_partials,
            "c^(m+1) * Q(m+1)",
            "2 + sum(i = 0..m, c^i * (Q(i) + (c-1)*Q(i+1) + Q(i-1)))",
        ),
        Identity(
            IdentityId.GEN_PELL_C1,
            "P(m+1) = b - 2a + sum [P(i) + P(i-1)]",
            _pins(r=2, c=1),
            _plain_lhs,
            _gen_pell_c1_partials,
            "U(a, b, 2, m+1)",
            "b - 2*a + sum(i = 0..m, U(a, b, 2, i) + U(a, b, 2, i-1))",
        ),
    ]
}


def get_identity(identity: IdentityId | str) -> Identity:
    try:
        return REGISTRY[IdentityId(identity)]
    except ValueError:
        names = ", ".join(i.value for i in IdentityId)
        raise UsageError(f"unknown identity {identity!r}; choose from {names}") from None


# -- public side evaluators --------------------------------------------------


def lhs_master(params: SequenceParams, c: RationalLike, m: int) -> Fraction:
    return _weighted_lhs(params, _check_c(c), _check_m(m))


def rhs_master(params: SequenceParams, c: RationalLike, m: int) -> Fraction:
    return _nth(_master_partials(params, _check_c(c)), _check_m(m))


def _sides(identity: IdentityId, m: int, a=None, b=None, c=None) -> tuple[Fraction, Fraction]:
    inst = IdentityInstance.create(identity, m, a=a, b=b, c=c)
    entry = REGISTRY[identity]
    return (entry.lhs(inst.params, inst.c, inst.m),
            _nth(entry.partials(inst.params, inst.c), inst.m))


def sides_gen_fib(a, b, c, m):
    return _sides(IdentityId.GEN_FIB, m, a=a, b=b, c=c)


def sides_fib_c(c, m):
    return _sides(IdentityId.FIB_C, m, c=c)


def sides_sury(m):
    return _sides(IdentityId.SURY, m)


def sides_marques(m):
    return _sides(IdentityId.MARQUES, m)


def sides_lucas_c(c, m):
    return _sides(IdentityId.LUCAS_C, m, c=c)


def sides_gen_fib_c1(a, b, m):
    return _sides(IdentityId.GEN_FIB_C1, m, a=a, b=b)


def sides_gen_pell(a, b, c, m):
    return _sides(IdentityId.GEN_PELL, m, a=a, b=b, c=c)


def sides_pell_c(c, m):
    return _sides(IdentityId.PELL_C, m, c=c)


def sides_pell_c2(m):
    return _sides(IdentityId.PELL_C2, m)


def sides_pell_lucas_c(c, m):
    return _sides(IdentityId.PELL_LUCAS_C, m, c=c)


def sides_gen_pell_c1(a, b, m):
    return _sides(IdentityId.GEN_PELL_C1, m, a=a, b=b)


# -- instances and reports ---------------------------------------------------


@dataclass(frozen=True)
class IdentityInstance:
    """One checkable claim: an identity with every parameter bound."""

    id: IdentityId
    a: Fraction
    b: Fraction
    r: Fraction
    c: Fraction
    m: int

    @classmethod
    def create(cls, identity: IdentityId | str, m: int, a: RationalLike | None = None,
               b: RationalLike | None = None, r: RationalLike | None = None,
               c: RationalLike | None = None) -> "IdentityInstance":
        entry = get_identity(identity)
        values = _bind(entry, {"a": a, "b": b, "r": r, "c": c})
        _check_c(values["c"])
        return cls(entry.id, values["a"], values["b"], values["r"], values["c"], _check_m(m))

    @property
    def params(self) -> SequenceParams:
        return SequenceParams(self.a, self.b, self.r)

    def as_record(self) -> dict:
        return {
            "identity": self.id.value,
            "a": format_rational(self.a),
            "b": format_rational(self.b),
            "r": format_rational(self.r),
            "c": format_rational(self.c),
            "m": self.m,
        }


def _bind(entry: Identity, given: dict) -> dict[str, Fraction]:
    out = {}
    for name, value in given.items():
        pin = entry.pins.get(name)
        if value is None:
            if pin is None:
                raise UsageError(f"{entry.id.value} requires {name}")
            out[name] = pin
            continue
        value = as_rational(value)
        if pin is not None and value != pin:
            raise UsageError(
                f"{entry.id.value} pins {name}={format_rational(pin)}, got {format_rational(value)}"
            )
        out[name] = value
    return out


@dataclass(frozen=True)
class IdentityReport:
    instance: IdentityInstance | None
    lhs: Fraction
    rhs: Fraction
    elapsed: float = 0.0

    @property
    def residual(self) -> Fraction:
        return self.lhs - self.rhs

    @property
    def passed(self) -> bool:
        return self.residual == 0

    def as_record(self) -> dict:
        record = self.instance.as_record() if self.instance is not None else {}
        record.update(
            lhs=format_rational(self.lhs),
            rhs=format_rational(self.rhs),
            residual=format_rational(self.residual),
            **{"pass": self.passed},
        )
        return record


def evaluate(instance: IdentityInstance) -> IdentityReport:
    entry = REGISTRY[instance.id]
    start = time.perf_counter()
    lhs = entry.lhs(instance.params, instance.c, instance.m)
    rhs = _nth(entry.partials(instance.params, instance.c), instance.m)
    return IdentityReport(instance, lhs, rhs, time.perf_counter() - start)


# -- sweeps ------------------------------------------------------------------


def parse_values(text: str) -> tuple[Fraction, ...]:
    """Parse ``lo..hi`` (inclusive, unit step) or a comma list mixing both forms."""
    values: list[Fraction] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise UsageError(f"empty item in value list {text!r}")
        if ".." in item:
            lo_text, _, hi_text = item.partition("..")
            lo, hi = parse_rational(lo_text), parse_rational(hi_text)
            if lo > hi:
                raise UsageError(f"empty range {item!r}")
            steps = int(hi - lo)
            values.extend(lo + k for k in range(steps + 1))
        else:
            values.append(parse_rational(item))
    return tuple(values)


@dataclass(frozen=True)
class SweepConfig:
    """Grid for one identity.  ``None`` on a pinned axis means "use the pin"."""

    identity: IdentityId
    m: tuple
    a: tuple | None = None
    b: tuple | None = None
    r: tuple | None = None
    c: tuple | None = None

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "SweepConfig":
        unknown = set(mapping) - {"identity", "a", "b", "r", "c", "m"}
        if unknown:
            raise UsageError(f"unknown sweep keys: {', '.join(sorted(unknown))}")
        if "identity" not in mapping:
            raise UsageError("sweep config needs an identity")
        if "m" not in mapping:
            raise UsageError("sweep config needs m")
        axes = {k: parse_values(v) for k, v in mapping.items() if k in "abrcm" and v is not None}
        return cls(get_identity(mapping["identity"].strip()).id, **axes)

    @classmethod
    def from_text(cls, text: str) -> "SweepConfig":
        """Parse ``key = value`` lines (``:`` also accepted, ``#`` starts a comment)."""
        mapping = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                key, sep, value = line.partition(":")
            if not sep:
                raise UsageError(f"line {lineno}: expected key = value")
            key = key.strip()
            if key in mapping:
                raise UsageError(f"line {lineno}: duplicate key {key!r}")
            mapping[key] = value.strip()
        return cls.from_mapping(mapping)


@dataclass(frozen=True)
class SweepSummary:
    total: int
    passed: int
    failed: int

    def as_record(self) -> dict:
        return {"total": self.total, "passed": self.passed, "failed": self.failed}


def _grid(config: SweepConfig) -> tuple[Identity, list[tuple[Fraction, ...]], list[int]]:
    entry = REGISTRY[IdentityId(config.identity)]
    axes = {}
    for name in ("a", "b", "r", "c"):
        values = getattr(config, name)
        pin = entry.pins.get(name)
        if values is None:
            if pin is None:
                raise UsageError(f"{entry.id.value} sweep needs values for {name}")
            values = (pin,)
        values = tuple(as_rational(v) for v in values)
        if not values:
            raise UsageError(f"empty grid for {name}")
        if pin is not None and any(v != pin for v in values):
            raise UsageError(f"{entry.id.value} pins {name}={format_rational(pin)}")
        axes[name] = sorted(set(values))
    if 0 in axes["c"]:
        raise UsageError("c grid contains 0")
    if not config.m:
        raise UsageError("empty grid for m")
    ms = sorted({_check_m(m) for m in config.m})
    groups = list(itertools.product(axes["a"], axes["b"], axes["r"], axes["c"]))
    return entry, groups, ms


def _evaluate_group(identity: IdentityId, point: tuple, ms: list[int]) -> list[IdentityReport]:
    entry = REGISTRY[identity]
    a, b, r, c = point
    params = SequenceParams(a, b, r)
    partials = entry.partials(params, c)
    reports = []
    consumed = 0
    rhs = None
    for m in ms:
        start = time.perf_counter()
        while consumed <= m:
            rhs = next(partials)
            consumed += 1
        lhs = entry.lhs(params, c, m)
        instance = IdentityInstance(identity, a, b, r, c, m)
        reports.append(IdentityReport(instance, lhs, rhs, time.perf_counter() - start))
    return reports


def sweep(config: SweepConfig, workers: int = 1) -> Iterator[IdentityReport | SweepSummary]:
    """Evaluate every grid point, yielding reports then a final :class:`SweepSummary`.

    The grid is validated eagerly, so a bad config raises :class:`UsageError`
    before anything is evaluated.  Reports come out in lexicographic order of
    ``(a, b, r, c, m)`` whatever ``workers`` is.
    """
    entry, groups, ms = _grid(config)
    return _run(entry.id, groups, ms, workers)


def _run(identity, groups, ms, workers) -> Iterator[IdentityReport | SweepSummary]:
    total = passed = 0
    if workers > 1 and len(groups) > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        chunks: Iterable[list[IdentityReport]] = pool.map(
            _evaluate_group,
            itertools.repeat(identity),
            groups,
            itertools.repeat(ms),
            chunksize=max(1, len(groups) // (4 * workers)),
        )
    else:
        pool = None
        chunks = (_evaluate_group(identity, g, ms) for g in groups)
    try:
        for chunk in chunks:
            for report in chunk:
                total += 1
                passed += report.passed
                yield report
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    yield SweepSummary(total, passed, total - passed)
