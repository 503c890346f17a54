"""Exact verification of combination certificates.

A certificate mixes delay functions ``f_i`` with weights ``lambda_i`` summing
to one and claims ``sum_i lambda_i f_i(x) <= alpha (x + 1)`` for every
``x >= 1`` (or ``<= a (x + 1) + b (r + 1)`` for every ``r`` in ``[0, x - 1]``).
Every supported delay function is piecewise linear, and beyond some point it
repeats with a fixed period up to a linear drift. So the gap between the two
sides only needs checking at the breakpoints, at the one-sided limits of every
piece, over one common period, plus a comparison of slopes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .model import format_rational, to_rational


class CertificateError(ValueError):
    """Malformed certificate: bad form, negative weights, weights not summing to one."""


@dataclass(frozen=True)
class Linear:
    """``a x + b r + c``; ``b`` is only non-zero in release-date certificates."""

    a: Fraction
    c: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, to_rational(getattr(self, name)))

    def value(self, x: Fraction, r: Fraction = Fraction(0)) -> Fraction:
        return self.a * x + self.b * r + self.c

    slope = property(lambda self: self.a)
    period = property(lambda self: 1)
    settle = property(lambda self: 1)

    def breakpoints(self, upto: Fraction) -> list[Fraction]:
        return []

    def to_dict(self) -> dict:
        form = "affine-release" if self.b else "linear"
        coef = {"a": format_rational(self.a), "c": format_rational(self.c)}
        if self.b:
            coef["b"] = format_rational(self.b)
        return {"form": form, "coefficients": coef}


@dataclass(frozen=True)
class Ceiling:
    """Block-rounding delay: ``lam + 2`` for ``x <= lam``, else
    ``(tau + 2) ceil((x - lam) / tau) + (lam + 2 if lam else 0) + c``."""

    tau: int
    lam: int = 0
    c: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        if self.tau < 1 or self.lam < 0:
            raise CertificateError("ceiling form needs tau >= 1 and lam >= 0")
        object.__setattr__(self, "c", to_rational(self.c))

    def value(self, x: Fraction, r: Fraction = Fraction(0)) -> Fraction:
        if self.lam and x <= self.lam:
            return self.lam + 2 + self.c
        blocks = math.ceil((x - self.lam) / self.tau)
        return (self.tau + 2) * blocks + (self.lam + 2 if self.lam else 0) + self.c

    slope = property(lambda self: Fraction(self.tau + 2, self.tau))
    period = property(lambda self: self.tau)
    settle = property(lambda self: max(1, self.lam))

    def breakpoints(self, upto: Fraction) -> list[Fraction]:
        out = []
        p = self.lam
        while p <= upto:
            out.append(Fraction(p))
            p += self.tau
        return out

    def to_dict(self) -> dict:
        return {"form": "ceiling", "coefficients": {"tau": self.tau, "lambda": self.lam,
                                                    "c": format_rational(self.c)}}


@dataclass(frozen=True)
class Prefixed:
    """``b`` for ``x < b + 1``, else ``b + inner(x)``: schedule a prefix first, then shift."""

    b: int
    inner: "DelayFunction"

    def value(self, x: Fraction, r: Fraction = Fraction(0)) -> Fraction:
        if x < self.b + 1:
            return Fraction(self.b)
        return self.b + self.inner.value(x, r)

    slope = property(lambda self: self.inner.slope)
    period = property(lambda self: self.inner.period)
    settle = property(lambda self: max(self.b + 1, self.inner.settle))

    def breakpoints(self, upto: Fraction) -> list[Fraction]:
        return [Fraction(self.b + 1)] + self.inner.breakpoints(upto)

    def to_dict(self) -> dict:
        return {"form": "prefixed", "coefficients": {"b": self.b, "inner": self.inner.to_dict()}}


DelayFunction = Linear | Ceiling | Prefixed


def delay_from_dict(data: dict) -> DelayFunction:
    form = data.get("form")
    coef = data.get("coefficients", {})
    try:
        if form == "linear":
            return Linear(coef["a"], coef["c"])
        if form == "affine-release":
            return Linear(coef["a"], coef["c"], coef.get("b", 0))
        if form == "ceiling":
            return Ceiling(int(coef["tau"]), int(coef.get("lambda", 0)), coef.get("c", 0))
        if form == "prefixed":
            return Prefixed(int(coef["b"]), delay_from_dict(coef["inner"]))
    except (KeyError, TypeError) as exc:
        raise CertificateError(f"bad coefficients for form {form!r}: {exc}") from exc
    raise CertificateError(f"unknown delay function form {form!r}")


@dataclass(frozen=True)
class Certificate:
    """Weighted delay functions and the claimed bound.

    With ``b`` unset the target is ``alpha (x + 1)`` and the ratio is ``2 alpha``;
    with ``b`` set it is ``alpha (x + 1) + b (r + 1)`` and the ratio ``2 alpha + b``.
    ``alpha`` may be left out, and then the smallest valid one is computed.
    ``denominator`` only affects how ``alpha`` is printed.
    """

    pieces: tuple[tuple[DelayFunction, Fraction], ...]
    alpha: Fraction | None = None
    b: Fraction | None = None
    name: str = ""
    denominator: int | None = None

    def __post_init__(self) -> None:
        pieces = tuple((f, to_rational(w)) for f, w in self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise CertificateError("certificate has no pieces")
        if any(w < 0 for _, w in pieces):
            raise CertificateError("certificate weights must be nonnegative")
        total = sum((w for _, w in pieces), Fraction(0))
        if total != 1:
            raise CertificateError(f"certificate weights sum to {total}, not 1")
        if self.alpha is not None:
            object.__setattr__(self, "alpha", to_rational(self.alpha))
        if self.b is not None:
            object.__setattr__(self, "b", to_rational(self.b))
            if self.alpha is None:
                raise CertificateError("release-form certificate needs both a and b")

    @property
    def release_form(self) -> bool:
        return self.b is not None

    def mix(self, x: Fraction, r: Fraction = Fraction(0)) -> Fraction:
        return sum((w * f.value(x, r) for f, w in self.pieces), Fraction(0))

    def format_alpha(self, alpha: Fraction) -> str:
        d = self.denominator
        if d and (alpha * d).denominator == 1:
            return f"{alpha * d}/{d}"
        return format_rational(alpha)


@dataclass(frozen=True)
class CertificateVerdict:
    ok: bool
    alpha: Fraction
    b: Fraction | None
    ratio: Fraction
    tight_everywhere: bool
    tight_points: tuple[Fraction, ...]
    witness: tuple[Fraction, Fraction] | None = None   # (x, r)

    def __bool__(self) -> bool:
        return self.ok


def _mix_slope(cert: Certificate) -> Fraction:
    return sum((w * f.slope for f, w in cert.pieces), Fraction(0))


def _window(cert: Certificate) -> tuple[Fraction, int]:
    settle = max(f.settle for f, _ in cert.pieces)
    period = math.lcm(*(f.period for f, _ in cert.pieces))
    return Fraction(settle), period


def _sample_points(cert: Certificate, end: Fraction):
    """Breakpoints in ``[1, end]`` and, per piece between them, its two one-sided limits.

    Yields ``(x, value, attained)``; limits are recovered from two interior points
    of the piece, on which every function is linear.
    """
    pts = {Fraction(1), end}
    for f, _ in cert.pieces:
        pts.update(p for p in f.breakpoints(end) if 1 <= p <= end)
    pts = sorted(pts)
    for p in pts:
        yield p, p, True
    for lo, hi in zip(pts, pts[1:]):
        yield lo, hi, False


def _gap_points(cert: Certificate, alpha: Fraction, end: Fraction, r_mode: str):
    """Signed gap (mix minus target) at sample points; r_mode is 'zero' or 'max'."""

    def r_of(x):
        return Fraction(0) if r_mode == "zero" else x - 1

    def gap(x):
        r = r_of(x)
        target = alpha * (x + 1) + ((cert.b or 0) * (r + 1) if cert.release_form else 0)
        return cert.mix(x, r) - target

    for lo, hi, attained in _sample_points(cert, end):
        if attained:
            yield lo, gap(lo), True
            continue
        x1 = lo + (hi - lo) / 3
        x2 = lo + 2 * (hi - lo) / 3
        g1, g2 = gap(x1), gap(x2)
        slope = (g2 - g1) / (x2 - x1)
        yield lo, g1 + slope * (lo - x1), False   # right limit at lo
        yield hi, g1 + slope * (hi - x1), False   # left limit at hi


def minimal_alpha(cert: Certificate) -> Fraction:
    """Smallest alpha with mix(x) <= alpha (x + 1) for all x >= 1 (plain form only)."""
    if cert.release_form:
        raise CertificateError("minimal alpha is only defined for the plain form")
    settle, period = _window(cert)
    end = settle + period
    best = _mix_slope(cert)
    zero = Certificate(cert.pieces, Fraction(0))
    for x, g, _ in _gap_points(zero, Fraction(0), end, "zero"):
        best = max(best, g / (x + 1))
    return best


def verify_certificate(cert: Certificate) -> CertificateVerdict:
    alpha = cert.alpha if cert.alpha is not None else minimal_alpha(cert)
    b = cert.b
    ratio = 2 * alpha + (b or 0)
    settle, period = _window(cert)
    end = settle + period
    # target slope in x: alpha, plus b when r = x - 1
    drift = {"zero": _mix_slope(cert) - alpha}
    modes = ["zero"]
    if cert.release_form:
        r_slope = sum((w * getattr(f, "b", 0) for f, w in cert.pieces), Fraction(0))
        drift["max"] = drift["zero"] + r_slope - b
        modes.append("max")

    tight = set()
    everywhere = True
    for mode in modes:
        samples = list(_gap_points(cert, alpha, end, mode))
        for x, g, attained in samples:
            if g > 0:
                return CertificateVerdict(False, alpha, b, ratio, False, (), _witness(cert, alpha, x, attained, mode))
            if g == 0 and attained:
                tight.add(x)
            if g != 0:
                everywhere = False
        if drift[mode] > 0:
            # the gap grows by drift * period every period; push a sample past zero
            x0, g0 = max(((x, g) for x, g, att in samples if att and x >= settle), key=lambda t: t[1])
            k = math.floor(-g0 / (drift[mode] * period)) + 1
            x = x0 + k * period
            return CertificateVerdict(False, alpha, b, ratio, False, (),
                                      (x, Fraction(0) if mode == "zero" else x - 1))
        if drift[mode] != 0:
            everywhere = False
    return CertificateVerdict(True, alpha, b, ratio, everywhere, tuple(sorted(tight)))


def _witness(cert, alpha, x, attained, mode) -> tuple[Fraction, Fraction]:
    """A concrete point violating the bound near sample ``x``."""

    def gap(y):
        r = Fraction(0) if mode == "zero" else y - 1
        target = alpha * (y + 1) + ((cert.b or 0) * (r + 1) if cert.release_form else 0)
        return cert.mix(y, r) - target

    if not attained:
        # a limit is positive: approach x from both sides until a point is
        step = Fraction(1, 2)
        for _ in range(64):
            for y in (x - step, x + step):
                if y >= 1 and gap(y) > 0:
                    x = y
                    break
            else:
                step /= 2
                continue
            break
    return x, Fraction(0) if mode == "zero" else x - 1


def describe(cert: Certificate, verdict: CertificateVerdict) -> list[str]:
    """Human-readable verdict lines."""
    if not verdict.ok:
        x, r = verdict.witness
        where = f"x = {format_rational(x)}" + (f", r = {format_rational(r)}" if cert.release_form else "")
        return [f"certificate FAILS at {where}"]
    if verdict.tight_everywhere:
        tight = "tight for all x"
    elif verdict.tight_points:
        tight = "tight at x = " + ", ".join(format_rational(p) for p in verdict.tight_points)
    else:
        tight = "not tight"
    ratio = format_rational(verdict.ratio)
    if cert.release_form:
        a, b = format_rational(verdict.alpha), format_rational(verdict.b)
        return [f"a = {a}, b = {b}, ratio = {ratio}, {tight}",
                f"bound = {a} (x+1) + {b} (r+1), ratio ~ {float(verdict.ratio):.6f}"]
    alpha = cert.format_alpha(verdict.alpha)
    return [f"alpha = {alpha}, ratio = {ratio}, {tight}",
            f"bound = {alpha} (x+1), ratio = {ratio} ~ {float(verdict.ratio):.6f}"]


def certificate_from_json(text: str) -> Certificate:
    """Either a bare list of ``{form, coefficients, weight}`` or an object with
    ``pieces`` and optional ``alpha`` / ``a``, ``b``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CertificateError(f"certificate is not valid JSON: {exc}") from exc
    if isinstance(data, list):
        data = {"pieces": data}
    if not isinstance(data, dict) or not isinstance(data.get("pieces"), list):
        raise CertificateError("certificate must be a list of pieces or an object with 'pieces'")
    try:
        pieces = tuple((delay_from_dict(p), to_rational(p["weight"])) for p in data["pieces"])
    except KeyError as exc:
        raise CertificateError("every piece needs a weight") from exc
    alpha = data.get("alpha", data.get("a"))
    return Certificate(pieces, alpha, data.get("b"), data.get("name", ""))


def certificate_to_json(cert: Certificate) -> str:
    pieces = [dict(f.to_dict(), weight=format_rational(w)) for f, w in cert.pieces]
    out: dict = {"name": cert.name, "pieces": pieces}
    if cert.release_form:
        out["a"], out["b"] = format_rational(cert.alpha), format_rational(cert.b)
    elif cert.alpha is not None:
        out["alpha"] = format_rational(cert.alpha)
    return json.dumps(out, indent=2)


def _weights(*ws) -> list[Fraction]:
    return [to_rational(w) for w in ws]


def builtin(name: str) -> Certificate:
    """The four shipped certificates: main, release, intgap, improved."""
    if name == "main":
        g, c = _weights("23/41", "18/41")
        return Certificate(((Linear(2, -1), g), (Linear(Fraction(4, 3), Fraction(31, 6)), c)),
                           Fraction(70, 41), name="main")
    if name == "release":
        g, c = _weights("0.68", "0.32")
        return Certificate(((Linear(2, -1, 1), g), (Linear(Fraction(3, 2), 10), c)),
                           Fraction("1.84"), Fraction("0.68"), name="release")
    if name == "intgap":
        h, c = _weights("51/56", "5/56")
        return Certificate(((Linear(2, 1), h), (Linear(Fraction(7, 5), Fraction("11.6")), c)),
                           Fraction(109, 56), name="intgap")
    if name == "improved":
        g, k, c = _weights("749/1460", "126/1460", "117/1460")
        ckbf = Prefixed(1, Linear(Fraction(4, 3), Fraction(31, 6)))
        pieces = [(Linear(2, -1), g), (ckbf, k)] + [(Ceiling(5, lam), c) for lam in (0, 3, 4, 6, 7)]
        return Certificate(tuple(pieces), Fraction(2485, 1460), name="improved", denominator=1460)
    raise KeyError(f"unknown builtin certificate {name!r}")


BUILTINS: Sequence[str] = ("main", "release", "intgap", "improved")
