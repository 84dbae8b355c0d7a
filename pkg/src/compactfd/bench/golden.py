"""Reference errors for the built-in examples.

Each :class:`GoldenCase` pins one column of a reference table: example,
scheme, setting, τ rule and the ``(h, error, order)`` rows.  ``compare``
checks a :class:`~compactfd.bench.study.ConvergenceReport` against a case.
Rows outside the desk-scale range are kept for reference but are not checked
unless asked for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..errors import ConfigError
from ..timestep import IntegratorPlan, TauRule

__all__ = ["GoldenRow", "GoldenCase", "GOLDEN", "golden_for", "compare", "Mismatch"]


@dataclass(frozen=True)
class GoldenRow:
    h: Fraction
    error: float
    order: Optional[float] = None
    rtol: float = 0.05


@dataclass(frozen=True)
class GoldenCase:
    key: str
    example: int
    setting: Optional[int]
    plan: Optional[IntegratorPlan]
    rows: tuple
    desk: tuple = field(default=())  # h values checked by default

    @property
    def scheme(self):
        return self.plan.scheme if self.plan else None

    def row(self, h) -> Optional[GoldenRow]:
        fr = Fraction(h).limit_denominator(1 << 20)
        for r in self.rows:
            if r.h == fr:
                return r
        return None


def _rows(spec, rtol=0.05, loose=()):
    out = []
    for h, err, order in spec:
        fr = Fraction(h)
        out.append(GoldenRow(fr, err, order, 0.10 if fr in {Fraction(x) for x in loose} else rtol))
    return tuple(out)


_BDF3 = IntegratorPlan("BDF3", TauRule("ratio", 1.0))
_BDF4 = IntegratorPlan("BDF4", TauRule("ratio", 1.0))
_CN_TABLE = IntegratorPlan("CN", TauRule("quadratic", 4.0))


def _case(key, example, setting, plan, spec, desk, rtol=0.05, loose=()):
    return GoldenCase(key, example, setting, plan, _rows(spec, rtol, loose),
                      tuple(Fraction(h) for h in desk))


_T2 = {
    "CN": [("1/4", 2.5701E+04, None), ("1/8", 7.5992E+03, 1.76), ("1/16", 1.6875E+03, 2.17),
           ("1/32", 2.7609E+00, 9.26), ("1/64", 3.4206E-01, 3.01), ("1/128", 1.7998E-02, 4.25),
           ("1/256", 1.0799E-03, 4.06)],
    "BDF3": [("1/4", 2.9143E+04, None), ("1/8", 7.5729E+03, 1.94), ("1/16", 1.6875E+03, 2.17),
             ("1/32", 2.7643E+00, 9.25), ("1/64", 3.4205E-01, 3.01), ("1/128", 1.7998E-02, 4.25),
             ("1/256", 1.0799E-03, 4.06), ("1/512", 6.7549E-05, 4.00)],
    "BDF4": [("1/4", 2.9188E+04, None), ("1/8", 7.5755E+03, 1.95), ("1/16", 1.6875E+03, 2.17),
             ("1/32", 2.7643E+00, 9.25), ("1/64", 3.4205E-01, 3.01), ("1/128", 1.7998E-02, 4.25),
             ("1/256", 1.0799E-03, 4.06), ("1/512", 6.7549E-05, 4.00)],
}

GOLDEN = {c.key: c for c in [
    _case("ex1", 1, None, None,
          [("1/2", 2.6500E+00, None), ("1/4", 1.1246E-01, 4.56), ("1/8", 7.1938E-03, 3.97),
           ("1/16", 4.4988E-04, 4.00), ("1/32", 2.7960E-05, 4.01), ("1/64", 1.7536E-06, 4.00),
           ("1/128", 1.0957E-07, 4.00), ("1/256", 6.8480E-09, 4.00), ("1/512", 4.2893E-10, 4.00),
           ("1/1024", 3.0641E-11, 3.81)],
          desk=["1/8", "1/16", "1/32", "1/64", "1/128"]),
    _case("ex2-cn", 2, 1, _CN_TABLE, _T2["CN"], desk=["1/16", "1/32", "1/64"], loose=["1/16"]),
    _case("ex2-bdf3", 2, 1, _BDF3, _T2["BDF3"], desk=["1/32", "1/64", "1/128"], loose=["1/16"]),
    _case("ex2-bdf4", 2, 1, _BDF4, _T2["BDF4"], desk=["1/32", "1/64", "1/128"], loose=["1/16"]),
    _case("ex3-s1", 3, 1, None,
          [("1/4", 2.1759E-02, None), ("1/8", 3.5959E-03, 2.60), ("1/16", 5.2502E-04, 2.78),
           ("1/32", 5.6626E-05, 3.21), ("1/64", 4.6018E-06, 3.62), ("1/128", 3.2363E-07, 3.83),
           ("1/256", 2.1230E-08, 3.93), ("1/512", 1.3480E-09, 3.98), ("1/1024", 8.4491E-11, 4.00)],
          desk=["1/32", "1/64", "1/128"]),
    _case("ex3-s2", 3, 2, None,
          [("1/4", 6.3150E-03, None), ("1/8", 1.0915E-03, 2.53), ("1/16", 1.8267E-04, 2.58),
           ("1/32", 2.1998E-05, 3.05), ("1/64", 1.9364E-06, 3.51), ("1/128", 1.4022E-07, 3.79),
           ("1/256", 9.2721E-09, 3.92), ("1/512", 5.9108E-10, 3.97), ("1/1024", 3.7117E-11, 3.99)],
          desk=["1/32", "1/64", "1/128"]),
    _case("ex3-s3", 3, 3, None,
          [("1/8", 1.3093E-03, None), ("1/16", 2.0504E-04, 2.67), ("1/32", 2.3288E-05, 3.14),
           ("1/64", 1.9867E-06, 3.55), ("1/128", 1.4181E-07, 3.81), ("1/256", 9.3212E-09, 3.93),
           ("1/512", 5.9259E-10, 3.98), ("1/1024", 3.7164E-11, 4.00)],
          desk=["1/32", "1/64", "1/128"]),
    _case("ex4-bdf3", 4, 1, _BDF3,
          [("1/4", 7.8562E-03, None), ("1/8", 2.5242E-04, 4.96), ("1/16", 1.0415E-05, 4.60),
           ("1/32", 6.7493E-07, 3.95), ("1/64", 5.3259E-08, 3.66), ("1/128", 5.0304E-09, 3.40),
           ("1/256", 5.4984E-10, 3.19)],
          desk=["1/16", "1/32", "1/64"], rtol=0.10),
    _case("ex4-bdf4", 4, 1, _BDF4,
          [("1/4", 8.2860E-03, None), ("1/8", 2.4086E-04, 5.10), ("1/16", 1.2707E-05, 4.24),
           ("1/32", 1.0386E-06, 3.61), ("1/64", 1.0333E-07, 3.33), ("1/128", 1.1351E-08, 3.19),
           ("1/256", 1.3239E-09, 3.10)],
          desk=["1/16", "1/32", "1/64"], rtol=0.10),
    _case("ex5", 5, None, None,
          [("2/2", 2.6319E-01, None), ("2/4", 4.8038E-02, 2.45), ("2/8", 2.7194E-03, 4.14),
           ("2/16", 1.7121E-04, 3.99), ("2/32", 1.2266E-05, 3.80), ("2/64", 7.8650E-07, 3.96)],
          desk=["2/4", "2/8", "2/16"]),
    _case("ex6-s1", 6, 1, _BDF3,
          [("1/4", 7.5017E-03, None), ("1/8", 4.5961E-04, 4.03), ("1/16", 2.4235E-05, 4.25),
           ("1/32", 1.1298E-06, 4.42), ("1/64", 1.7630E-07, 2.68)],
          desk=["1/4", "1/8", "1/16"]),
    _case("ex6-s2", 6, 2, _BDF3,
          [("1/4", 7.7940E-03, None), ("1/8", 4.9376E-04, 3.98), ("1/16", 2.7746E-05, 4.15),
           ("1/32", 1.4141E-06, 4.29), ("1/64", 1.6087E-07, 3.14)],
          desk=["1/4", "1/8", "1/16"]),
    _case("ex6-s3", 6, 3, _BDF3,
          [("1/4", 7.8245E-03, None), ("1/8", 4.9331E-04, 3.99), ("1/16", 2.7480E-05, 4.17),
           ("1/32", 1.3825E-06, 4.31), ("1/64", 1.1719E-07, 3.56)],
          desk=["1/4", "1/8", "1/16"]),
    _case("ex6-s4", 6, 4, _BDF3,
          [("1/8", 4.9302E-04, None), ("1/16", 2.7478E-05, 4.17), ("1/32", 1.3824E-06, 4.31),
           ("1/64", 1.1723E-07, 3.56)],
          desk=["1/8", "1/16"]),
    _case("ex7-s1", 7, 1, None,
          [("2/4", 3.0534E-03, None), ("2/8", 3.0335E-04, 3.33), ("2/16", 2.7869E-05, 3.44),
           ("2/32", 2.8275E-06, 3.30), ("2/64", 3.0948E-07, 3.19)],
          desk=["2/4", "2/8", "2/16"]),
    _case("ex7-s2", 7, 2, None,
          [("2/4", 4.4444E-03, None), ("2/8", 2.5891E-04, 4.10), ("2/16", 1.7630E-05, 3.88),
           ("2/32", 1.0873E-06, 4.02), ("2/64", 6.8152E-08, 4.00)],
          desk=["2/8", "2/16", "2/32"]),
    _case("ex7-s3", 7, 3, None,
          [("2/8", 2.9907E-04, None), ("2/16", 1.9744E-05, 3.92), ("2/32", 1.2274E-06, 4.01),
           ("2/64", 7.6902E-08, 4.00)],
          desk=["2/8", "2/16"]),
    _case("ex8", 8, 1, _BDF4,
          [("1/4", 1.2255E-04, None), ("1/8", 5.8982E-06, 4.38), ("1/16", 2.5451E-07, 4.53),
           ("1/32", 3.6193E-08, 2.81), ("1/64", 4.7213E-09, 2.94)],
          desk=["1/4", "1/8", "1/16"], rtol=0.10),
]}


def golden_for(example: int, scheme: Optional[str] = None, setting: Optional[int] = None) -> GoldenCase:
    """The reference column for an example, scheme and setting."""
    matches = [c for c in GOLDEN.values() if c.example == int(example)]
    if scheme is not None:
        matches = [c for c in matches if c.scheme is None or c.scheme == scheme.upper()]
    if setting is not None:
        matches = [c for c in matches if c.setting is None or c.setting == int(setting)]
    if len(matches) != 1:
        raise ConfigError(
            f"no unique reference column for example {example}, scheme {scheme}, setting {setting}; "
            f"candidates: {sorted(c.key for c in matches)}"
        )
    return matches[0]


@dataclass(frozen=True)
class Mismatch:
    h: float
    field: str
    ours: Optional[float]
    reference: float
    tolerance: float

    def __str__(self):
        return (f"h={self.h:g} {self.field}: ours={self.ours} reference={self.reference} "
                f"(tolerance {self.tolerance:g})")


def compare(report, case: GoldenCase, order_tol: float = 0.3) -> list:
    """Rows of ``report`` that miss the reference error (relative) or order (absolute).

    Rows with no reference entry are skipped; orders are compared only when
    both sides have one.
    """
    out = []
    for row in report.rows:
        ref = case.row(row.h)
        if ref is None:
            continue
        if row.error is None or not math.isfinite(row.error) or abs(row.error - ref.error) > ref.rtol * ref.error:
            out.append(Mismatch(row.h, "error", row.error, ref.error, ref.rtol))
        if ref.order is not None and row.order is not None and abs(row.order - ref.order) > order_tol:
            out.append(Mismatch(row.h, "order", row.order, ref.order, order_tol))
    return out
