"""Stationary populations, the continuous-emission condition and its limits.

The stationary ratios come from the closed-form rate quotients; a dense
linear solve of ``M P = 0, sum(P) = 1`` is kept as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atom import ThreeLevelAtom, bohr_frequencies
from .errors import NotApplicableError, NumericalError, ReducibleSystemError
from .kinetics import fmt, generator
from .spectral import OccupationSpectrum, RateSet, Spectra, rates as make_rates

# |margin| below this (relative) is treated as exact balance
BALANCE_RTOL = 1e-12
RATIO_CONSISTENCY_RTOL = 1e-12

DETAILED = "detailed-balance"
DISTORTED = "distorted-balance"


@dataclass(frozen=True)
class StationaryReport:
    P_inf: tuple
    ratios: tuple  # (P2/P1, P3/P1, P3/P2)
    emission_rate: float
    condition_rate_form: bool
    condition_beta_form: bool | None
    balance_class: str

    def as_dict(self) -> dict:
        p1, p2, p3 = self.P_inf
        r21, r31, r32 = self.ratios
        beta_form = "n/a" if self.condition_beta_form is None else _b(self.condition_beta_form)
        return {
            "P1": fmt(p1), "P2": fmt(p2), "P3": fmt(p3),
            "P2_over_P1": fmt(r21), "P3_over_P1": fmt(r31), "P3_over_P2": fmt(r32),
            "emission_rate": fmt(self.emission_rate),
            "condition_rate_form": _b(self.condition_rate_form),
            "condition_beta_form": beta_form,
            "balance_class": self.balance_class,
        }

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.as_dict().items())

    def csv_row(self) -> list[str]:
        return list(self.as_dict().values())


REPORT_COLUMNS = ("P1", "P2", "P3", "P2_over_P1", "P3_over_P1", "P3_over_P2",
                  "emission_rate", "condition_rate_form", "condition_beta_form",
                  "balance_class")


def _b(x: bool) -> str:
    return "true" if x else "false"


def _require_positive(r: RateSet):
    zero = [name for name, v in r.items() if not v > 0]
    if zero:
        raise ReducibleSystemError(f"rates {zero} are zero; all six channels must be active")


def stationary_ratios(r: RateSet) -> tuple[float, float, float]:
    """(P2/P1, P3/P1, P3/P2) from the three rate quotients, each computed
    on its own."""
    _require_positive(r)
    m21, p21 = r.minus21, r.plus21
    m31, p31 = r.minus31, r.plus31
    m32, p32 = r.minus32, r.plus32
    r21 = (m31 * p21 + m32 * p21 + p31 * m32) / (m31 * m21 + m31 * p32 + m32 * m21)
    r31 = (p31 * m21 + p32 * p21 + p31 * p32) / (m32 * m21 + m31 * m21 + m31 * p32)
    r32 = (p32 * p21 + p31 * m21 + p32 * p31) / (m31 * p21 + m32 * p21 + p31 * m32)
    if not math.isclose(r31, r32 * r21, rel_tol=RATIO_CONSISTENCY_RTOL):
        raise NumericalError(f"inconsistent ratios: {r31!r} != {r32!r} * {r21!r}")
    return r21, r31, r32


def emission_margin(r: RateSet) -> float:
    """log of [(up31/down31)(down32/up32)] / (up21/down21).

    Positive when the atom keeps emitting lr photons at stationarity; zero
    for a Gibbs field.
    """
    _require_positive(r)
    return (math.log(r.plus31) - math.log(r.minus31)
            + math.log(r.minus32) - math.log(r.plus32)
            - math.log(r.plus21) + math.log(r.minus21))


def _margin_scale(r: RateSet) -> float:
    return max(1.0, max(abs(math.log(v)) for _, v in r.items()))


def emission_condition(r: RateSet) -> bool:
    """True iff up21/down21 < (up31/down31)(down32/up32), strictly.

    Sides agreeing to ``BALANCE_RTOL`` count as equal (not emitting).
    """
    return emission_margin(r) > BALANCE_RTOL * _margin_scale(r)


def _beta_fn(beta) -> Callable[[float], float]:
    if isinstance(beta, Spectra):
        raise TypeError("pass shared_beta(spectra, atom) for a spectrum pair")
    if isinstance(beta, OccupationSpectrum):
        if beta.scale != 1.0:
            raise NotApplicableError("a scaled spectrum has no beta function")
        return beta.beta_at
    return beta


def emission_condition_beta(beta, atom: ThreeLevelAtom) -> bool:
    """True iff beta(w31) < beta(w32) + beta(w21), for a beta function
    shared by both polarizations.

    ``beta`` is a callable or an :class:`OccupationSpectrum`; a
    :class:`Spectra` pair is accepted only if both members coincide.
    """
    if isinstance(beta, Spectra):
        beta = shared_beta(beta, atom)
        if beta is None:
            raise NotApplicableError("lr and ud spectra differ; no shared beta")
    fn = _beta_fn(beta)
    w = bohr_frequencies(atom)
    b21, b31, b32 = fn(w.w21), fn(w.w31), fn(w.w32)
    margin = b21 + b32 - b31
    scale = max(1.0, abs(b21), abs(b31), abs(b32))
    return margin > BALANCE_RTOL * scale


def shared_beta(spectra: Spectra, atom: ThreeLevelAtom):
    """The common beta function if both polarizations agree at all three
    Bohr frequencies, else None."""
    lr, ud = spectra
    if lr == ud:
        return None if lr.scale != 1.0 else lr.beta_at
    if lr.scale != 1.0 or ud.scale != 1.0:
        return None
    try:
        same = all(lr.beta_at(w) == ud.beta_at(w) for w in bohr_frequencies(atom))
    except Exception:
        return None
    return lr.beta_at if same else None


def emission_rate(p, r: RateSet) -> float:
    return 2.0 * (r.minus21 * p[1] - r.plus21 * p[0])


def classify(rate: float, r: RateSet) -> str:
    if abs(rate) < BALANCE_RTOL * (r.minus21 + r.plus21):
        return DETAILED
    return DISTORTED


def stationary_closed_form(r: RateSet, condition_beta_form: bool | None = None) -> StationaryReport:
    r21, r31, r32 = stationary_ratios(r)
    z = 1.0 + r21 + r31
    p = (1.0 / z, r21 / z, r31 / z)
    f = emission_rate(p, r)
    return StationaryReport(
        P_inf=p,
        ratios=(r21, r31, r32),
        emission_rate=f,
        condition_rate_form=emission_condition(r),
        condition_beta_form=condition_beta_form,
        balance_class=classify(f, r),
    )


def stationary_report(atom: ThreeLevelAtom, spectra) -> StationaryReport:
    """Closed-form report, with the beta-form condition filled in when the
    two polarizations share one beta function."""
    if not isinstance(spectra, Spectra):
        spectra = Spectra.shared(spectra)
    r = make_rates(atom, spectra)
    fn = shared_beta(spectra, atom)
    beta_form = None if fn is None else emission_condition_beta(fn, atom)
    return stationary_closed_form(r, beta_form)


def stationary_null_space(r: RateSet) -> np.ndarray:
    """Stationary populations from a dense solve of ``M P = 0, sum P = 1``."""
    m = generator(r)
    scale = np.max(np.abs(m))
    if scale == 0 or np.linalg.matrix_rank(m, tol=1e-12 * scale) < 2:
        raise ReducibleSystemError("generator kernel is more than one-dimensional")
    a = m.copy()
    a[2, :] = 1.0
    p = np.linalg.solve(a, np.array([0.0, 0.0, 1.0]))
    if np.any(p < -1e-14):
        raise NumericalError(f"null-space solve gave negative populations {p}")
    return np.clip(p, 0.0, None)


def double_einstein_limit(r: RateSet) -> tuple[float, float, float]:
    """Approximate (P2/P1, P3/P1, P3/P2) when the lr channel is negligible
    next to the ud pumping channels. Uses only the ud rates."""
    for name in ("minus31", "plus31", "minus32", "plus32"):
        if not getattr(r, name) > 0:
            raise ReducibleSystemError(f"{name} must be positive")
    r31 = r.plus31 / r.minus31
    r32 = r.plus32 / r.minus32
    return r31 / r32, r31, r32


def double_einstein_from_occupations(n31: float, n32: float) -> tuple[float, float, float]:
    """Same limit written with the ud occupations at w31 and w32."""
    r31 = n31 / (n31 + 1.0)
    r32 = n32 / (n32 + 1.0)
    return (n31 / (n31 + 1.0)) * ((n32 + 1.0) / n32), r31, r32
