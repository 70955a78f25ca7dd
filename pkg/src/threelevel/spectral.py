"""Photon occupation spectra and the transition rates they induce.

A spectrum is described by its inverse-temperature function beta(omega),
with occupation ``N = scale / (exp(beta) - 1)``. A Gibbs field has
``beta(omega) = beta * omega``; anything else is a non-equilibrium field.
``scale`` is 1 for every spectrum of that form and only exists so a field
can be uniformly thinned (it breaks the beta <-> N correspondence).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .atom import ThreeLevelAtom, bohr_frequencies
from .errors import NonPositiveBetaError, UndefinedFrequencyError, ValidationError

KINDS = ("gibbs", "tabulated", "per-frequency")
POLARIZATIONS = ("lr", "ud")

# relative tolerance for matching a query against a per-frequency key
FREQ_MATCH_RTOL = 1e-9


@dataclass(frozen=True)
class OccupationSpectrum:
    kind: str
    beta: float | None = None
    points: tuple = field(default=())
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown spectrum kind {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValidationError(f"scale must be positive, got {self.scale!r}")
        if self.kind == "gibbs":
            if self.beta is None or not (self.beta > 0 and math.isfinite(self.beta)):
                raise NonPositiveBetaError(f"gibbs spectrum needs beta > 0, got {self.beta!r}")
            return
        pts = tuple(sorted((float(w), float(b)) for w, b in self.points))
        if not pts:
            raise ValidationError(f"{self.kind} spectrum needs at least one (omega, beta) point")
        ws = [w for w, _ in pts]
        if any(w <= 0 for w in ws):
            raise UndefinedFrequencyError(f"frequencies must be positive: {ws}")
        if any(hi <= lo for lo, hi in zip(ws[:-1], ws[1:])):
            raise ValidationError(f"frequencies must be distinct: {ws}")
        object.__setattr__(self, "points", pts)

    def beta_at(self, omega: float) -> float:
        """beta(omega); raises if omega is outside the spectrum's domain."""
        if not omega > 0:
            raise UndefinedFrequencyError(f"omega must be positive, got {omega!r}")
        if self.kind == "gibbs":
            return self.beta * omega
        ws = [w for w, _ in self.points]
        if self.kind == "per-frequency":
            for w, b in self.points:
                if abs(w - omega) <= FREQ_MATCH_RTOL * max(w, omega):
                    return b
            raise UndefinedFrequencyError(f"no beta given at omega={omega!r} (have {ws})")
        # tabulated: linear interpolation, no extrapolation
        if omega < ws[0] or omega > ws[-1]:
            raise UndefinedFrequencyError(
                f"omega={omega!r} outside tabulated range [{ws[0]}, {ws[-1]}]")
        return float(np.interp(omega, ws, [b for _, b in self.points]))

    def occupation(self, omega: float) -> float:
        b = self.beta_at(omega)
        if not b > 0:
            raise NonPositiveBetaError(f"beta({omega!r}) = {b!r} <= 0")
        # e^-b / (1 - e^-b) stays finite for large b, unlike 1/expm1(b)
        return self.scale * math.exp(-b) / -math.expm1(-b)

    def scaled(self, s: float) -> OccupationSpectrum:
        return OccupationSpectrum(self.kind, self.beta, self.points, self.scale * s)


def gibbs(beta: float) -> OccupationSpectrum:
    return OccupationSpectrum("gibbs", beta=float(beta))


def per_frequency(pairs) -> OccupationSpectrum:
    """``pairs`` is a mapping omega -> beta or a sequence of (omega, beta)."""
    if hasattr(pairs, "items"):
        pairs = pairs.items()
    return OccupationSpectrum("per-frequency", points=tuple(pairs))


def tabulated(points) -> OccupationSpectrum:
    return OccupationSpectrum("tabulated", points=tuple(points))


class Spectra(NamedTuple):
    """Independent spectra for the two polarizations."""
    lr: OccupationSpectrum
    ud: OccupationSpectrum

    @classmethod
    def shared(cls, spectrum: OccupationSpectrum) -> Spectra:
        return cls(spectrum, spectrum)


def occupation(spectra, sigma: str, omega: float) -> float:
    """Occupation number N_sigma(omega) >= 0.

    ``spectra`` may be a :class:`Spectra` pair or a single spectrum used
    for either polarization.
    """
    if isinstance(spectra, Spectra):
        if sigma not in POLARIZATIONS:
            raise ValidationError(f"unknown polarization {sigma!r}")
        spectra = getattr(spectra, sigma)
    return spectra.occupation(omega)


@dataclass(frozen=True)
class RateSet:
    """Down (minus) and up (plus) rates of the three allowed channels.

    ``minusIJ`` is emission i -> j, ``plusIJ`` absorption j -> i.
    """

    minus21: float
    plus21: float
    minus31: float
    plus31: float
    minus32: float
    plus32: float

    def __post_init__(self):
        for name, v in self.items():
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"rate {name} must be finite and >= 0, got {v!r}")

    def items(self):
        return [(k, getattr(self, k)) for k in RATE_FIELDS]

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in RATE_FIELDS])

    def minus(self, t: str) -> float:
        return getattr(self, "minus" + t)

    def plus(self, t: str) -> float:
        return getattr(self, "plus" + t)

    def scale_channel(self, t: str, s: float) -> RateSet:
        """Both rates of channel ``t`` multiplied by ``s``."""
        d = dict(self.items())
        d["minus" + t] *= s
        d["plus" + t] *= s
        return RateSet(**d)


RATE_FIELDS = ("minus21", "plus21", "minus31", "plus31", "minus32", "plus32")


def rates(atom: ThreeLevelAtom, spectra) -> RateSet:
    """Rates ``k*(N+1)`` down and ``k*N`` up for each allowed channel.

    A channel with zero coupling carries exactly zero rates and its
    spectrum is never queried.
    """
    if not isinstance(atom, ThreeLevelAtom):
        raise ValidationError("rates() needs a validated ThreeLevelAtom")
    if not isinstance(spectra, Spectra):
        spectra = Spectra.shared(spectra)
    w = bohr_frequencies(atom)
    omegas = {"21": w.w21, "31": w.w31, "32": w.w32}
    pol = {"21": spectra.lr, "31": spectra.ud, "32": spectra.ud}
    out = {}
    for t in ("21", "31", "32"):
        k = atom.couplings[t]
        if k == 0.0:
            out["minus" + t] = out["plus" + t] = 0.0
            continue
        n = pol[t].occupation(omegas[t])
        out["minus" + t] = k * (n + 1.0)
        out["plus" + t] = k * n
    return RateSet(**out)
