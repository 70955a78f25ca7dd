"""Time integration of the atomic rate equations and photon bookkeeping.

Populations obey ``dP/dt = M P`` with the generator ``M`` below (the factor
2 of the kinetic equations is kept). Photon numbers are carried as
deviations from t = 0, one counter per transition; the two polarization
counters are sums of those (``dn_lr = n21``, ``dn_ud = n31 + n32``).
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .atom import ThreeLevelAtom, bohr_frequencies
from .errors import InvalidStateError, UnstableStepError, ValidationError
from .spectral import RateSet, rates as make_rates

log = logging.getLogger(__name__)

SIMPLEX_TOL = 1e-12
STABILITY_LIMIT = 0.5
DEFAULT_STEP_FRACTION = 0.01

CSV_HEADER = ("t", "P1", "P2", "P3", "dn_lr", "dn_ud",
              "f21", "f31", "f32", "E_atom", "E_field_delta")


def fmt(x) -> str:
    """Round-trippable float text (17 significant digits)."""
    return format(float(x), ".17g")


def make_state(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate a population vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise InvalidStateError(f"state must be 3 finite numbers, got {p!r}")
    if np.any(p < 0):
        raise InvalidStateError(f"negative population in {p.tolist()}")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidStateError(f"populations sum to {p.sum()!r}, not 1")
    return p


def generator(r: RateSet) -> np.ndarray:
    """3x3 matrix ``M`` with ``dP/dt = M @ P``; columns sum to zero."""
    m = 2.0 * np.array([
        [-(r.plus21 + r.plus31), r.minus21, r.minus31],
        [r.plus21, -(r.minus21 + r.plus32), r.minus32],
        [r.plus31, r.plus32, -(r.minus32 + r.minus31)],
    ])
    return m


def max_exit_rate(r: RateSet) -> float:
    return float(np.max(-np.diag(generator(r))))


def rhs(state, r: RateSet) -> np.ndarray:
    p1, p2, p3 = state
    d1 = -2 * (r.plus21 * p1 + r.plus31 * p1) + 2 * (r.minus21 * p2 + r.minus31 * p3)
    d2 = -2 * (r.minus21 * p2 + r.plus32 * p2) + 2 * (r.minus32 * p3 + r.plus21 * p1)
    d3 = -2 * (r.minus32 * p3 + r.minus31 * p3) + 2 * (r.plus31 * p1 + r.plus32 * p2)
    return np.array([d1, d2, d3])


def _flux_matrix(r: RateSet) -> np.ndarray:
    """Rows give f21, f31, f32 as linear functions of P."""
    return 2.0 * np.array([
        [-r.plus21, r.minus21, 0.0],
        [-r.plus31, 0.0, r.minus31],
        [0.0, -r.plus32, r.minus32],
    ])


@dataclass(frozen=True)
class FluxRecord:
    f21: float
    f31: float
    f32: float
    dn_lr: float
    dn_ud: float
    atom_energy_rate: float
    field_energy_rate: float


def fluxes(state, r: RateSet, atom: ThreeLevelAtom) -> FluxRecord:
    """Net photon emission rates per transition plus the two energy rates."""
    p1, p2, p3 = state
    f21 = 2 * (r.minus21 * p2 - r.plus21 * p1)
    f31 = 2 * (r.minus31 * p3 - r.plus31 * p1)
    f32 = 2 * (r.minus32 * p3 - r.plus32 * p2)
    w = bohr_frequencies(atom)
    dp = rhs(state, r)
    atom_rate = float(np.dot(atom.energies, dp))
    field_rate = w.w21 * f21 + w.w31 * f31 + w.w32 * f32
    return FluxRecord(f21, f31, f32, f21, f31 + f32, atom_rate, field_rate)


@dataclass
class Trajectory:
    """Samples of an integrated run.

    ``photons[:, k]`` holds the per-transition photon deviations
    (n21, n31, n32); every sample row lines up with ``t`` and ``P``.
    """

    atom: ThreeLevelAtom
    rates: RateSet
    t: np.ndarray
    P: np.ndarray
    photons: np.ndarray
    dt: float
    max_renormalization: float = 0.0
    max_simplex_drift: float = 0.0

    def __len__(self):
        return len(self.t)

    @property
    def dn_lr(self):
        return self.photons[:, 0]

    @property
    def dn_ud(self):
        return self.photons[:, 1] + self.photons[:, 2]

    @property
    def flux(self) -> np.ndarray:
        """(n, 3) array of f21, f31, f32 at every sample."""
        return self.P @ _flux_matrix(self.rates).T

    @property
    def dPdt(self) -> np.ndarray:
        return self.P @ generator(self.rates).T

    @property
    def E_atom(self):
        return self.P @ np.asarray(self.atom.energies)

    @property
    def E_field_delta(self):
        return self.photons @ np.asarray(bohr_frequencies(self.atom))

    @property
    def final_state(self) -> np.ndarray:
        return self.P[-1].copy()

    def flux_record(self, i: int = -1) -> FluxRecord:
        return fluxes(self.P[i], self.rates, self.atom)

    def energy_violation(self) -> float:
        """max |E_atom + dE_field - E(0)| using the integrated photon counters."""
        total = self.E_atom + self.E_field_delta
        return float(np.max(np.abs(total - total[0])))

    def quadrature_energy_violation(self) -> float:
        """Same ledger, with the field energy rebuilt from the sampled fluxes.

        The field term is the cumulative Simpson integral of
        ``sum_t omega_t f_t`` over the stored samples, so it does not reuse
        the integrator's photon counters. Needs an unthinned trajectory.
        """
        if len(self.t) < 3:
            return 0.0
        rate = self.flux @ np.asarray(bohr_frequencies(self.atom))
        field = cumulative_simpson(rate, x=self.t, initial=0.0)
        total = self.E_atom + field
        return float(np.max(np.abs(total - total[0])))

    def photon_integral_error(self) -> float:
        """max deviation between stored photon counters and the flux integral."""
        if len(self.t) < 3:
            return 0.0
        integ = cumulative_simpson(self.flux, x=self.t, axis=0, initial=0.0)
        return float(np.max(np.abs(integ - self.photons)))

    def rows(self):
        flux = self.flux
        e_atom = self.E_atom
        e_field = self.E_field_delta
        dn_lr, dn_ud = self.dn_lr, self.dn_ud
        for i in range(len(self.t)):
            yield (self.t[i], *self.P[i], dn_lr[i], dn_ud[i], *flux[i], e_atom[i], e_field[i])

    def to_csv(self, fh=None) -> str | None:
        """Write the trajectory CSV to ``fh``; return it as text if ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows():
            w.writerow([fmt(x) for x in row])
        if fh is None:
            return buf.getvalue()
        return None


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(atom: ThreeLevelAtom, spectra, initial, t_end: float,
              dt: float | None = None, sample_every: int = 1) -> Trajectory:
    """Classical fixed-step RK4 for populations and photon counters.

    ``spectra`` is a :class:`Spectra` pair, a single shared spectrum, or an
    already computed :class:`RateSet`. The step actually used is
    ``t_end / ceil(t_end / dt)`` so the last sample lands on ``t_end``.
    ``dt`` defaults to ``0.01 / max_exit_rate``.
    """
    r = spectra if isinstance(spectra, RateSet) else make_rates(atom, spectra)
    p0 = make_state(initial)
    if not (t_end >= 0 and math.isfinite(t_end)):
        raise ValidationError(f"t_end must be finite and >= 0, got {t_end!r}")
    if sample_every < 1:
        raise ValidationError("sample_every must be >= 1")

    exit_rate = max_exit_rate(r)
    if dt is None:
        dt = DEFAULT_STEP_FRACTION / exit_rate if exit_rate > 0 else max(t_end, 1.0)
    if not (dt > 0 and math.isfinite(dt)):
        raise ValidationError(f"dt must be positive, got {dt!r}")
    if dt * exit_rate >= STABILITY_LIMIT:
        raise UnstableStepError(
            f"dt*max_exit_rate = {dt * exit_rate:.6g} >= {STABILITY_LIMIT}")

    n_steps = math.ceil(t_end / dt - 1e-12) if t_end > 0 else 0
    h = t_end / n_steps if n_steps else dt

    # augmented linear system y = (P1, P2, P3, n21, n31, n32)
    a = np.zeros((6, 6))
    a[:3, :3] = generator(r)
    a[3:, :3] = _flux_matrix(r)

    def f(y):
        return a @ y

    y = np.concatenate([p0, np.zeros(3)])
    ts, ys = [0.0], [y.copy()]
    max_fix = 0.0
    max_drift = 0.0
    for k in range(1, n_steps + 1):
        y = _rk4_step(f, y, h)
        drift = abs(y[:3].sum() - 1.0)
        max_drift = max(max_drift, drift)
        if drift > SIMPLEX_TOL:
            y[:3] /= y[:3].sum()
            max_fix = max(max_fix, drift)
            log.warning("step %d: renormalized populations, |sum-1| = %.3e", k, drift)
        if k % sample_every == 0 or k == n_steps:
            ts.append(k * h)
            ys.append(y.copy())

    ys = np.array(ys)
    return Trajectory(atom=atom, rates=r, t=np.array(ts), P=ys[:, :3],
                      photons=ys[:, 3:], dt=h, max_renormalization=max_fix,
                      max_simplex_drift=max_drift)


def stationarity_reached(traj: Trajectory, tol: float):
    """``(reached, final_state)``; reached iff ``max|dP/dt| < tol`` at the end."""
    if len(traj) == 0:
        raise ValidationError("empty trajectory")
    p = traj.final_state
    return bool(np.max(np.abs(rhs(p, traj.rates))) < tol), p
