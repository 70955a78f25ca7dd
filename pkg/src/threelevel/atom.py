"""Three-level atom with polarization selection rules.

Only three radiative channels exist:

    2 <-> 1   coupled to the transverse (lr, "↔") field
    3 <-> 1   coupled to the longitudinal (ud, "↕") field
    3 <-> 2   coupled to the longitudinal (ud, "↕") field

The forbidden channels (2-1 on ud, 3-1 and 3-2 on lr) have no coupling
slot at all, so they cannot be switched on by accident.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidAtomError

# Bohr frequencies closer than this (relative) count as degenerate.
DEGENERACY_RTOL = 1e-9

TRANSITIONS = ("21", "31", "32")
POLARIZATION = {"21": "lr", "31": "ud", "32": "ud"}


class Diagnostic(NamedTuple):
    code: str
    detail: str


class BohrFrequencies(NamedTuple):
    w21: float
    w31: float
    w32: float


def diagnose(energies, couplings) -> list[Diagnostic]:
    """Return every violated invariant; an empty list means the atom is valid."""
    out = []
    e = tuple(float(x) for x in energies)
    if len(e) != 3:
        return [Diagnostic("wrong-level-count", f"expected 3 energies, got {len(e)}")]
    if not all(math.isfinite(x) for x in e):
        out.append(Diagnostic("non-finite-energy", f"energies={e}"))
    elif not (e[0] < e[1] < e[2]):
        out.append(Diagnostic("non-increasing-energies", f"energies={e}"))
    else:
        w21, w32 = e[1] - e[0], e[2] - e[1]
        if abs(w21 - w32) <= DEGENERACY_RTOL * max(w21, w32):
            out.append(Diagnostic(
                "degenerate-bohr-frequencies",
                f"w21={w21!r} and w32={w32!r} coincide"))

    for name in TRANSITIONS:
        if name not in couplings:
            out.append(Diagnostic("missing-coupling", f"k{name} not given"))
            continue
        k = float(couplings[name])
        if not math.isfinite(k):
            out.append(Diagnostic("non-finite-coupling", f"k{name}={k!r}"))
        elif k < 0:
            out.append(Diagnostic("negative-coupling", f"k{name}={k!r}"))
    extra = set(couplings) - set(TRANSITIONS)
    if extra:
        out.append(Diagnostic(
            "forbidden-transition",
            f"couplings {sorted(extra)} violate the selection rules"))
    return out


@dataclass(frozen=True)
class ThreeLevelAtom:
    """Level energies (hbar = 1) and one coupling constant per allowed channel.

    ``couplings`` maps ``"21"``, ``"31"``, ``"32"`` to nonnegative constants
    (inverse time). A coupling absorbs the on-shell integral of the squared
    form factor, so the rates are ``k*(N+1)`` (down) and ``k*N`` (up).
    """

    energies: tuple
    couplings: dict

    def __post_init__(self):
        diags = diagnose(self.energies, self.couplings)
        if diags:
            raise InvalidAtomError(diags)
        object.__setattr__(self, "energies", tuple(float(x) for x in self.energies))
        object.__setattr__(
            self, "couplings", {k: float(self.couplings[k]) for k in TRANSITIONS})

    def __hash__(self):
        return hash((self.energies, tuple(self.couplings[k] for k in TRANSITIONS)))

    @property
    def bohr(self) -> BohrFrequencies:
        return bohr_frequencies(self)

    def with_couplings(self, **kw) -> ThreeLevelAtom:
        c = dict(self.couplings)
        c.update({k.lstrip("k"): v for k, v in kw.items()})
        return ThreeLevelAtom(self.energies, c)


def validate(energies, couplings) -> ThreeLevelAtom:
    """Build an atom, raising :class:`InvalidAtomError` listing all problems."""
    return ThreeLevelAtom(tuple(energies), dict(couplings))


def bohr_frequencies(atom: ThreeLevelAtom) -> BohrFrequencies:
    e1, e2, e3 = atom.energies
    w21 = e2 - e1
    w32 = e3 - e2
    # w31 is built from the other two so the energy ledger closes exactly
    return BohrFrequencies(w21, w21 + w32, w32)
