"""YAML scenario files.

Layout (all sections except ``atom`` and ``spectra`` optional)::

    atom:
      energies: [0.0, 1.0, 3.0]
      couplings: {k21: 1.0, k31: 1.0, k32: 1.0}
    spectra:
      lr: {kind: per-frequency, beta: {w21: 1.0, w31: 2.5, w32: 2.0}}
      ud: {same_as: lr}
    initial: [1.0, 0.0, 0.0]
    integration: {t_end: 40.0, dt: null, tol: 1.0e-8, sample_every: 1}
    output: {trajectory: trajectory.csv, report: null}
    sweep:
      workers: 1
      params:
        - {path: spectra.lr.beta.w31, grid: {start: 2.0, stop: 4.0, num: 101}}

Spectrum kinds: ``gibbs`` (``beta``: scalar), ``per-frequency`` (``beta``:
mapping from ``w21``/``w31``/``w32`` or a number to beta; must cover all
three Bohr frequencies), ``tabulated`` (``points``: increasing
``[omega, beta]`` pairs, linearly interpolated). Any spectrum may carry a
``scale`` multiplying its occupation. ``same_as: lr`` copies the lr
section, with any other keys overriding.
"""
from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .atom import ThreeLevelAtom, bohr_frequencies
from .errors import ConfigError, ModelError
from .kinetics import make_state
from .spectral import OccupationSpectrum, Spectra, rates as make_rates

BOHR_LABELS = ("w21", "w31", "w32")


def default_config_path() -> Path:
    return Path(str(resources.files("threelevel") / "data" / "default.yaml"))


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return cfg


def _section(cfg: dict, name: str, required=True) -> dict:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section '{name}'")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return sec


def build_atom(sec: dict) -> ThreeLevelAtom:
    try:
        energies = [float(x) for x in sec["energies"]]
        raw = sec.get("couplings", {})
        couplings = {str(k).lstrip("k"): float(v) for k, v in raw.items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"atom: {exc}") from exc
    return ThreeLevelAtom(tuple(energies), couplings)


def _resolve_omega(key, atom: ThreeLevelAtom) -> float:
    w = bohr_frequencies(atom)
    if isinstance(key, str) and key in BOHR_LABELS:
        return getattr(w, key)
    try:
        return float(key)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad frequency key {key!r}") from exc


def build_spectrum(sec: dict, atom: ThreeLevelAtom) -> OccupationSpectrum:
    kind = sec.get("kind")
    scale = float(sec.get("scale", 1.0))
    try:
        if kind == "gibbs":
            return OccupationSpectrum("gibbs", beta=float(sec["beta"]), scale=scale)
        if kind == "per-frequency":
            beta = sec["beta"]
            if not isinstance(beta, dict):
                raise ConfigError("per-frequency 'beta' must be a mapping")
            pts = [(_resolve_omega(k, atom), float(v)) for k, v in beta.items()]
            spec = OccupationSpectrum("per-frequency", points=tuple(pts), scale=scale)
            for w in bohr_frequencies(atom):
                spec.beta_at(w)
            return spec
        if kind == "tabulated":
            pts = [(float(w), float(b)) for w, b in sec["points"]]
            ws = [w for w, _ in pts]
            if any(b <= a for a, b in zip(ws[:-1], ws[1:])):
                raise ConfigError(f"tabulated points must have increasing omega: {ws}")
            return OccupationSpectrum("tabulated", points=tuple(pts), scale=scale)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ConfigError(f"spectrum {sec!r}: {exc}") from exc
    raise ConfigError(f"unknown spectrum kind {kind!r}")


def build_spectra(sec: dict, atom: ThreeLevelAtom) -> Spectra:
    raw = {}
    for pol in ("lr", "ud"):
        s = sec.get(pol)
        if not isinstance(s, dict):
            raise ConfigError(f"spectra.{pol} must be a mapping")
        raw[pol] = s
    for pol, other in (("lr", "ud"), ("ud", "lr")):
        ref = raw[pol].get("same_as")
        if ref is not None:
            if ref != other or "same_as" in raw[other]:
                raise ConfigError(f"spectra.{pol}.same_as must name the other polarization")
            merged = dict(raw[other])
            merged.update({k: v for k, v in raw[pol].items() if k != "same_as"})
            raw[pol] = merged
    return Spectra(build_spectrum(raw["lr"], atom), build_spectrum(raw["ud"], atom))


@dataclass
class Scenario:
    atom: ThreeLevelAtom
    spectra: Spectra
    initial: np.ndarray
    t_end: float = 40.0
    dt: float | None = None
    tol: float = 1e-8
    sample_every: int = 1
    trajectory_path: str | None = None
    report_path: str | None = None
    config: dict = field(default_factory=dict, repr=False)

    @property
    def rates(self):
        return make_rates(self.atom, self.spectra)


def scenario_from_dict(cfg: dict) -> Scenario:
    """Build and fully validate a scenario; nothing is computed on failure."""
    atom = build_atom(_section(cfg, "atom"))
    spectra = build_spectra(_section(cfg, "spectra"), atom)
    # every occupation the rates need is evaluated (and checked) here
    make_rates(atom, spectra)
    initial = make_state(cfg.get("initial", [1.0, 0.0, 0.0]))
    integ = _section(cfg, "integration", required=False)
    out = _section(cfg, "output", required=False)
    try:
        dt = integ.get("dt")
        sc = Scenario(
            atom=atom, spectra=spectra, initial=initial,
            t_end=float(integ.get("t_end", 40.0)),
            dt=None if dt is None else float(dt),
            tol=float(integ.get("tol", 1e-8)),
            sample_every=int(integ.get("sample_every", 1)),
            trajectory_path=out.get("trajectory"),
            report_path=out.get("report"),
            config=cfg,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"integration: {exc}") from exc
    if sc.t_end < 0:
        raise ConfigError("integration.t_end must be >= 0")
    if sc.tol < 0:
        raise ConfigError("integration.tol must be >= 0")
    return sc


def load_scenario(path) -> Scenario:
    return scenario_from_dict(load_config(path))


def set_path(cfg: dict, path: str, value):
    """Assign ``value`` at a dotted path, creating intermediate mappings."""
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        nxt = node.get(k)
        if nxt is None:
            nxt = node[k] = {}
        if not isinstance(nxt, dict):
            raise ConfigError(f"cannot descend into '{k}' of path {path!r}")
        node = nxt
    node[keys[-1]] = value


@dataclass
class SweepSpec:
    template: dict
    params: list  # [(path, values)]
    workers: int = 1
    out: str | None = None

    def points(self):
        """Grid points in deterministic order (first parameter outermost)."""
        return list(itertools.product(*[vals for _, vals in self.params]))

    def config_at(self, values) -> dict:
        cfg = copy.deepcopy(self.template)
        cfg.pop("sweep", None)
        for (path, _), v in zip(self.params, values):
            set_path(cfg, path, v)
        return cfg


def _grid(spec) -> list[float]:
    if "values" in spec:
        vals = [float(v) for v in spec["values"]]
    elif "grid" in spec:
        g = spec["grid"]
        num = int(g["num"])
        if g.get("log", False):
            vals = np.geomspace(float(g["start"]), float(g["stop"]), num).tolist()
        else:
            vals = np.linspace(float(g["start"]), float(g["stop"]), num).tolist()
    else:
        raise ConfigError("sweep parameter needs 'values' or 'grid'")
    if not vals:
        raise ConfigError("sweep grid is empty")
    d = np.diff(vals)
    if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError(f"sweep grid must be strictly monotone: {vals}")
    return vals


def sweep_from_dict(cfg: dict) -> SweepSpec:
    sec = _section(cfg, "sweep")
    params = sec.get("params")
    if not params or not isinstance(params, list):
        raise ConfigError("sweep.params must be a nonempty list")
    if len(params) > 2:
        raise ConfigError("at most two swept parameters")
    try:
        parsed = [(str(p["path"]), _grid(p)) for p in params]
        workers = int(sec.get("workers", 1))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ConfigError(f"sweep: {exc}") from exc
    if workers < 1:
        raise ConfigError("sweep.workers must be >= 1")
    out = _section(cfg, "output", required=False).get("sweep")
    return SweepSpec(template=cfg, params=parsed, workers=workers, out=out)
