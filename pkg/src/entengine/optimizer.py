"""Parameter sweeps: fidelity/success-probability fronts and temperature grids.

Couplings are parametrized by the ratios ``a = gamma_h/gamma_c`` and
``b = g/gamma_c``.  Because the free Hamiltonian commutes with the rest of the
Liouvillian at resonance, the steady state depends on the couplings only
through these ratios, so each grid point is realized with the largest of
``(gamma_h, gamma_c, g)`` placed on the weak-coupling bound ``1e-2 * delta_min``.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import bell
from .builder import (MAX_QUTRITS, WEAK_COUPLING_FACTOR, CapacityError, MachineSpec, cluster_machine,
                      dicke_machine, ghz_machine)
from .dynamics import DegenerateSteadyStateError, LiouvillianParts, build_liouvillian, steady_state
from .filtering import HeraldNeverFiresError, apply_filter, fidelity, filter_projector

log = logging.getLogger(__name__)

RATIO_H_RANGE = (1e-6, 1e3)
RATIO_G_RANGE = (1e-3, 1e3)
DEFAULT_RESOLUTION = 25
REFINE_ITERATIONS = 20
REFINE_STEP = 1.3
REFINE_SHRINK = 0.7
REFINE_LAMBDAS = (0.0, 0.25, 1.0, 4.0)

FRONT_COLUMNS = ("machine", "N", "l", "gamma_h", "gamma_c", "g", "p_suc", "fidelity")
TEMPERATURE_COLUMNS = ("machine", "N", "model", "T_h", "T_c", "p_suc", "fidelity")


@dataclass(frozen=True)
class MachineFamily:
    kind: str
    n: int = 0
    l: int | None = None

    def __post_init__(self):
        if self.kind not in ("ghz", "dicke", "cluster"):
            raise ValueError(f"unknown machine family {self.kind!r}")
        if self.kind == "cluster":
            object.__setattr__(self, "n", 4)
        if self.n > MAX_QUTRITS:
            raise CapacityError(f"{self.n} qutrits exceeds the supported maximum of {MAX_QUTRITS}")
        if self.kind == "dicke" and self.l is None:
            raise ValueError("the Dicke family needs an excitation number l")

    @classmethod
    def parse(cls, text: str) -> "MachineFamily":
        """``ghz:3``, ``dicke:4:2`` or ``cluster``."""
        parts = text.strip().lower().split(":")
        try:
            if parts[0] == "cluster" and len(parts) == 1:
                return cls("cluster")
            if parts[0] == "ghz" and len(parts) == 2:
                return cls("ghz", int(parts[1]))
            if parts[0] == "dicke" and len(parts) == 3:
                return cls("dicke", int(parts[1]), int(parts[2]))
        except CapacityError:
            raise
        except ValueError as exc:
            raise ValueError(f"malformed machine family {text!r}") from exc
        raise ValueError(f"malformed machine family {text!r}")

    @property
    def label(self) -> str:
        if self.kind == "cluster":
            return "cluster"
        if self.kind == "ghz":
            return f"ghz{self.n}"
        return f"dicke{self.n}_{self.l}"

    def build(self, **kwargs) -> MachineSpec:
        if self.kind == "ghz":
            return ghz_machine(self.n, **kwargs)
        if self.kind == "dicke":
            return dicke_machine(self.n, self.l, **kwargs)
        return cluster_machine(**kwargs)

    @property
    def bell_name(self) -> str | None:
        if self.kind == "cluster":
            return "cluster"
        if self.kind == "ghz" and self.n in (2, 3, 4):
            return "mermin"
        return None


@dataclass(frozen=True)
class SweepPoint:
    gamma_h: float
    gamma_c: float
    g: float
    p_suc: float
    fidelity: float
    bell_value: float | None = None
    t_hot: float | None = None
    t_cold: float | None = None

    def __post_init__(self):
        # fidelity is NaN only for temperature-grid cells where the herald never fires
        for name in ("p_suc", "fidelity"):
            v = getattr(self, name)
            if name == "fidelity" and math.isnan(v):
                continue
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def params(self) -> tuple[float, ...]:
        return (self.gamma_h, self.gamma_c, self.g, _nan(self.t_hot), _nan(self.t_cold))


def _nan(x):
    return math.nan if x is None else x


@dataclass
class ParetoFront:
    points: list[SweepPoint]
    family: MachineFamily | None = None
    evaluations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def max_p_suc(self) -> float:
        return max(p.p_suc for p in self.points)

    def nearest(self, p_suc: float) -> SweepPoint:
        return min(self.points, key=lambda q: (abs(q.p_suc - p_suc), q.params))

    def best_with_fidelity(self, threshold: float) -> SweepPoint | None:
        ok = [q for q in self.points if q.fidelity >= threshold]
        return max(ok, key=lambda q: q.p_suc) if ok else None


def _sort_key(p: SweepPoint):
    return (-p.p_suc, -p.fidelity, tuple(np.nan_to_num(p.params, nan=-1.0)))


def pareto_prune(points: Iterable[SweepPoint]) -> list[SweepPoint]:
    """Non-dominated subset (maximize both p_suc and F), sorted by p_suc ascending.

    Ties in (p_suc, F) keep a single representative chosen by parameter order,
    so the result does not depend on the input order.
    """
    kept = []
    best_f = -math.inf
    for p in sorted(points, key=_sort_key):
        if p.fidelity > best_f:
            kept.append(p)
            best_f = p.fidelity
    return kept[::-1]


# --------------------------------------------------------------------------- evaluation


def parallel_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Order-preserving map; results are merged by input index."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def couplings_from_ratios(ratio_h: float, ratio_g: float, delta_min: float) -> tuple[float, float, float]:
    scale = WEAK_COUPLING_FACTOR * delta_min / max(1.0, ratio_h, ratio_g)
    return ratio_h * scale, scale, ratio_g * scale


class _Evaluator:
    def __init__(self, spec: MachineSpec, family: MachineFamily | None, with_bell: bool):
        self.spec = spec
        self.parts = LiouvillianParts(spec, "reset")
        self.delta_min = spec.energies.delta_min
        self.bell_name = family.bell_name if (with_bell and family is not None) else None
        self.settings = bell.default_mermin_settings(spec.n) if self.bell_name == "mermin" else None
        self.cache: dict[tuple[float, float], SweepPoint | None] = {}

    def __call__(self, log_ratios: tuple[float, float]) -> SweepPoint | None:
        key = (round(log_ratios[0], 12), round(log_ratios[1], 12))
        if key in self.cache:
            return self.cache[key]
        gh, gc, g = couplings_from_ratios(10 ** key[0], 10 ** key[1], self.delta_min)
        try:
            rho = steady_state(self.parts.for_couplings(gh, gc, g))
            out = apply_filter(rho, self.spec.r)
        except (DegenerateSteadyStateError, HeraldNeverFiresError) as exc:
            log.info("skipping gamma_h=%g gamma_c=%g g=%g: %s", gh, gc, g, exc)
            self.cache[key] = None
            return None
        value = None
        if self.bell_name == "mermin":
            value = bell.mermin_value(out.heralded, self.settings)
        elif self.bell_name == "cluster":
            value = bell.cluster_bell_value(bell.cluster_frame_rotation(out.heralded))
        point = SweepPoint(gh, gc, g, out.p_suc, fidelity(out.heralded, self.spec.target), value)
        self.cache[key] = point
        return point


def _log_ratios(p: SweepPoint) -> tuple[float, float]:
    return math.log10(p.gamma_h / p.gamma_c), math.log10(p.g / p.gamma_c)


def _refine(evaluate: _Evaluator, start: SweepPoint, lam: float, bounds) -> list[SweepPoint]:
    """Coordinate descent on the log-ratios maximizing F + lam * p_suc."""
    x = list(_log_ratios(start))
    best = start
    step = math.log10(REFINE_STEP)
    seen = []
    score = lambda q: q.fidelity + lam * q.p_suc  # noqa: E731
    for _ in range(REFINE_ITERATIONS):
        improved = False
        for axis in (0, 1):
            for sign in (1, -1):
                trial = list(x)
                trial[axis] = min(max(trial[axis] + sign * step, bounds[axis][0]), bounds[axis][1])
                if trial == x:
                    continue
                q = evaluate(tuple(trial))
                if q is None:
                    continue
                seen.append(q)
                if score(q) > score(best):
                    best, x, improved = q, trial, True
                    break
        if not improved:
            step *= REFINE_SHRINK
    return seen


def pareto_front(family: MachineFamily | str, resolution: int = DEFAULT_RESOLUTION, *,
                 threads: int = 1, refine: bool = True, with_bell: bool = False,
                 ratio_h_range=RATIO_H_RANGE, ratio_g_range=RATIO_G_RANGE) -> ParetoFront:
    """Fidelity/success-probability front at zero cold and infinite hot temperature."""
    if isinstance(family, str):
        family = MachineFamily.parse(family)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    spec = family.build(t_hot=math.inf, t_cold=0.0)
    evaluate = _Evaluator(spec, family, with_bell)
    bounds = (tuple(math.log10(x) for x in ratio_h_range), tuple(math.log10(x) for x in ratio_g_range))
    grid = [(float(a), float(b)) for a in np.linspace(*bounds[0], resolution)
            for b in np.linspace(*bounds[1], resolution)]
    points = [p for p in parallel_map(evaluate, grid, threads) if p is not None]
    front = pareto_prune(points)
    if refine:
        # each retained point is refined under the scalarization that favours it most
        jobs = []
        for p in front:
            margins = [(p.fidelity + lam * p.p_suc) - max(q.fidelity + lam * q.p_suc for q in front)
                       for lam in REFINE_LAMBDAS]
            jobs.append((p, REFINE_LAMBDAS[int(np.argmax(margins))]))
        # the evaluator cache is shared, so refinement runs serially for determinism
        for p, lam in jobs:
            points.extend(_refine(evaluate, p, lam, bounds))
        front = pareto_prune(points)
    return ParetoFront(front, family, len(evaluate.cache))


def bell_sweep(family: MachineFamily | str, resolution: int = DEFAULT_RESOLUTION, *,
               threads: int = 1, refine: bool = True) -> list[SweepPoint]:
    if isinstance(family, str):
        family = MachineFamily.parse(family)
    if family.bell_name is None:
        raise ValueError(f"no Bell expression is defined for {family.label}")
    return pareto_front(family, resolution, threads=threads, refine=refine, with_bell=True).points


def temperature_sweep(spec: MachineSpec, model: str, th_grid: Sequence[float], tc_grid: Sequence[float],
                      *, threads: int = 1, jumps=None) -> tuple[np.ndarray, list[SweepPoint]]:
    """Fidelity on the (T_h, T_c) grid at fixed couplings; rows follow ``th_grid``.

    Cells where the herald never fires (p_suc at or below the filter floor)
    keep their raw p_suc and get fidelity NaN instead of aborting the sweep.
    """
    if spec.n > MAX_QUTRITS:
        raise CapacityError(f"{spec.n} qutrits exceeds the supported maximum of {MAX_QUTRITS}")
    cpl = spec.couplings()
    pairs = [(float(th), float(tc)) for th in th_grid for tc in tc_grid]

    def run(pair):
        s = spec.with_temperatures(*pair)
        rho = steady_state(build_liouvillian(s, model, jumps))
        try:
            out = apply_filter(rho, s.r)
        except HeraldNeverFiresError:
            p = float(np.clip(np.trace(filter_projector(s.r) @ rho).real, 0.0, 1.0))
            log.warning("herald never fires at T_h=%g T_c=%g (p_suc=%.3g); fidelity left undefined",
                        pair[0], pair[1], p)
            return SweepPoint(cpl["gamma_h"], cpl["gamma_c"], cpl["g"], p, math.nan,
                              t_hot=pair[0], t_cold=pair[1])
        return SweepPoint(cpl["gamma_h"], cpl["gamma_c"], cpl["g"], out.p_suc,
                          fidelity(out.heralded, s.target), t_hot=pair[0], t_cold=pair[1])

    points = parallel_map(run, pairs, threads)
    fids = np.array([p.fidelity for p in points]).reshape(len(th_grid), len(tc_grid))
    return fids, points


# --------------------------------------------------------------------------- CSV


def _fmt(x) -> str:
    if x is None or (isinstance(x, (float, np.floating)) and math.isnan(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def write_front_csv(points: Sequence[SweepPoint], family: MachineFamily, path_or_file) -> None:
    with_bell = any(p.bell_value is not None for p in points)
    cols = FRONT_COLUMNS + (("bell_value",) if with_bell else ())
    rows = []
    for p in points:
        d = asdict(p)
        d.update(machine=family.kind, N=family.n, l="" if family.l is None else family.l)
        rows.append([_fmt(d[c]) for c in cols])
    _write(path_or_file, cols, rows)


def write_temperature_csv(points: Sequence[SweepPoint], spec: MachineSpec, model: str, path_or_file) -> None:
    rows = [[spec.name, spec.n, model, _fmt(p.t_hot), _fmt(p.t_cold), _fmt(p.p_suc), _fmt(p.fidelity)]
            for p in points]
    _write(path_or_file, TEMPERATURE_COLUMNS, rows)


def _write(path_or_file, header, rows) -> None:
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh, header, rows)
        return
    w = csv.writer(path_or_file, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def read_front_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
