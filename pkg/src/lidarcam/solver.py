"""Iterative bound-narrowing genetic algorithm for calibration parameters.

The solver searches the full parameter vector (6 extrinsic + 4 or 10
intrinsic values) by minimizing the mean pixel reprojection error.  Each
outer iteration launches several independent GA slots inside the current
bounds, keeps the slot minimizer, then recenters and shrinks the bounds
around the incumbent for the next iteration.  The first iteration runs
on the user-supplied (default: Table-style) bounds directly.

All randomness flows from numpy SeedSequences derived from the config
seed, iteration index and slot index, so serial and parallel slot
execution produce bitwise-identical reports.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .correspond import CorrespondenceSet
from .errors import EmptyInput, TooFewCorrespondences
from .geometry import (BEHIND_CAMERA_PENALTY_PX, EPSILON_DEPTH, Calibration,
                       ExtrinsicParams, FisheyeIntrinsics, PinholeIntrinsics,
                       reprojection_error)

PINHOLE_PARAM_NAMES: Tuple[str, ...] = (
    "alpha", "beta", "gamma", "u0", "v0", "w0", "fx", "fy", "i0", "j0")
FISHEYE_PARAM_NAMES: Tuple[str, ...] = PINHOLE_PARAM_NAMES + (
    "alpha_c", "k1", "k2", "k3", "k4", "k5")

# Minimum correspondence counts: one pair constrains 2 pixel equations,
# so these give >= 2x redundancy over the 10/16 unknowns.
MIN_PAIRS = {"pinhole": 6, "fisheye": 10}


def param_names(model: str) -> Tuple[str, ...]:
    if model == "pinhole":
        return PINHOLE_PARAM_NAMES
    if model == "fisheye":
        return FISHEYE_PARAM_NAMES
    raise ValueError(f"unknown camera model {model!r}")


@dataclass(frozen=True)
class ParamBounds:
    """Elementwise (lower, upper) box for the parameter vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("bound arrays must have equal shape")
        if not np.all(self.lower < self.upper):
            raise ValueError("every lower bound must be < its upper bound")

    def __len__(self):
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


def default_bounds(model: str) -> ParamBounds:
    """Manually-determined search box for a roof-mounted forward rig.

    Extrinsic angles bracket a camera looking out along the sensor's
    forward axis, translations within a meter, focals/principal point in
    [300, 900] px, distortion coefficients in [-1, 1] and skew (absent
    from the published table) in [-0.1, 0.1].
    """
    lo = [0.2 * math.pi, -0.8 * math.pi, -0.3 * math.pi, -1.0, -1.0, -1.0,
          300.0, 300.0, 300.0, 300.0]
    hi = [0.8 * math.pi, -0.2 * math.pi, 0.3 * math.pi, 1.0, 1.0, 1.0,
          900.0, 900.0, 900.0, 900.0]
    if model == "fisheye":
        lo += [-0.1] + [-1.0] * 5
        hi += [0.1] + [1.0] * 5
    elif model != "pinhole":
        raise ValueError(f"unknown camera model {model!r}")
    return ParamBounds(np.array(lo), np.array(hi))


def params_to_calibration(params: np.ndarray, model: str) -> Calibration:
    """Unpack a parameter vector in canonical order into a Calibration."""
    params = np.asarray(params, dtype=float)
    names = param_names(model)
    if params.shape != (len(names),):
        raise ValueError(f"{model} expects {len(names)} parameters, "
                         f"got shape {params.shape}")
    ext = ExtrinsicParams(*(float(v) for v in params[:6]))
    if model == "pinhole":
        cam = PinholeIntrinsics(*(float(v) for v in params[6:10]))
    else:
        cam = FisheyeIntrinsics(*(float(v) for v in params[6:16]))
    return Calibration(extrinsic=ext, camera=cam)


def calibration_to_params(cal: Calibration) -> np.ndarray:
    e, c = cal.extrinsic, cal.camera
    vals = [e.alpha, e.beta, e.gamma, e.u0, e.v0, e.w0, c.fx, c.fy, c.i0, c.j0]
    if isinstance(c, FisheyeIntrinsics):
        vals += [c.alpha_c, c.k1, c.k2, c.k3, c.k4, c.k5]
    return np.array(vals, dtype=float)


@dataclass(frozen=True)
class GaConfig:
    """Search scheme constants; the scheme, not the values, is the contract."""

    slots: int = 5
    population: int = 800
    generations: int = 30
    bound_scale: float = 0.5
    max_iterations: int = 20
    convergence_epsilon: float = 1e-3
    seed: int = 0
    tournament_size: int = 3
    crossover_prob: float = 0.8
    blend_low: float = -0.25
    blend_high: float = 1.25
    mutation_prob: float = 0.05
    mutation_sigma_frac: float = 0.1
    elite_count: int = 2

    def __post_init__(self):
        if min(self.slots, self.population, self.generations,
               self.max_iterations) < 1:
            raise ValueError("slots, population, generations, max_iterations "
                             "must all be >= 1")
        if not 0.0 < self.bound_scale < 1.0:
            raise ValueError("bound_scale must be in (0, 1)")


@dataclass(frozen=True)
class IterationTrace:
    """Bounds and outcomes of one outer iteration."""

    lower: np.ndarray
    upper: np.ndarray
    slot_errors: Tuple[float, ...]
    best_error: float


@dataclass
class SolveReport:
    """Result of a full solve: best vector, its error, and the trace."""

    model: str
    best_params: np.ndarray
    best_error_px: float
    iterations: List[IterationTrace]
    evaluations_count: int


def _pairs_arrays(pairs) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(pairs, CorrespondenceSet):
        return pairs.points(), pairs.pixels()
    points, pixels = pairs
    return (np.atleast_2d(np.asarray(points, dtype=float)),
            np.atleast_2d(np.asarray(pixels, dtype=float)))


def make_batch_fitness(points: np.ndarray, pixels: np.ndarray,
                       model: str) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized mean-reprojection-error over a (P, d) population."""
    names = param_names(model)
    points = np.ascontiguousarray(points, dtype=float)
    px_i = np.ascontiguousarray(pixels[:, 0])
    px_j = np.ascontiguousarray(pixels[:, 1])
    fisheye = model == "fisheye"

    def evaluate(pop: np.ndarray) -> np.ndarray:
        pop = np.atleast_2d(np.asarray(pop, dtype=float))
        if pop.shape[1] != len(names):
            raise ValueError(f"{model} expects {len(names)} parameters")
        ca, sa = np.cos(pop[:, 0]), np.sin(pop[:, 0])
        cb, sb = np.cos(pop[:, 1]), np.sin(pop[:, 1])
        cg, sg = np.cos(pop[:, 2]), np.sin(pop[:, 2])
        # Rows of R = R_roll R_pitch R_yaw, written out elementwise.
        r = np.empty((pop.shape[0], 3, 3))
        r[:, 0, 0] = cb * cg
        r[:, 0, 1] = -cb * sg
        r[:, 0, 2] = sb
        r[:, 1, 0] = sa * sb * cg + ca * sg
        r[:, 1, 1] = -sa * sb * sg + ca * cg
        r[:, 1, 2] = -sa * cb
        r[:, 2, 0] = -ca * sb * cg + sa * sg
        r[:, 2, 1] = ca * sb * sg + sa * cg
        r[:, 2, 2] = ca * cb
        cam = np.einsum("pij,nj->pni", r, points) + pop[:, None, 3:6]
        u, v, w = cam[..., 0], cam[..., 1], cam[..., 2]
        behind = w <= EPSILON_DEPTH
        wsafe = np.where(behind, 1.0, w)
        un, vn = u / wsafe, v / wsafe
        fx, fy = pop[:, 6, None], pop[:, 7, None]
        i0, j0 = pop[:, 8, None], pop[:, 9, None]
        if fisheye:
            alpha_c = pop[:, 10, None]
            k1, k2 = pop[:, 11, None], pop[:, 12, None]
            k3, k4 = pop[:, 13, None], pop[:, 14, None]
            k5 = pop[:, 15, None]
            r2 = un * un + vn * vn
            radial = 1.0 + k1 * r2 + k2 * r2 * r2 + k5 * r2 * r2 * r2
            xd_x = radial * un + (2.0 * k3 * un * vn + k4 * (r2 + 2.0 * un * un))
            xd_y = radial * vn + (k3 * (r2 + 2.0 * vn * vn) + 2.0 * k4 * un * vn)
            pi = fx * xd_x + alpha_c * fx * xd_y + i0
            pj = fy * xd_y + j0
        else:
            pi = fx * un + i0
            pj = fy * vn + j0
        d = np.hypot(pi - px_i, pj - px_j)
        d = np.where(behind, BEHIND_CAMERA_PENALTY_PX, d)
        return d.mean(axis=1)

    return evaluate


def fitness(params: np.ndarray, pairs, model: str) -> float:
    """Mean reprojection error of one parameter vector (scalar path)."""
    points, pixels = _pairs_arrays(pairs)
    if points.shape[0] == 0:
        raise EmptyInput("fitness needs at least one pair")
    return reprojection_error(points, pixels, params_to_calibration(params, model))


def ga_minimize(batch_fitness: Callable[[np.ndarray], np.ndarray],
                bounds: ParamBounds, cfg: GaConfig,
                rng: np.random.Generator) -> Tuple[np.ndarray, float, int]:
    """One real-coded GA run inside fixed bounds.

    Tournament selection, arithmetic blend crossover, per-gene Gaussian
    mutation, elitism; every individual is clamped to the bounds after
    each variation step.  Returns (best vector, best error, evaluations).
    """
    lb, ub = bounds.lower, bounds.upper
    width = bounds.width
    pop_n, d = cfg.population, len(bounds)
    pop = rng.uniform(lb, ub, size=(pop_n, d))
    err = batch_fitness(pop)
    evals = pop_n
    best_i = int(np.argmin(err))
    best, best_err = pop[best_i].copy(), float(err[best_i])
    elite_n = min(cfg.elite_count, pop_n)
    for _ in range(cfg.generations):
        order = np.argsort(err, kind="stable")
        elites = pop[order[:elite_n]].copy()
        elite_err = err[order[:elite_n]].copy()
        # Tournament selection of parents.
        cand = rng.integers(0, pop_n, size=(pop_n, cfg.tournament_size))
        winners = cand[np.arange(pop_n), np.argmin(err[cand], axis=1)]
        children = pop[winners].copy()
        # Blend crossover on consecutive pairs.
        half = pop_n // 2
        if half:
            cross = rng.random(half) < cfg.crossover_prob
            blend = rng.uniform(cfg.blend_low, cfg.blend_high, size=(half, d))
            p1 = children[0:2 * half:2].copy()
            p2 = children[1:2 * half:2].copy()
            mask = cross[:, None]
            children[0:2 * half:2] = np.where(mask, p1 + blend * (p2 - p1), p1)
            children[1:2 * half:2] = np.where(mask, p2 + blend * (p1 - p2), p2)
            np.clip(children, lb, ub, out=children)
        # Gaussian mutation, sigma proportional to the current box width.
        mutate = rng.random((pop_n, d)) < cfg.mutation_prob
        noise = rng.normal(0.0, 1.0, size=(pop_n, d)) * (cfg.mutation_sigma_frac * width)
        children = np.where(mutate, children + noise, children)
        np.clip(children, lb, ub, out=children)
        err = batch_fitness(children)
        evals += pop_n
        # Elites replace the worst offspring.
        worst = np.argsort(err, kind="stable")[pop_n - elite_n:]
        children[worst] = elites
        err[worst] = elite_err
        pop = children
        gen_best = int(np.argmin(err))
        if float(err[gen_best]) < best_err:
            best, best_err = pop[gen_best].copy(), float(err[gen_best])
    return best, best_err, evals


def slot_rng(seed: int, iteration: int, slot: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, iteration, slot]))


def ga_run(pairs, model: str, bounds: ParamBounds, cfg: GaConfig,
           slot_seed: int) -> Tuple[np.ndarray, float]:
    """Run one GA slot against the reprojection objective."""
    points, pixels = _pairs_arrays(pairs)
    if points.shape[0] == 0:
        raise EmptyInput("ga_run needs at least one pair")
    batch = make_batch_fitness(points, pixels, model)
    best, best_err, _ = ga_minimize(batch, bounds, cfg,
                                    np.random.default_rng(slot_seed))
    return best, best_err


def solve(pairs, model: str, initial_bounds: Optional[ParamBounds] = None,
          cfg: Optional[GaConfig] = None, min_pairs: Optional[int] = None,
          parallel: bool = False,
          batch_fitness: Optional[Callable[[np.ndarray], np.ndarray]] = None
          ) -> SolveReport:
    """Full iterative solve with bound narrowing.

    Iteration 1 searches ``initial_bounds`` directly; each later
    iteration recenters the box at the incumbent best with half-width
    shrunk by ``bound_scale`` per iteration, intersected with the initial
    box.  Terminates on relative improvement below
    ``convergence_epsilon`` or after ``max_iterations``.

    ``batch_fitness`` overrides the reprojection objective (test hook);
    ``parallel`` evaluates slots on a thread pool with a deterministic,
    slot-ordered reduction, so results match the serial path bitwise.
    """
    cfg = cfg or GaConfig()
    if model not in ("pinhole", "fisheye"):
        raise ValueError(f"unknown camera model {model!r}")
    if batch_fitness is None:
        points, pixels = _pairs_arrays(pairs)
        need = min_pairs if min_pairs is not None else MIN_PAIRS[model]
        if points.shape[0] < need:
            raise TooFewCorrespondences(
                f"{model} solve needs >= {need} pairs, got {points.shape[0]}")
        batch_fitness = make_batch_fitness(points, pixels, model)
    bounds0 = initial_bounds or default_bounds(model)
    half0 = 0.5 * bounds0.width

    incumbent = bounds0.midpoint
    incumbent_err = math.inf
    trace: List[IterationTrace] = []
    evals = 0
    for it in range(1, cfg.max_iterations + 1):
        if it == 1:
            cur = bounds0
        else:
            half = half0 * cfg.bound_scale ** (it - 1)
            lo = np.maximum(incumbent - half, bounds0.lower)
            hi = np.minimum(incumbent + half, bounds0.upper)
            # Keep a non-degenerate box even when clamped at a corner.
            tiny = np.maximum(1e-12 * bounds0.width, 1e-300)
            cur = ParamBounds(lo, np.maximum(hi, lo + tiny))

        def run_slot(slot: int):
            return ga_minimize(batch_fitness, cur, cfg,
                               slot_rng(cfg.seed, it, slot))

        if parallel and cfg.slots > 1:
            with ThreadPoolExecutor(max_workers=cfg.slots) as pool:
                results = list(pool.map(run_slot, range(cfg.slots)))
        else:
            results = [run_slot(s) for s in range(cfg.slots)]
        slot_errors = tuple(r[1] for r in results)
        evals += sum(r[2] for r in results)
        winner = min(range(cfg.slots), key=lambda s: (slot_errors[s], s))
        prev_err = incumbent_err
        if slot_errors[winner] < incumbent_err:
            incumbent = results[winner][0]
            incumbent_err = slot_errors[winner]
        trace.append(IterationTrace(lower=cur.lower.copy(), upper=cur.upper.copy(),
                                    slot_errors=slot_errors,
                                    best_error=incumbent_err))
        if it > 1:
            if prev_err <= 0:
                break
            if (prev_err - incumbent_err) / prev_err < cfg.convergence_epsilon:
                break
    return SolveReport(model=model, best_params=incumbent,
                       best_error_px=incumbent_err, iterations=trace,
                       evaluations_count=evals)


@dataclass(frozen=True)
class CalibrationResult:
    """Persisted outcome of a solve, the toolbox's final artifact."""

    model: str
    params: Tuple[float, ...]
    train_error_px: float
    n_correspondences: int
    seed: int
    slots: int
    population: int
    generations: int
    bound_scale: float
    max_iterations: int
    convergence_epsilon: float
    trace: Tuple[float, ...] = ()

    @property
    def calibration(self) -> Calibration:
        return params_to_calibration(np.array(self.params), self.model)

    @classmethod
    def from_report(cls, report: SolveReport, cfg: GaConfig,
                    n_correspondences: int) -> "CalibrationResult":
        return cls(model=report.model,
                   params=tuple(float(v) for v in report.best_params),
                   train_error_px=float(report.best_error_px),
                   n_correspondences=n_correspondences,
                   seed=cfg.seed, slots=cfg.slots, population=cfg.population,
                   generations=cfg.generations, bound_scale=cfg.bound_scale,
                   max_iterations=cfg.max_iterations,
                   convergence_epsilon=cfg.convergence_epsilon,
                   trace=tuple(t.best_error for t in report.iterations))
