"""Monte Carlo comparison of DP- and PML-calibrated Laplace histograms.

Every repetition draws a fresh uniform dataset, adds Laplace noise, clips and
rounds, and measures the TVD to the dataset's own empirical distribution.

Random numbers are shared as widely as possible: the stream of repetition
``r`` depends only on ``(seed, k, r)``, so every epsilon, alpha and mechanism
at the same ``k`` sees the same dataset and the same noise uniforms, merely
scaled differently.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _core
from .bounds import calibrate_dp, calibrate_pml, check_alpha, check_epsilon, check_k
from .errors import DomainError, NoNoiseNeeded
from .rng import DATA, RandomStream

MECHANISMS = ("dp", "pml")
CSV_HEADER = [
    "epsilon", "k", "alpha", "mechanism", "noise_scale",
    "mean_tvd", "stderr_tvd", "degenerate_count", "reps", "seed",
]
NONE_NEEDED = "none"


@dataclass
class ExperimentConfig:
    n: int = 1000
    reps: int = 10_000
    seed: int = 0
    epsilon_grid: tuple = (0.1, 0.2, 0.5, 1.0, 2.0)
    k_grid: tuple = (5, 10)
    alpha_grid: tuple = (0.05, 0.1)
    mechanisms: tuple = MECHANISMS
    fixed_dataset: bool = False
    workers: int = 1

    def __post_init__(self):
        self.epsilon_grid = tuple(float(e) for e in self.epsilon_grid)
        self.k_grid = tuple(int(k) for k in self.k_grid)
        self.alpha_grid = tuple(float(a) for a in self.alpha_grid)
        self.mechanisms = tuple(m.lower() for m in self.mechanisms)
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.reps < 1:
            raise DomainError(f"reps must be >= 1, got {self.reps}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        for name in ("epsilon_grid", "k_grid", "alpha_grid", "mechanisms"):
            if not getattr(self, name):
                raise DomainError(f"{name} must not be empty")
        for m in self.mechanisms:
            if m not in MECHANISMS:
                raise DomainError(f"unknown mechanism {m!r}; expected dp or pml")
        for e in self.epsilon_grid:
            check_epsilon(e)
        for k, a in itertools.product(self.k_grid, self.alpha_grid):
            check_alpha(a, k)

    @classmethod
    def epsilon_sweep(cls, **overrides) -> "ExperimentConfig":
        return cls(**overrides)

    @classmethod
    def k_sweep(cls, **overrides) -> "ExperimentConfig":
        base = dict(epsilon_grid=(0.2, 0.5), k_grid=(2, 5, 10, 20), alpha_grid=(0.05,))
        base.update(overrides)
        return cls(**base)


@dataclass
class CellResult:
    epsilon: float
    k: int
    alpha: float
    mechanism: str
    noise_scale: float | None
    mean_tvd: float
    stderr_tvd: float
    degenerate_count: int
    reps: int
    seed: int

    @property
    def capped(self) -> bool:
        """True when the PML target is above the cap and no noise was added."""
        return self.noise_scale is None

    def sort_key(self):
        return (self.epsilon, self.k, self.alpha, self.mechanism)


def noise_scale(epsilon: float, alpha: float, mechanism: str) -> float | None:
    """Calibrated Laplace scale, or ``None`` when the PML target needs no noise."""
    if mechanism == "dp":
        return calibrate_dp(epsilon)
    if mechanism == "pml":
        try:
            return calibrate_pml(epsilon, alpha).scale
        except NoNoiseNeeded:
            return None
    raise DomainError(f"unknown mechanism {mechanism!r}")


def _tvd_samples(cfg: ExperimentConfig, k: int, scales) -> tuple[np.ndarray, np.ndarray]:
    """Per-rep TVD and degeneracy flags for each scale, split over workers."""
    kern = _core.kernels
    cell_key = RandomStream(cfg.seed, (k,)).key
    fixed_key = None
    if cfg.fixed_dataset:
        fixed_key = RandomStream(cfg.seed, (k, "fixed")).child(DATA).key
    scales = np.asarray(scales, dtype=np.float64)

    chunks = max(1, min(cfg.workers, cfg.reps))
    bounds = np.linspace(0, cfg.reps, chunks + 1).astype(int)
    spans = list(zip(bounds[:-1], bounds[1:]))

    def job(span):
        lo, hi = span
        return kern.simulate_tvd(cell_key, cfg.n, k, int(lo), int(hi), scales, fixed_key)

    if chunks == 1:
        parts = [job(spans[0])]
    else:
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            parts = list(pool.map(job, spans))
    tvd = np.concatenate([p[0] for p in parts], axis=0)
    deg = np.concatenate([p[1] for p in parts], axis=0)
    return tvd, deg


def _summarize(samples: np.ndarray) -> tuple[float, float]:
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, 0.0
    return mean, float(samples.std(ddof=1) / math.sqrt(samples.size))


def _run_cells(cfg: ExperimentConfig, cells) -> list[CellResult]:
    by_k: dict[int, list] = {}
    for cell in cells:
        by_k.setdefault(cell[1], []).append(cell)

    results = []
    for k, group in sorted(by_k.items()):
        scales = [noise_scale(e, a, m) for e, _, a, m in group]
        # zero scale means no noise; the kernel then only sanitizes
        tvd, deg = _tvd_samples(cfg, k, [0.0 if s is None else s for s in scales])
        for i, (e, _, a, m) in enumerate(group):
            mean, se = _summarize(tvd[:, i])
            results.append(CellResult(
                epsilon=e, k=k, alpha=a, mechanism=m, noise_scale=scales[i],
                mean_tvd=mean, stderr_tvd=se,
                degenerate_count=int(deg[:, i].sum()),
                reps=cfg.reps, seed=cfg.seed,
            ))
    results.sort(key=CellResult.sort_key)
    return results


def run_cell(cfg: ExperimentConfig, epsilon: float, k: int, alpha: float,
             mechanism: str) -> CellResult:
    """Run one (epsilon, k, alpha, mechanism) cell for ``cfg.reps`` repetitions."""
    check_epsilon(epsilon)
    check_alpha(alpha, check_k(k))
    mechanism = mechanism.lower()
    return _run_cells(cfg, [(float(epsilon), int(k), float(alpha), mechanism)])[0]


def _grid(cfg: ExperimentConfig):
    return list(itertools.product(cfg.epsilon_grid, cfg.k_grid, cfg.alpha_grid, cfg.mechanisms))


def sweep_epsilon(cfg: ExperimentConfig) -> list[CellResult]:
    """Every (epsilon, k, alpha, mechanism) cell of the config's grids."""
    return _run_cells(cfg, _grid(cfg))


def sweep_k(cfg: ExperimentConfig) -> list[CellResult]:
    """As :func:`sweep_epsilon`; each ``k`` must satisfy ``alpha <= 1/k``."""
    for k, a in itertools.product(cfg.k_grid, cfg.alpha_grid):
        check_alpha(a, k)
    return _run_cells(cfg, _grid(cfg))


def _fmt(x) -> str:
    if x is None:
        return NONE_NEEDED
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def emit_csv(results: list[CellResult], path) -> None:
    if not results:
        raise DomainError("no results to write")
    rows = sorted(results, key=CellResult.sort_key)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in rows:
                writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def parse_csv(path) -> list[CellResult]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise DomainError(f"unexpected CSV header {header}")
        for row in reader:
            rec = dict(zip(header, row))
            out.append(CellResult(
                epsilon=float(rec["epsilon"]),
                k=int(rec["k"]),
                alpha=float(rec["alpha"]),
                mechanism=rec["mechanism"],
                noise_scale=None if rec["noise_scale"] == NONE_NEEDED else float(rec["noise_scale"]),
                mean_tvd=float(rec["mean_tvd"]),
                stderr_tvd=float(rec["stderr_tvd"]),
                degenerate_count=int(rec["degenerate_count"]),
                reps=int(rec["reps"]),
                seed=int(rec["seed"]),
            ))
    return out
