"""Validation harness: goodness-of-fit reports, deterministic parallel Monte
Carlo, CSV emission, and the coalescence experiment for the perturbed
sign-driven equation.

Everything here is deterministic given (master_seed): work is split into
fixed-size batches with pre-assigned sub-streams, and results are reassembled
in batch order, so outputs are byte-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2 as _chi2_dist

from .core import ParameterError, SeedSpec


# ---------------------------------------------------------------------------
# reports and configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GofReport:
    """One goodness-of-fit verdict.

    mode "le": pass iff statistic <= tolerance (distances, sup errors);
    mode "ge": pass iff statistic >= tolerance (p-values).
    """

    kind: str           # "KS" | "chi2" | "mean-CI" | "sup" | "count" | ...
    name: str
    statistic: float
    tolerance: float
    n: int
    mode: str = "le"
    p_value: Optional[float] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.mode == "le":
            return self.statistic <= self.tolerance
        if self.mode == "ge":
            return self.statistic >= self.tolerance
        raise ValueError(f"unknown mode {self.mode!r}")

    def row(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "mode": self.mode,
            "n": self.n,
            "p_value": float("nan") if self.p_value is None else self.p_value,
            "passed": int(self.passed),
            "note": self.note,
        }


@dataclass
class ExperimentConfig:
    """CLI-facing configuration; round-trips through JSON without loss."""

    command: str = "validate"
    g: float = 1.0
    h: float = 1.0
    rho: float = 1.0
    sigma: float = 0.0
    x1: float = 0.0
    x2: float = 0.0
    horizon: float = 1.0
    steps: int = 1000
    paths: int = 100_000
    seed: int = 20_240_601
    out_dir: Optional[str] = None
    fmt: str = "csv"
    workers: int = 1
    scale: float = 1.0       # multiplies Monte Carlo sizes; 1.0 = full battery sizes

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_param_document(cls, data: dict, **overrides) -> "ExperimentConfig":
        """Accept the bare parameter document {g,h,rho,sigma,x1,x2,seed}."""
        allowed = {"g", "h", "rho", "sigma", "x1", "x2", "seed"}
        unknown = set(data) - allowed
        if unknown:
            raise ParameterError(f"unknown parameter-document keys: {sorted(unknown)}")
        merged = dict(data)
        merged.update(overrides)
        return cls(**merged)


# ---------------------------------------------------------------------------
# deterministic parallel map
# ---------------------------------------------------------------------------

DEFAULT_BATCH = 20_000


def pmap_batches(total: int, fn: Callable[[int, SeedSpec], np.ndarray], seed: SeedSpec,
                 workers: int = 1, batch_size: int = DEFAULT_BATCH) -> List[np.ndarray]:
    """Run fn(batch_n, sub_seed) over fixed-size batches of `total` draws.

    Batch boundaries and sub-stream ids depend only on (total, batch_size),
    never on `workers`, and results come back in batch order: the
    concatenated output is byte-identical for any worker count.
    """
    sizes = [min(batch_size, total - k) for k in range(0, total, batch_size)]
    tasks = [(i, n, seed.stream(i)) for i, n in enumerate(sizes)]
    if workers <= 1:
        return [fn(n, s) for _, n, s in tasks]
    out: List[Optional[np.ndarray]] = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(fn, n, s): i for i, n, s in tasks}
        for fut, i in futures.items():
            out[i] = fut.result()
    return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# statistics helpers
# ---------------------------------------------------------------------------

def ks_statistic(samples: np.ndarray, cdf_at_samples: np.ndarray,
                 cdf_left_at_samples: Optional[np.ndarray] = None) -> float:
    """KS distance between an empirical sample and a reference CDF.

    For a law with point masses, pass the left-limit CDF as well: the
    lower-side comparison at an atom must use F(x-), otherwise the distance
    is overstated by the atom mass.
    """
    order = np.argsort(samples, kind="stable")
    f = cdf_at_samples[order]
    f_left = f if cdf_left_at_samples is None else cdf_left_at_samples[order]
    n = len(samples)
    hi = np.arange(1, n + 1) / n - f
    lo = f_left - np.arange(0, n) / n
    return float(max(hi.max(), lo.max()))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS distance (statistic only)."""
    a = np.sort(a)
    b = np.sort(b)
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / len(a)
    fb = np.searchsorted(b, allv, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def mixed_cdf(grid: np.ndarray, cont_cdf: np.ndarray, atoms: Sequence[Tuple[float, float]] = ()):
    """Right-continuous CDF evaluator for a continuous table plus point masses."""
    def F(x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, grid, cont_cdf)
        for loc, mass in atoms:
            out = out + mass * (x >= loc)
        return out
    return F


def tabulate_pdf(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, n: int = 4001):
    """(grid, cdf) table of a 1D pdf by trapezoidal accumulation."""
    grid = np.linspace(lo, hi, n)
    pdf = fn(grid)
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(grid))])
    return grid, cdf


def expected_cell_masses(density2d: Callable[[np.ndarray, np.ndarray], np.ndarray],
                         edges1: np.ndarray, edges2: np.ndarray,
                         subdiv: int = 4, order: int = 8) -> np.ndarray:
    """Integral of a 2D density over every cell of a rectangular partition.

    Per-cell tensor Gauss-Legendre on subdiv^2 panels; cells must be aligned
    with any density discontinuity lines (pass them as edges).
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    n1, n2 = len(edges1) - 1, len(edges2) - 1

    def panel_points(edges, n_cells):
        # all (cell, panel, node) evaluation points and weights along one axis
        pts, wts, owner = [], [], []
        for c in range(n_cells):
            a, b = edges[c], edges[c + 1]
            sub = np.linspace(a, b, subdiv + 1)
            for s in range(subdiv):
                half = (sub[s + 1] - sub[s]) / 2.0
                mid = (sub[s + 1] + sub[s]) / 2.0
                pts.append(mid + half * nodes)
                wts.append(half * weights)
                owner.append(np.full(order, c))
        return np.concatenate(pts), np.concatenate(wts), np.concatenate(owner)

    p1, w1, o1 = panel_points(edges1, n1)
    p2, w2, o2 = panel_points(edges2, n2)
    vals = density2d(p1[:, None], p2[None, :]) * w1[:, None] * w2[None, :]
    out = np.zeros((n1, n2))
    np.add.at(out, (o1[:, None] + np.zeros_like(o2[None, :]), np.zeros((len(o1), 1), dtype=int) + o2[None, :]), vals)
    return out


def chi2_against_density(x1: np.ndarray, x2: np.ndarray,
                         density2d: Callable[[np.ndarray, np.ndarray], np.ndarray],
                         n_bins: int = 20,
                         special_edges1: Sequence[float] = (),
                         special_edges2: Sequence[float] = ()):
    """Chi-square of a 2D sample against a density, adaptive-mass bins.

    Bin edges are sample quantiles (equal expected mass up to dependence),
    with discontinuity lines inserted so no cell straddles a density jump.
    Returns (statistic, p_value, dof).
    """
    qs = np.linspace(0.0, 1.0, n_bins + 1)

    def make_edges(x, special):
        e = np.quantile(x, qs)
        e[0] = x.min() - 1e-9
        e[-1] = x.max() + 1e-9
        e = np.unique(np.concatenate([e, [s for s in special if e[0] < s < e[-1]]]))
        return e

    e1 = make_edges(x1, special_edges1)
    e2 = make_edges(x2, special_edges2)
    counts, _, _ = np.histogram2d(x1, x2, bins=[e1, e2])
    masses = expected_cell_masses(density2d, e1, e2)
    covered = masses.sum()
    expected = masses / covered * counts.sum()
    keep = expected.ravel() > 1.0
    obs = counts.ravel()[keep]
    exp = expected.ravel()[keep]
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = int(keep.sum() - 1)
    return stat, float(_chi2_dist.sf(stat, dof)), dof


def binomial_z(count: int, n: int, prob: float) -> float:
    """Normal z-score of an observed count against a binomial model."""
    if prob <= 0.0:
        return 0.0 if count == 0 else math.inf
    se = math.sqrt(prob * (1.0 - prob) / n)
    return (count / n - prob) / se


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

CSV_FORMAT_VERSION = "rankdiff-csv/1"


def format_cell(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def write_csv(path: str, name: str, columns: Sequence[str], rows, meta: Optional[dict] = None) -> str:
    """Write a versioned CSV; deterministic formatting, byte-stable."""
    lines = []
    meta_str = "".join(f" {k}={format_cell(v)}" for k, v in (meta or {}).items())
    lines.append(f"# {CSV_FORMAT_VERSION} table={name}{meta_str}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def reports_to_rows(reports: Sequence[GofReport]):
    cols = ["kind", "name", "statistic", "tolerance", "mode", "n", "p_value", "passed", "note"]
    rows = [[r.row()[c] for c in cols] for r in reports]
    return cols, rows


# ---------------------------------------------------------------------------
# perturbed sign-driven equation: coalescence experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseBV:
    """A bounded-variation function given piecewise.

    kind "constant": values[i] on the half-open segment (knots[i-1], knots[i]],
    with values[0] left of the first knot and values[-1] right of the last.
    kind "linear": continuous interpolation through (knots, values), constant
    extension outside -- automatically of bounded variation.
    """

    kind: str
    knots: tuple
    values: tuple

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ParameterError("piecewise descriptor must be finite")
        if np.any(np.diff(knots) <= 0):
            raise ParameterError("knots must be strictly increasing")
        if self.kind == "constant":
            if len(values) != len(knots) + 1:
                raise ParameterError("constant pieces need len(values) == len(knots) + 1")
        elif self.kind == "linear":
            if len(values) != len(knots) or len(knots) < 2:
                raise ParameterError("linear pieces need len(values) == len(knots) >= 2")
        else:
            raise ParameterError("kind must be 'constant' or 'linear'; anything with "
                                 "unbounded variation is not representable")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        knots = np.asarray(self.knots, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if self.kind == "constant":
            idx = np.searchsorted(knots, x, side="left")
            out = values[idx]
        else:
            out = np.interp(x, knots, values)
        return float(out) if out.ndim == 0 else out

    @classmethod
    def sign(cls) -> "PiecewiseBV":
        """The signum with sign(0) = -1."""
        return cls("constant", (0.0,), (-1.0, 1.0))


@dataclass(frozen=True)
class CoalescenceRow:
    dt: float
    median_sup: float
    mean_sup: float
    reps: int


@dataclass(frozen=True)
class CoalescenceReport:
    """Illustrative dt-consistency study; not a proof of pathwise uniqueness."""

    label: str
    drive: str
    rows: tuple

    @property
    def medians(self):
        return [r.median_sup for r in self.rows]


def tanaka_coalescence_experiment(f: PiecewiseBV, dts: Sequence[float], reps: int,
                                  T: float = 1.0, drive: str = "perturbed",
                                  q_ratio: float = 0.25, seed=20_240_601,
                                  z0: float = 0.0) -> CoalescenceReport:
    """Twin Euler solutions of dZ = f(Z) dM + dN with shared (M, N).

    drive "perturbed": N a Brownian motion and M an independent one scaled so
    that <M> = q_ratio <N> (orthogonality and domination hold); drive "plain":
    N = 0 and M a Brownian motion, the classical non-unique case.

    The two solutions start at the same point; tie-breaking state jitter of
    size dt enters only through the argument of f, with the first jitter
    forced to opposite signs so every repetition actually exercises the tie.
    Brownian drivers are coupled across dt values (coarse increments aggregate
    the finest grid) so the decay of sup|Z1 - Z2| is comparable across rows.
    """
    if drive not in ("perturbed", "plain"):
        raise ParameterError("drive must be 'perturbed' or 'plain'")
    dts = sorted(float(d) for d in dts)
    dt_min = dts[0]
    n_fine = int(round(T / dt_min))
    for d in dts:
        ratio = d / dt_min
        if abs(ratio - round(ratio)) > 1e-9 or abs(n_fine * dt_min - T) > 1e-12:
            raise ParameterError("each dt must be an integer multiple of the smallest, dividing T")
    spec = SeedSpec(int(seed)) if not isinstance(seed, SeedSpec) else seed
    sups = {d: [] for d in dts}
    scale_m = math.sqrt(q_ratio)
    for rep in range(reps):
        rng = spec.stream(rep).generator()
        if drive == "perturbed":
            dN_fine = rng.standard_normal(n_fine) * math.sqrt(dt_min)
            dM_fine = scale_m * rng.standard_normal(n_fine) * math.sqrt(dt_min)
        else:
            dN_fine = np.zeros(n_fine)
            dM_fine = rng.standard_normal(n_fine) * math.sqrt(dt_min)
        for d in dts:
            step = int(round(d / dt_min))
            dM = dM_fine.reshape(-1, step).sum(axis=1)
            dN = dN_fine.reshape(-1, step).sum(axis=1)
            n = len(dM)
            jit = spec.stream(10_000 + rep).generator()
            e1 = jit.uniform(-d, d, n)
            e2 = jit.uniform(-d, d, n)
            e1[0] = abs(e1[0])
            e2[0] = -abs(e2[0])
            z1 = z2 = z0
            sup = 0.0
            for k in range(n):
                z1 = z1 + f(z1 + e1[k]) * dM[k] + dN[k]
                z2 = z2 + f(z2 + e2[k]) * dM[k] + dN[k]
                diff = abs(z1 - z2)
                if diff > sup:
                    sup = diff
            sups[d].append(sup)
    rows = tuple(
        CoalescenceRow(d, float(np.median(sups[d])), float(np.mean(sups[d])), reps)
        for d in dts
    )
    label = "illustrative dt-consistency study (not a proof of pathwise uniqueness)"
    return CoalescenceReport(label, drive, rows)


# re-exports: the heatmap writer and the validation battery live in sibling
# files but are part of this module's surface (imported last to avoid cycles)
from .svgplot import emit_svg_heatmap, svg_heatmap_string  # noqa: E402,F401
from .validation import run_validation_suite  # noqa: E402,F401
