"""Experiment orchestration: parameter sweeps, DPD tuning and report files.

Every sweep point runs with its own seed, derived from the base seed and the
point's position in the grid, so results do not depend on evaluation order
or on the number of worker processes.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

from .config import LinkConfig
from .link import run_coherent_baseline, run_link
from .lms import BACKEND
from .rxdsp import MetricsReport

log = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"

METRIC_COLUMNS = ("global_snr_db", "ber", "ber_censored", "cspr_db", "evm_db",
                  "samples_used", "saturation_fraction")


def point_seed(master: int, index: int) -> int:
    """Seed for grid point ``index``; a pure function of its arguments."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


@dataclass
class SweepPoint:
    index: int
    axes: dict
    report: MetricsReport | None = None
    baseline: MetricsReport | None = None
    extra: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepResult:
    kind: str
    axis_names: tuple
    points: list
    base: LinkConfig
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def failures(self) -> list:
        return [p for p in self.points if not p.ok]

    def axis(self, name) -> np.ndarray:
        return np.array([p.axes[name] for p in self.points], dtype=float)

    def metric(self, name="global_snr", baseline=False) -> np.ndarray:
        """Metric per point (NaN where the point failed)."""
        out = []
        for p in self.points:
            r = p.baseline if baseline else p.report
            out.append(float(getattr(r, name)) if r is not None else math.nan)
        return np.array(out)

    def band_ber(self, band: int) -> np.ndarray:
        return np.array([p.report.per_subcarrier_ber[band] if p.report else math.nan
                         for p in self.points])


# --- point execution --------------------------------------------------------

def _evaluate(job):
    """Run one grid point; module-level so worker processes can pickle it."""
    index, axes, cfg_dict, mode, opts = job
    cfg = LinkConfig.from_dict(cfg_dict)
    pt = SweepPoint(index, axes)
    try:
        if mode == "tune":
            best = tune_dpd(cfg, opts["alphas"], opts["drive_scales"])
            pt.report, pt.extra = best.report, {"alpha": best.alpha, "drive_scale": best.drive_scale}
        else:
            pt.report = run_link(cfg)
        if opts.get("coherent"):
            pt.baseline = run_coherent_baseline(
                cfg.replace(**{"rop_dbm": cfg.rop_dbm + opts.get("coherent_rop_offset_db", 0.0)}))
    except Exception as exc:  # recorded per point; the sweep carries on
        log.warning("point %d %s failed: %s", index, axes, exc)
        pt.error = f"{type(exc).__name__}: {exc}"
    return pt


def run_points(base: LinkConfig, grid: list, kind: str, axis_names, workers: int = 1,
               mode: str = "link", seed_policy: str = "per-point", **opts) -> SweepResult:
    """Evaluate ``grid`` (a list of dotted-override dicts) around ``base``.

    ``seed_policy`` is "per-point" (independent streams keyed by grid index)
    or "common" (every point reuses the base seed).
    """
    if seed_policy not in ("per-point", "common"):
        raise ValueError(f"unknown seed_policy {seed_policy!r}")
    jobs = []
    for i, over in enumerate(grid):
        seed = point_seed(base.seed, i) if seed_policy == "per-point" else base.seed
        cfg = base.replace(**over, seed=seed)
        axes = {name: over[key] for name, key in zip(axis_names, over)}
        jobs.append((i, axes, cfg.to_dict(), mode, opts))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            points = list(ex.map(_evaluate, jobs))
    else:
        points = [_evaluate(j) for j in jobs]
    prov = {"base_digest": base.digest(), "seed": base.seed, "tool_version": TOOL_VERSION,
            "lms_backend": BACKEND, "n_points": len(points), "seed_policy": seed_policy}
    return SweepResult(kind, tuple(axis_names), points, base, prov)


# --- sweeps -----------------------------------------------------------------

def sweep_er_grid(base: LinkConfig, er_i_list, er_o_list, dpd: bool = True,
                  tune: bool = False, alphas=None, drive_scales=None,
                  workers: int = 1) -> SweepResult:
    """Global-SNR and CSPR over an (ER_i, ER_o) grid.

    With ``tune`` each DPD point searches offset factor and drive scale.
    """
    if not len(er_i_list) or not len(er_o_list):
        raise ValueError("ER grids must be non-empty")
    grid = [{"modulator.er_i_db": float(a), "modulator.er_o_db": float(b)}
            for a, b in itertools.product(er_i_list, er_o_list)]
    b = base.replace(**{"dpd.enabled": bool(dpd)})
    mode = "tune" if (tune and dpd) else "link"
    return run_points(b, grid, "er-grid", ("er_i_db", "er_o_db"), workers, mode,
                      alphas=list(alphas if alphas is not None else DEFAULT_ALPHAS),
                      drive_scales=list(drive_scales if drive_scales is not None else DEFAULT_DRIVE_SCALES))


def sweep_phase_deviation(base: LinkConfig, dtheta_list=None, grid=None,
                          workers: int = 1) -> SweepResult:
    """Global-SNR against a common phase error, or a (dtheta1, dtheta2) map.

    Pass exactly one of ``dtheta_list`` (degrees) or ``grid`` (a pair of
    degree lists for the upper and lower branches).
    """
    if (dtheta_list is None) == (grid is None):
        raise ValueError("give either dtheta_list or grid")
    if dtheta_list is not None:
        if not len(dtheta_list):
            raise ValueError("dtheta_list must be non-empty")
        pts = [{"receiver.delta_theta_deg": float(d)} for d in dtheta_list]
        return run_points(base, pts, "phase-1d", ("delta_theta_deg",), workers)
    d1, d2 = grid
    if not len(d1) or not len(d2):
        raise ValueError("phase grids must be non-empty")
    pts = [{"receiver.delta_theta_1_deg": float(a), "receiver.delta_theta_2_deg": float(b)}
           for a, b in itertools.product(d1, d2)]
    return run_points(base, pts, "phase-2d", ("delta_theta_1_deg", "delta_theta_2_deg"), workers)


def sweep_rop(base: LinkConfig, rop_list, coherent: bool = True,
              coherent_rop_offset_db: float = 0.0, workers: int = 1) -> SweepResult:
    """BER per band and overall against received power, with the coherent
    baseline (no DPD, same transmitter) evaluated at each point as well."""
    if not len(rop_list):
        raise ValueError("rop_list must be non-empty")
    pts = [{"rop_dbm": float(r)} for r in rop_list]
    return run_points(base, pts, "rop", ("rop_dbm",), workers, coherent=coherent,
                      coherent_rop_offset_db=coherent_rop_offset_db)


def sweep_theta(base: LinkConfig, theta_deg_list, workers: int = 1) -> SweepResult:
    """Global-SNR against the nominal receiver phase (design and DSP both use it)."""
    pts = [{"receiver.theta_deg": float(t)} for t in theta_deg_list]
    return run_points(base, pts, "theta", ("theta_deg",), workers)


# --- DPD tuning -------------------------------------------------------------

DEFAULT_ALPHAS = tuple(np.round(np.arange(0.0, 0.1001, 0.01), 3))
DEFAULT_DRIVE_SCALES = (0.04, 0.06, 0.08, 0.1, 0.12, 0.15)


@dataclass
class AlphaSearch:
    best_alpha: float
    best_snr_db: float
    curve: SweepResult
    unimodal: bool


def count_peaks(y, tol_db: float = 0.05) -> int:
    """Maxima of ``y`` (end points included), merging peaks separated by a dip
    shallower than ``tol_db``."""
    y = np.asarray(y, dtype=float)
    y = y[np.isfinite(y)]
    if y.size == 0:
        return 0
    pad = np.concatenate([[y.min() - 1.0], y, [y.min() - 1.0]])
    peaks, _ = find_peaks(pad, plateau_size=1)
    kept = [int(peaks[0])] if peaks.size else []
    for p in peaks[1:]:
        dip = pad[kept[-1]:p + 1].min()
        if min(pad[kept[-1]], pad[p]) - dip > tol_db:
            kept.append(int(p))
        elif pad[p] > pad[kept[-1]]:
            kept[-1] = int(p)
    return max(len(kept), 1)


def optimize_alpha(base: LinkConfig, alpha_range=DEFAULT_ALPHAS, workers: int = 1,
                   tol_db: float = 0.05) -> AlphaSearch:
    """Grid search of the offset-correction factor; flags multi-modal curves."""
    alphas = [float(a) for a in alpha_range]
    if not alphas:
        raise ValueError("alpha_range must be non-empty")
    grid = [{"dpd.alpha": a} for a in alphas]
    # one noise realization for the whole curve so its shape is not Monte-Carlo jitter
    res = run_points(base, grid, "alpha", ("alpha",), workers, seed_policy="common")
    snr = res.metric("global_snr")
    if not np.any(np.isfinite(snr)):
        raise RuntimeError("every alpha point failed")
    k = int(np.nanargmax(snr))
    return AlphaSearch(alphas[k], float(snr[k]), res, count_peaks(snr, tol_db) <= 1)


@dataclass
class DpdTuning:
    alpha: float
    drive_scale: float
    report: MetricsReport


def tune_dpd(cfg: LinkConfig, alphas=DEFAULT_ALPHAS, drive_scales=DEFAULT_DRIVE_SCALES) -> DpdTuning:
    """Exhaustive search over (alpha, drive scale) at one operating point."""
    best = None
    for ds in drive_scales:
        for a in alphas:
            try:
                r = run_link(cfg.replace(**{"dpd.alpha": float(a), "dpd.drive_scale": float(ds)}))
            except Exception as exc:
                log.debug("alpha=%s drive=%s failed: %s", a, ds, exc)
                continue
            if best is None or r.global_snr > best.report.global_snr:
                best = DpdTuning(float(a), float(ds), r)
    if best is None:
        raise RuntimeError("no (alpha, drive scale) pair produced a result")
    return best


# --- crossings --------------------------------------------------------------

def threshold_crossing(x, ber, threshold: float):
    """First ``x`` where ``ber`` falls through ``threshold`` (log-linear interpolation).

    Returns None if the curve never reaches the threshold.
    """
    x = np.asarray(x, dtype=float)
    lb = np.log10(np.clip(np.asarray(ber, dtype=float), 1e-12, None))
    lt = math.log10(threshold)
    if lb.size and lb[0] <= lt:
        return float(x[0])
    for i in range(lb.size - 1):
        if lb[i] > lt >= lb[i + 1]:
            return float(x[i] + (lb[i] - lt) / (lb[i] - lb[i + 1]) * (x[i + 1] - x[i]))
    return None


# --- report files -----------------------------------------------------------

def columns_for(result: SweepResult) -> list:
    n = result.base.tx.n_bands
    cols = list(result.axis_names) + list(METRIC_COLUMNS)
    for k in range(n):
        cols += [f"snr_s{k + 1}_db", f"ber_s{k + 1}"]
    if any(p.extra for p in result.points):
        cols += sorted({k for p in result.points for k in p.extra})
    if any(p.baseline is not None for p in result.points):
        cols += ["coh_global_snr_db", "coh_ber"] + [f"coh_ber_s{k + 1}" for k in range(n)]
    return cols + ["config_digest", "error"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(result: SweepResult, path) -> tuple:
    """Write ``<path>`` (CSV) and ``<path stem>.manifest.json``; returns both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = columns_for(result)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for p in result.points:
            row = dict(p.axes)
            if p.report is not None:
                row.update(p.report.as_row())
            row.update(p.extra)
            if p.baseline is not None:
                b = p.baseline
                row.update(coh_global_snr_db=b.global_snr, coh_ber=b.ber)
                row.update({f"coh_ber_s{k + 1}": v for k, v in enumerate(b.per_subcarrier_ber)})
            row["error"] = p.error
            w.writerow([_fmt(row.get(c)) for c in cols])
    manifest = {
        "tool": "phasedd",
        "tool_version": TOOL_VERSION,
        "kind": result.kind,
        "axes": list(result.axis_names),
        "columns": cols,
        "n_points": len(result.points),
        "n_failed": len(result.failures),
        "provenance": result.provenance,
        "base_config": result.base.to_dict(),
    }
    mpath = path.with_suffix(".manifest.json")
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path, mpath


def single_result(kind: str, cfg: LinkConfig, report: MetricsReport | None,
                  error: str | None = None) -> SweepResult:
    """Wrap one run as a one-row result so it can share the report writer."""
    pt = SweepPoint(0, {}, report, error=error)
    prov = {"base_digest": cfg.digest(), "seed": cfg.seed, "tool_version": TOOL_VERSION,
            "lms_backend": BACKEND, "n_points": 1}
    return SweepResult(kind, (), [pt], cfg, prov)
