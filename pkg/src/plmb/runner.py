"""End-to-end runs: single-run tracking loops, Monte Carlo batches, output files.

A run produces per-step position estimates with track labels.  Monte Carlo
batches write one JSON file per run (truth + estimates) and an aggregate CSV
of per-step mean OSPA / OSPA(2) and cardinalities.  `recompute_metrics`
rebuilds the CSV from the JSON files alone.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidModelError
from .filtering import FilterParams, adaptive_birth, drop_weak_tracks, predict, update
from .labeled import Label, LmbDensity, map_estimate
from .metrics import ospa, ospa2
from .network import (
    SensorGraph,
    centralized_step,
    complete_graph,
    distributed_step,
    ring_graph,
)
from .scenario import ScenarioConfig, Truth, generate_measurements, generate_truth


@dataclass
class RunResult:
    """Estimates of one run: per-step {label: position} plus the truth."""

    truth: Truth
    estimates: list[dict[Label, np.ndarray]]  # index 0 unused

    def cardinality(self, k: int) -> int:
        return len(self.estimates[k])

    def positions(self, k: int) -> np.ndarray:
        if not self.estimates[k]:
            return np.zeros((0, 2))
        return np.stack([p[:2] for p in self.estimates[k].values()])

    def track_histories(self) -> dict[str, dict[int, np.ndarray]]:
        out: dict[str, dict[int, np.ndarray]] = {}
        for k in range(1, self.truth.steps + 1):
            for lbl, x in self.estimates[k].items():
                out.setdefault(f"{lbl.birth_time}.{lbl.index}", {})[k] = x[:2]
        return out


def filter_params(cfg: ScenarioConfig) -> FilterParams:
    return FilterParams(
        max_hypotheses=cfg.max_hypotheses,
        gate=cfg.gate,
        prune_threshold=cfg.prune_threshold,
        merge_threshold=cfg.merge_threshold,
        max_components=cfg.max_components,
        track_floor=cfg.track_floor,
        matching_threshold=cfg.matching_threshold,
        duplicate_threshold=cfg.duplicate_threshold,
    )


def build_graph(cfg: ScenarioConfig) -> SensorGraph:
    if cfg.topology == "ring":
        return ring_graph(cfg.n_sensors)
    if cfg.topology == "complete":
        return complete_graph(cfg.n_sensors)
    raise InvalidModelError(f"unknown topology {cfg.topology!r}")


def _estimates(d: LmbDensity) -> dict[Label, np.ndarray]:
    return dict(map_estimate(d))


def _drop_escaped(d: LmbDensity, cfg: ScenarioConfig) -> LmbDensity:
    """Discard tracks whose dominant position left the surveillance region."""
    if cfg.escape_margin <= 0.0:
        return d
    bound = cfg.area_half * cfg.escape_margin
    kept = [t for t in d if np.all(np.abs(t.mixture.dominant_mean()[:2]) <= bound)]
    return d if len(kept) == len(d) else LmbDensity(kept)


def run_centralized(
    cfg: ScenarioConfig, truth: Truth, scans: list[list[np.ndarray]]
) -> RunResult:
    """All scans processed at a single node: predict, per-sensor update, fuse."""
    params = filter_params(cfg)
    motion = cfg.motion_model()
    birth = cfg.birth_model()
    density = LmbDensity()
    estimates: list[dict[Label, np.ndarray]] = [{} for _ in range(truth.steps + 1)]
    for k in range(1, truth.steps + 1):
        sensors = [
            cfg.sensor_model(s, truth.sensor_positions[k, s]) for s in range(cfg.n_sensors)
        ]
        newborn = birth.fixed_births(k) if birth.mode == "fixed" else None
        density, usages = centralized_step(
            density, scans[k], sensors, motion, newborn, params, mode=cfg.fusion_mode,
        )
        density = _drop_escaped(density, cfg)
        if birth.mode == "adaptive":
            start = max((lbl.index for lbl in density.labels if lbl.birth_time == k), default=-1) + 1
            new = adaptive_birth(scans[k][0], usages[0], birth, k, cfg.measurement_noise(), start)
            density = density.union(new)
        estimates[k] = _estimates(density)
    return RunResult(truth, estimates)


def run_distributed(
    cfg: ScenarioConfig, truth: Truth, scans: list[list[np.ndarray]]
) -> RunResult:
    """Each sensor runs a local filter; neighbours exchange and fuse densities."""
    params = filter_params(cfg)
    motion = cfg.motion_model()
    graph = build_graph(cfg)
    births = [cfg.birth_model() for _ in range(cfg.n_sensors)]
    states = [LmbDensity() for _ in range(cfg.n_sensors)]
    estimates: list[dict[Label, np.ndarray]] = [{} for _ in range(truth.steps + 1)]
    for k in range(1, truth.steps + 1):
        sensors = [
            cfg.sensor_model(s, truth.sensor_positions[k, s]) for s in range(cfg.n_sensors)
        ]
        newborn = [
            bm.fixed_births(k) if bm.mode == "fixed" else None for bm in births
        ]
        states, usages = distributed_step(
            states, scans[k], sensors, motion, newborn, graph, k, params,
            consensus_iterations=cfg.consensus_iterations,
            discount=cfg.discount if cfg.discount > 0 else None,
        )
        states = [_drop_escaped(s, cfg) for s in states]
        if births[0].mode == "adaptive":
            for i in range(cfg.n_sensors):
                start = max(
                    (lbl.index for lbl in states[i].labels if lbl.birth_time == k), default=-1
                ) + 1
                new = adaptive_birth(
                    scans[k][i], usages[i], births[i], k, cfg.measurement_noise(), start
                )
                states[i] = states[i].union(new)
        estimates[k] = _estimates(states[0])
    return RunResult(truth, estimates)


def run_once(cfg: ScenarioConfig, method: str, seed) -> RunResult:
    rng = np.random.default_rng(seed)
    truth = generate_truth(cfg, rng)
    scans = generate_measurements(cfg, truth, rng)
    if method == "centralized":
        return run_centralized(cfg, truth, scans)
    if method == "distributed":
        return run_distributed(cfg, truth, scans)
    raise InvalidModelError(f"unknown method {method!r}")


# Output files ---------------------------------------------------------------


def _run_payload(cfg: ScenarioConfig, result: RunResult, run_index: int, seed_entropy) -> dict:
    truth = result.truth
    return {
        "run": run_index,
        "seed": str(seed_entropy),
        "case": cfg.case,
        "steps": truth.steps,
        "truth": {
            str(k): {
                str(tid): truth.states[k][i].tolist()
                for i, tid in enumerate(truth.ids[k])
            }
            for k in range(1, truth.steps + 1)
        },
        "estimates": {
            str(k): {
                f"{lbl.birth_time}.{lbl.index}": x.tolist()
                for lbl, x in result.estimates[k].items()
            }
            for k in range(1, truth.steps + 1)
        },
    }


def _metrics_rows(payloads: list[dict], cfg: ScenarioConfig) -> list[dict]:
    """Per-step means of OSPA, OSPA(2), true and estimated cardinality."""
    steps = max(p["steps"] for p in payloads)
    acc = {
        k: {"ospa": [], "ospa2": [], "card_true": [], "card_est": []}
        for k in range(1, steps + 1)
    }
    for p in payloads:
        true_hist: dict[str, dict[int, np.ndarray]] = {}
        est_hist: dict[str, dict[int, np.ndarray]] = {}
        for k_str, entries in p["truth"].items():
            for tid, state in entries.items():
                true_hist.setdefault(tid, {})[int(k_str)] = np.asarray(state[:2])
        for k_str, entries in p["estimates"].items():
            for tid, state in entries.items():
                est_hist.setdefault(tid, {})[int(k_str)] = np.asarray(state[:2])
        for k in range(1, p["steps"] + 1):
            tp = p["truth"].get(str(k), {})
            ep = p["estimates"].get(str(k), {})
            x = np.array([v[:2] for v in tp.values()]) if tp else np.zeros((0, 2))
            y = np.array([v[:2] for v in ep.values()]) if ep else np.zeros((0, 2))
            acc[k]["ospa"].append(ospa(x, y, cfg.ospa_cutoff, cfg.ospa_order))
            acc[k]["ospa2"].append(
                ospa2(est_hist, true_hist, k, cfg.ospa2_window, cfg.ospa_cutoff, cfg.ospa_order)
            )
            acc[k]["card_true"].append(len(tp))
            acc[k]["card_est"].append(len(ep))
    rows = []
    for k in range(1, steps + 1):
        rows.append(
            {
                "step": k,
                "ospa_mean": float(np.mean(acc[k]["ospa"])) if acc[k]["ospa"] else 0.0,
                "ospa2_mean": float(np.mean(acc[k]["ospa2"])) if acc[k]["ospa2"] else 0.0,
                "card_true_mean": float(np.mean(acc[k]["card_true"])) if acc[k]["card_true"] else 0.0,
                "card_est_mean": float(np.mean(acc[k]["card_est"])) if acc[k]["card_est"] else 0.0,
            }
        )
    return rows


def write_metrics_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "ospa_mean", "ospa2_mean", "card_true_mean", "card_est_mean"])
        for row in rows:
            writer.writerow(
                [row["step"]]
                + [f"{row[c]:.6f}" for c in ("ospa_mean", "ospa2_mean", "card_true_mean", "card_est_mean")]
            )


def run_batch(cfg: ScenarioConfig, method: str, out_dir, progress=None) -> list[dict]:
    """Run cfg.mc_runs Monte Carlo repetitions and write JSON + CSV outputs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(cfg.seed)
    children = root.spawn(cfg.mc_runs)
    payloads = []
    for i, child in enumerate(children):
        result = run_once(cfg, method, child)
        payload = _run_payload(cfg, result, i, child.entropy)
        payloads.append(payload)
        with open(out / f"run_{i:03d}.json", "w") as fh:
            json.dump(payload, fh)
        if progress is not None:
            progress(i, cfg.mc_runs)
    rows = _metrics_rows(payloads, cfg)
    write_metrics_csv(rows, out / "metrics.csv")
    from .scenario import save_config

    save_config(cfg, out / "config.txt")
    return rows


def recompute_metrics(in_dir, cfg: ScenarioConfig | None = None) -> list[dict]:
    """Rebuild the per-step metric table from the run_*.json files in a directory."""
    in_path = Path(in_dir)
    files = sorted(in_path.glob("run_*.json"))
    if not files:
        raise InvalidModelError(f"no run_*.json files in {in_dir}")
    if cfg is None:
        cfg_file = in_path / "config.txt"
        if cfg_file.exists():
            from .scenario import load_config

            cfg = load_config(cfg_file)
        else:
            cfg = ScenarioConfig()
    payloads = [json.loads(f.read_text()) for f in files]
    return _metrics_rows(payloads, cfg)


def plot_metrics(rows: list[dict], path) -> None:
    """Two-panel summary figure: mean OSPA/OSPA(2) and cardinalities over time."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    steps = [r["step"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(steps, [r["ospa_mean"] for r in rows], label="OSPA")
    ax1.plot(steps, [r["ospa2_mean"] for r in rows], label="OSPA(2)")
    ax1.set_ylabel("error (m)")
    ax1.legend()
    ax2.plot(steps, [r["card_true_mean"] for r in rows], label="true")
    ax2.plot(steps, [r["card_est_mean"] for r in rows], label="estimated")
    ax2.set_xlabel("step")
    ax2.set_ylabel("cardinality")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
