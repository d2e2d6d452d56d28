"""Seeded orchestration of streams, trackers and metrics, plus file output."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .doa import DoaEstimate, TrackHistory, esprit_angles, generate_doa_sample, match_tracks
from .metrics import SepTrace, TraceSummary, sep_against, summarize_trace
from .streams import StreamProcess, next_sample
from .tracker import TrackerParams, default_threshold_k, init_tracker, tracker_step

SEP_HEADER = "t,sep,weight,step_time_ns"
DOA_HEADER = "t,track,theta_est_deg,theta_true_deg,abs_err_deg"

METADATA_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["library", "version", "experiment", "algorithm", "seed", "config", "config_digest",
                 "stream_digest", "csv", "summary"],
    "properties": {
        "library": {"const": "sst_track"},
        "version": {"type": "string"},
        "experiment": {"enum": ["subspace_tracking", "doa_tracking"]},
        "algorithm": {"enum": ["alpha_opit", "opit"]},
        "seed": {"type": "integer", "minimum": 0},
        "config": {"type": "object", "required": ["experiment", "n", "r", "T", "lambda", "alpha", "p", "seeds"]},
        "config_digest": {"type": "string", "pattern": "^[0-9a-f]{16}$"},
        "stream_digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "csv": {"type": "string"},
        "summary": {"type": "object"},
    },
    "additionalProperties": False,
}


class ExperimentError(RuntimeError):
    pass


def tracker_params(cfg: ExperimentConfig, algorithm: str) -> TrackerParams:
    if cfg.experiment == "subspace_tracking":
        k = cfg.k if cfg.k is not None else default_threshold_k(cfg.n, cfg.r, cfg.sparsity)
    else:
        # steering subspaces are dense
        k = cfg.k if cfg.k is not None else cfg.n
    return TrackerParams(
        r=cfg.r, lam=cfg.lam, alpha=cfg.alpha, p=cfg.p, k=k, robust=(algorithm == "alpha_opit")
    )


class _Digest:
    def __init__(self):
        self._h = hashlib.sha256()

    def update(self, x):
        x = np.asarray(x)
        self._h.update(x.astype("<c16" if np.iscomplexobj(x) else "<f8").tobytes())

    def hexdigest(self):
        return self._h.hexdigest()


@dataclass
class SeedResult:
    seed: int
    stream_digest: str
    traces: Dict[str, SepTrace] = field(default_factory=dict)
    tracks: Dict[str, TrackHistory] = field(default_factory=dict)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: List[SeedResult] = field(default_factory=list)

    def summaries(self):
        out = {}
        for run in self.runs:
            for alg, trace in run.traces.items():
                out[(alg, run.seed)] = summarize_trace(trace, self.config.burn_in)
            for alg, hist in run.tracks.items():
                out[(alg, run.seed)] = doa_summary(hist, self.config.burn_in)
        return out


def doa_summary(hist: TrackHistory, burn_in):
    med = hist.median_abs_error(burn_in)
    return {"median_abs_err_deg": [float(v) for v in med], "n_steps": int(len(hist.errors(burn_in)))}


def run_subspace_seed(cfg: ExperimentConfig, seed: int, on_step: Optional[Callable] = None) -> SeedResult:
    """Run every configured algorithm on one shared stream.

    ``on_step(sample, states)`` is called after each step with the sample and
    a dict of tracker states keyed by algorithm.
    """
    proc = StreamProcess.create(
        cfg.n,
        cfg.r,
        sparsity=cfg.sparsity,
        epsilon=cfg.epsilon,
        noise=cfg.noise,
        change_points=cfg.change_points,
        seed=seed,
        support=cfg.support,
    )
    params = {alg: tracker_params(cfg, alg) for alg in cfg.algorithms}
    # same tracker seed for every algorithm so only the update rule differs
    states = {alg: init_tracker(cfg.n, params[alg], seed=seed + 1) for alg in cfg.algorithms}
    traces = {alg: SepTrace(alg, seed, cfg.digest) for alg in cfg.algorithms}
    digest = _Digest()
    for _ in range(cfg.T):
        sample = next_sample(proc)
        digest.update(sample.x)
        for alg in cfg.algorithms:
            st = states[alg]
            if cfg.record_timing:
                t0 = time.perf_counter_ns()
                tracker_step(st, sample.x, params[alg])
                dt = time.perf_counter_ns() - t0
            else:
                tracker_step(st, sample.x, params[alg])
                dt = 0
            traces[alg].append(sample.t, sep_against(sample.A_true, st.U), st.last_weight, dt)
        if on_step is not None:
            on_step(sample, states)
    return SeedResult(seed, digest.hexdigest(), traces=traces)


def run_doa_seed(cfg: ExperimentConfig, seed: int, on_step: Optional[Callable] = None) -> SeedResult:
    steering = cfg.steering()
    rng = np.random.default_rng(seed)
    params = {alg: tracker_params(cfg, alg) for alg in cfg.algorithms}
    states = {alg: init_tracker(cfg.n, params[alg], seed=seed + 1, dtype=complex) for alg in cfg.algorithms}
    hists = {alg: TrackHistory() for alg in cfg.algorithms}
    prev = {alg: None for alg in cfg.algorithms}
    digest = _Digest()
    for t in range(1, cfg.T + 1):
        x, _ = generate_doa_sample(steering, t, rng)
        digest.update(x)
        truth = steering.angles(t)
        for alg in cfg.algorithms:
            st = states[alg]
            tracker_step(st, x, params[alg])
            est, clipped = esprit_angles(st.U, return_clipped=True)
            if cfg.association == "truth" or prev[alg] is None or t <= cfg.burn_in:
                labelled = match_tracks(truth, est)
            else:
                labelled = match_tracks(prev[alg], est)
            prev[alg] = labelled
            hists[alg].estimates.append(DoaEstimate(t, labelled, truth, clipped))
        if on_step is not None:
            on_step(t, x, states)
    return SeedResult(seed, digest.hexdigest(), tracks=hists)


def run_experiment(cfg: ExperimentConfig, on_step: Optional[Callable] = None) -> ExperimentResult:
    runner = run_subspace_seed if cfg.experiment == "subspace_tracking" else run_doa_seed
    result = ExperimentResult(cfg)
    for seed in cfg.seeds:
        try:
            result.runs.append(runner(cfg, seed, on_step))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise ExperimentError(f"{cfg.experiment} seed {seed}: {exc}") from exc
    return result


def _fmt(v):
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(float(v), ".17g")


def sep_csv(trace: SepTrace, stride=1):
    lines = [SEP_HEADER]
    for i in range(0, len(trace), stride):
        lines.append(f"{trace.t[i]},{_fmt(trace.sep[i])},{_fmt(trace.weight[i])},{trace.step_time_ns[i]}")
    return "\n".join(lines) + "\n"


def doa_csv(hist: TrackHistory, stride=1):
    lines = [DOA_HEADER]
    for est in hist.estimates[::stride]:
        for k, (a, b) in enumerate(zip(est.angles, est.truth), start=1):
            lines.append(f"{est.t},{k},{_fmt(a)},{_fmt(b)},{_fmt(abs(a - b))}")
    return "\n".join(lines) + "\n"


def _summary_dict(s):
    if isinstance(s, TraceSummary):
        d = {k: getattr(s, k) for k in s.__dataclass_fields__}
        return {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in d.items()}
    return s


def write_outputs(result: ExperimentResult, out_dir=None, stride=None):
    """Write one CSV and one metadata JSON per (algorithm, seed). Returns the written paths."""
    cfg = result.config
    if not result.runs:
        raise ExperimentError("no results to write")
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    stride = stride if stride is not None else cfg.stride
    summaries = result.summaries()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for run in result.runs:
            items = run.traces.items() if run.traces else run.tracks.items()
            for alg, data in items:
                stem = f"{cfg.experiment}_{alg}_seed{run.seed}"
                csv_path = out / f"{stem}.csv"
                body = sep_csv(data, stride) if run.traces else doa_csv(data, stride)
                with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(body)
                meta = {
                    "library": "sst_track",
                    "version": __version__,
                    "experiment": cfg.experiment,
                    "algorithm": alg,
                    "seed": run.seed,
                    "config": cfg.resolved,
                    "config_digest": cfg.digest,
                    "stream_digest": run.stream_digest,
                    "csv": csv_path.name,
                    "summary": _summary_dict(summaries[(alg, run.seed)]),
                }
                meta_path = out / f"{stem}.json"
                with open(meta_path, "w", encoding="utf-8", newline="\n") as fh:
                    json.dump(meta, fh, indent=2, sort_keys=True)
                    fh.write("\n")
                written += [csv_path, meta_path]
    except OSError as exc:
        raise ExperimentError(f"cannot write outputs to {exc.filename or out}: {exc.strerror}") from exc
    return written
