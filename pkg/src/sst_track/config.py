"""Experiment configuration: flat JSON documents with per-experiment defaults."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

from .doa import DEFAULT_TRAJECTORIES, SteeringConfig, Trajectory
from .streams import NOISE_KINDS, SUPPORT_MODES, NoiseSpec

EXPERIMENTS = ("subspace_tracking", "doa_tracking")
ALGORITHMS = ("alpha_opit", "opit")
ASSOCIATIONS = ("truth", "chained")

_COMMON_DEFAULTS = {
    "alpha": 0.9,
    "p": 2.0,
    "k": None,
    "noise_kind": "cauchy_mix",
    "delta": 0.1,
    "mu": 0.0,
    "gamma": 1.0,
    "sigma_n": 0.1,
    "seeds": [1],
    "algorithms": list(ALGORITHMS),
    "burn_in": 100,
    "stride": 1,
    "record_timing": False,
    "output_dir": "results",
}

DEFAULTS = {
    "subspace_tracking": {
        **_COMMON_DEFAULTS,
        "n": 200,
        "r": 5,
        "T": 2000,
        "lambda": 0.01,
        "sparsity": 0.8,
        "support": "columnwise",
        "epsilon": 1e-2,
        "change_points": [1000, 1500],
    },
    "doa_tracking": {
        **_COMMON_DEFAULTS,
        "n": 20,
        "r": 3,
        "T": 1000,
        "lambda": 0.2,
        "trajectories": [t.to_dict() for t in DEFAULT_TRAJECTORIES],
        "noiseless": False,
        "association": "truth",
    },
}


class ConfigError(ValueError):
    """Raised for unparsable or invalid experiment configurations."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int
    r: int
    T: int
    lam: float
    alpha: float
    p: float
    k: Optional[int]
    noise: NoiseSpec
    seeds: Tuple[int, ...]
    algorithms: Tuple[str, ...]
    burn_in: int
    stride: int
    record_timing: bool
    output_dir: str
    sparsity: float = 0.0
    support: str = "columnwise"
    epsilon: float = 0.0
    change_points: Tuple[int, ...] = ()
    trajectories: Tuple[Trajectory, ...] = ()
    noiseless: bool = False
    association: str = "truth"
    resolved: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def digest(self):
        return config_digest(self.resolved)

    def steering(self):
        return SteeringConfig(
            n=self.n, trajectories=self.trajectories, noise=self.noise, noiseless=self.noiseless
        )

    def with_overrides(self, **changes):
        doc = dict(self.resolved)
        doc.update(changes)
        return resolve(doc)


def config_digest(resolved):
    body = {k: v for k, v in resolved.items() if k != "output_dir"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def resolve(doc) -> ExperimentConfig:
    """Apply defaults to a raw key-value mapping and validate every field."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    experiment = doc.get("experiment")
    _require(experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    defaults = DEFAULTS[experiment]
    unknown = sorted(set(doc) - set(defaults) - {"experiment"})
    _require(not unknown, f"unknown config keys: {', '.join(unknown)}")
    c = {"experiment": experiment, **defaults, **doc}

    for key in ("n", "r", "T", "burn_in", "stride"):
        _require(_is_int(c[key]), f"{key} must be an integer")
    for key in ("lambda", "alpha", "p", "delta", "mu", "gamma", "sigma_n"):
        _require(_is_real(c[key]), f"{key} must be a number")
    n, r, T = c["n"], c["r"], c["T"]
    _require(n > r >= 1, "need n > r >= 1")
    _require(T >= 1, "T must be positive")
    _require(0 < c["lambda"] <= 1, "lambda must lie in (0,1]")
    _require(0 < c["alpha"] < 1, "alpha must lie in (0,1)")
    _require(0 < c["p"] <= 2, "p must lie in (0,2]")
    _require(c["k"] is None or (_is_int(c["k"]) and 1 <= c["k"] <= n), "k must be null or an integer in [1, n]")
    _require(c["noise_kind"] in NOISE_KINDS, f"noise_kind must be one of {NOISE_KINDS}")
    _require(0 <= c["delta"] < 1, "delta must lie in [0,1)")
    _require(c["gamma"] > 0, "gamma must be positive")
    _require(c["sigma_n"] > 0, "sigma_n must be positive")
    _require(
        isinstance(c["seeds"], list) and c["seeds"] and all(_is_int(s) and s >= 0 for s in c["seeds"]),
        "seeds must be a nonempty list of nonnegative integers",
    )
    _require(
        isinstance(c["algorithms"], list) and c["algorithms"] and set(c["algorithms"]) <= set(ALGORITHMS)
        and len(set(c["algorithms"])) == len(c["algorithms"]),
        f"algorithms must be a nonempty subset of {ALGORITHMS}",
    )
    _require(c["burn_in"] >= 0, "burn_in must be nonnegative")
    _require(c["burn_in"] < T, "burn_in must be smaller than T")
    _require(c["stride"] >= 1, "stride must be at least 1")
    _require(isinstance(c["record_timing"], bool), "record_timing must be true or false")
    _require(isinstance(c["output_dir"], str) and c["output_dir"], "output_dir must be a nonempty string")

    noise = NoiseSpec(c["noise_kind"], float(c["delta"]), float(c["mu"]), float(c["gamma"]), float(c["sigma_n"]))
    common = dict(
        experiment=experiment,
        n=n,
        r=r,
        T=T,
        lam=float(c["lambda"]),
        alpha=float(c["alpha"]),
        p=float(c["p"]),
        k=c["k"],
        noise=noise,
        seeds=tuple(c["seeds"]),
        algorithms=tuple(c["algorithms"]),
        burn_in=c["burn_in"],
        stride=c["stride"],
        record_timing=c["record_timing"],
        output_dir=c["output_dir"],
    )

    if experiment == "subspace_tracking":
        _require(_is_real(c["sparsity"]) and 0 <= c["sparsity"] < 1, "sparsity must lie in [0,1)")
        _require((1 - c["sparsity"]) * n >= 0.5, "sparsity leaves no nonzero rows")
        _require(c["support"] in SUPPORT_MODES, f"support must be one of {SUPPORT_MODES}")
        _require(_is_real(c["epsilon"]) and c["epsilon"] >= 0, "epsilon must be nonnegative")
        cps = c["change_points"]
        _require(
            isinstance(cps, list) and all(_is_int(t) and t >= 1 for t in cps),
            "change_points must be a list of positive integers",
        )
        c["change_points"] = sorted(set(cps))
        cfg = ExperimentConfig(
            **common,
            sparsity=float(c["sparsity"]),
            support=c["support"],
            epsilon=float(c["epsilon"]),
            change_points=tuple(c["change_points"]),
            resolved=c,
        )
    else:
        trajs = c["trajectories"]
        _require(isinstance(trajs, list) and trajs, "trajectories must be a nonempty list")
        try:
            parsed = tuple(Trajectory(**t) for t in trajs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad trajectory: {exc}") from None
        _require(len(parsed) == r, f"r must equal the number of trajectories ({len(parsed)})")
        _require(isinstance(c["noiseless"], bool), "noiseless must be true or false")
        _require(c["association"] in ASSOCIATIONS, f"association must be one of {ASSOCIATIONS}")
        cfg = ExperimentConfig(
            **common, trajectories=parsed, noiseless=c["noiseless"], association=c["association"], resolved=c
        )
        try:
            cfg.steering().validate(T)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return resolve(doc)


def load_config(source) -> ExperimentConfig:
    """Load from a path, or from inline JSON text if ``source`` starts with ``{``."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return loads(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads(text)
