"""Experiment configuration: ``key = value`` lines grouped in ``[sections]``.

Example::

    [experiment]
    seed = 7
    out_dir = runs/demo

    [input]
    synth_duration_s = 2400       # or forehead/temporal/posterior/gaze paths

    [pipeline]
    modalities = eog, eeg-forehead, fusion-forehead
    separation = ica-minus
    banding = 2hz

    [model]
    models = svr, ccnf
    k1_grid = 10, 20, 30
"""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import asdict, dataclass, fields, replace

from .eeg import Banding
from .errors import InvalidConfig
from .models.crf import ALPHA_REG_GRID, BETA_REG_GRID, K1_GRID, MAX_ITER
from .models.estimators import ModelConfig, ModelKind
from .models.svr import C_GRID, EPSILON, G_GRID
from .separation import Method

SINGLE = ("eog", "eeg-forehead", "eeg-temporal", "eeg-posterior")
FUSION = ("fusion-forehead", "fusion-temporal", "fusion-posterior")
MODALITIES = SINGLE + FUSION


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int | None = None
    out_dir: str = "vigil-out"
    # input: either recordings on disk or a synthetic session
    forehead: str | None = None
    temporal: str | None = None
    posterior: str | None = None
    gaze: str | None = None
    labels: str | None = None
    synth_duration_s: float = 2400.0
    synth_rate_hz: float = 250.0
    # pipeline
    modalities: tuple = ("eog", "eeg-forehead", "fusion-forehead")
    separation: str = Method.ICA_MINUS.value
    banding: str = Banding.TWO_HZ.value
    detect_rate_hz: float = 100.0
    window_s: float = 8.0
    sessions: int = 5
    # models
    models: tuple = ("svr", "ccrf", "ccnf")
    c_grid: tuple = C_GRID
    g_grid: tuple = G_GRID
    epsilon: float = EPSILON
    k1_grid: tuple = K1_GRID
    alpha_reg_grid: tuple = ALPHA_REG_GRID
    beta_reg_grid: tuple = BETA_REG_GRID
    restarts: int = 5
    seq_len: int = 7
    maxiter: int = MAX_ITER
    jobs: int = 1

    @property
    def synthetic(self) -> bool:
        return self.forehead is None

    def validate(self) -> "ExperimentConfig":
        if self.seed is None:
            raise InvalidConfig("a seed is required")
        for m in self.modalities:
            if m not in MODALITIES:
                raise InvalidConfig(f"unknown modality {m!r}; choose from {', '.join(MODALITIES)}")
        for m in self.models:
            try:
                ModelKind(m)
            except ValueError:
                raise InvalidConfig(f"unknown model {m!r}") from None
        try:
            Method(self.separation)
            Banding(self.banding)
        except ValueError as exc:
            raise InvalidConfig(str(exc)) from None
        for path in (self.forehead, self.temporal, self.posterior, self.gaze, self.labels):
            if path is not None and not os.path.exists(path):
                raise InvalidConfig(f"input file not found: {path}")
        if not self.synthetic and self.gaze is None and self.labels is None:
            raise InvalidConfig("recorded input needs a gaze stream or a labels file")
        if any(k not in K1_GRID for k in self.k1_grid):
            raise InvalidConfig("k1_grid entries must be among 10, 20, 30")
        if self.sessions < 2 or self.restarts < 1 or self.seq_len < 1 or self.jobs < 1:
            raise InvalidConfig("sessions >= 2, restarts >= 1, seq_len >= 1 and jobs >= 1 required")
        return self

    def model_config(self, kind) -> ModelConfig:
        return ModelConfig(kind, tuple(self.c_grid), tuple(self.g_grid), self.epsilon, 3,
                           tuple(self.k1_grid), tuple(self.alpha_reg_grid), tuple(self.beta_reg_grid),
                           self.restarts, self.seq_len, self.maxiter, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        # neither the worker count nor the output location changes results
        d.pop("jobs")
        d.pop("out_dir")
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


_FLOAT_LISTS = {"c_grid", "g_grid", "alpha_reg_grid", "beta_reg_grid"}
_INT_LISTS = {"k1_grid"}
_STR_LISTS = {"modalities", "models"}
_INTS = {"seed", "sessions", "restarts", "seq_len", "maxiter", "jobs"}
_FLOATS = {"synth_duration_s", "synth_rate_hz", "epsilon", "detect_rate_hz", "window_s"}
_KEYS = {f.name for f in fields(ExperimentConfig)}


def _coerce(name: str, raw: str):
    if name not in _KEYS:
        raise InvalidConfig(f"unknown config key {name!r}")
    raw = raw.strip()
    items = [s.strip() for s in raw.split(",") if s.strip()]
    try:
        if name in _FLOAT_LISTS:
            return tuple(eval_number(s) for s in items)
        if name in _INT_LISTS:
            return tuple(int(s) for s in items)
        if name in _STR_LISTS:
            return tuple(items)
        if name in _INTS:
            return int(raw)
        if name in _FLOATS:
            return eval_number(raw)
        return raw or None
    except ValueError as exc:
        raise InvalidConfig(f"bad value for {name}: {raw!r}") from exc


def eval_number(text: str) -> float:
    """Numbers, optionally written as powers ``2^-3`` or ``10^2``."""
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig(f"unreadable config: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is not None:
            values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return ExperimentConfig(**values)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text, overrides)
    base = os.path.dirname(os.path.abspath(path))
    # relative input paths resolve against the config file
    paths = {k: os.path.join(base, getattr(cfg, k)) for k in ("forehead", "temporal", "posterior", "gaze", "labels")
             if getattr(cfg, k) is not None and not os.path.isabs(getattr(cfg, k))}
    return replace(cfg, **paths)
