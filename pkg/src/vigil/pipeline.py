"""Experiment driver: recordings -> features and labels -> session CV reports."""
from __future__ import annotations

import contextlib
import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import eeg as eeg_mod
from ._version import __version__
from .config import ExperimentConfig
from .dsp import WindowSpec, read_recording
from .eog_features import FEATURE_NAMES as EOG_NAMES
from .eog_features import extract_windows
from .errors import AlignmentMismatch, VigilError
from .evaluation import confusion, five_fold
from .events import DetectorConfig, detect_events
from .labels import label_windows, read_gaze_jsonl, read_labels_csv
from .models.estimators import train_model
from .models.scaling import fuse
from .separation import ForeheadQuad, separate
from .synth import SynthConfig, generate


@contextlib.contextmanager
def stage(name: str, context: str = ""):
    """Prefix errors raised inside a pipeline stage with its name."""
    try:
        yield
    except VigilError as exc:
        where = f"{name} ({context})" if context else name
        if exc.args and not str(exc.args[0]).startswith(where):
            exc.args = (f"{where}: {exc.args[0]}",) + exc.args[1:]
        exc.stage = name
        raise


@dataclass
class Dataset:
    y: np.ndarray
    window_starts: np.ndarray
    blocks: dict = field(default_factory=dict)     # name -> (matrix, column names)
    meta: dict = field(default_factory=dict)

    def matrix(self, modality: str):
        if modality.startswith("fusion-"):
            site = "eeg-" + modality.split("-", 1)[1]
            eeg_x, eeg_names = self.blocks[site]
            eog_x, eog_names = self.blocks["eog"]
            return fuse(eeg_x, eog_x), list(eog_names) + list(eeg_names)
        return self.blocks[modality]


def _needed_blocks(modalities):
    need = set()
    for m in modalities:
        if m.startswith("fusion-"):
            need |= {"eog", "eeg-" + m.split("-", 1)[1]}
        else:
            need.add(m)
    return need


def eog_block(quad: ForeheadQuad, n_windows: int, cfg: ExperimentConfig):
    with stage("separate"):
        pair = separate(quad, cfg.separation, seed=cfg.seed)
    with stage("detect"):
        blinks, saccades = detect_events(pair.veo, pair.heo, quad.sample_rate_hz,
                                         DetectorConfig(detect_rate_hz=cfg.detect_rate_hz))
    with stage("eog-features"):
        vecs = extract_windows(blinks + saccades, n_windows, cfg.window_s)
    return np.array([v.values for v in vecs]), list(EOG_NAMES), {"blinks": len(blinks), "saccades": len(saccades)}


def eeg_block(rec, cfg: ExperimentConfig, n_windows: int):
    with stage("eeg-features", ",".join(rec.channel_names[:3])):
        pre = eeg_mod.preprocess(rec)
        vecs = eeg_mod.extract_de_features(pre, cfg.banding, WindowSpec(cfg.window_s))[:n_windows]
    names = eeg_mod.feature_names(rec.channel_names, cfg.banding)
    return np.array([v.values for v in vecs]), names


def build_dataset(cfg: ExperimentConfig, session=None) -> Dataset:
    """Features for every block the requested modalities need, plus labels."""
    need = _needed_blocks(cfg.modalities)
    if cfg.synthetic:
        if session is None:
            with stage("synth"):
                session = generate(SynthConfig(duration_s=cfg.synth_duration_s,
                                               sample_rate_hz=cfg.synth_rate_hz, seed=cfg.seed,
                                               window_s=cfg.window_s))
        quad, sites, gaze = session.quad, {"temporal": session.temporal, "posterior": session.posterior}, session.gaze
        label_rows = None
    else:
        with stage("load", cfg.forehead):
            rec = read_recording(cfg.forehead)
            quad = ForeheadQuad.from_recording(rec)
        sites = {}
        for site in ("temporal", "posterior"):
            path = getattr(cfg, site)
            if path is not None and f"eeg-{site}" in need:
                with stage("load", path):
                    sites[site] = read_recording(path)
        gaze, label_rows = None, None
        if cfg.labels is not None:
            with stage("load", cfg.labels):
                label_rows = read_labels_csv(cfg.labels)
        else:
            with stage("load", cfg.gaze):
                gaze = read_gaze_jsonl(cfg.gaze)

    n_windows = int(quad.n_samples / quad.sample_rate_hz // cfg.window_s)
    blocks, meta = {}, {}
    if "eog" in need:
        X, names, counts = eog_block(quad, n_windows, cfg)
        blocks["eog"] = (X, names)
        meta.update(counts)
    if "eeg-forehead" in need:
        with stage("reconstruct-forehead-eeg"):
            rec, report = eeg_mod.reconstruct_forehead_eeg(quad, seed=cfg.seed)
        meta["forehead_eog_components"] = sorted(report.eog_component_indices)
        blocks["eeg-forehead"] = eeg_block(rec, cfg, n_windows)
    for site in ("temporal", "posterior"):
        if f"eeg-{site}" in need:
            if site not in sites:
                raise AlignmentMismatch(f"modality eeg-{site} requested but no {site} recording given")
            blocks[f"eeg-{site}"] = eeg_block(sites[site], cfg, n_windows)

    with stage("label"):
        if label_rows is None:
            labels = label_windows(gaze, n_windows, cfg.window_s)
        else:
            labels = label_rows[:n_windows]
        if len(labels) != n_windows:
            raise AlignmentMismatch(f"{len(labels)} labels for {n_windows} windows")
    y = np.array([lab.perclos for lab in labels])
    starts = np.arange(n_windows) * cfg.window_s
    for name, (X, _) in blocks.items():
        if X.shape[0] != n_windows:
            raise AlignmentMismatch(f"{name} has {X.shape[0]} windows, expected {n_windows}")
    return Dataset(y, starts, blocks, meta)


@dataclass(frozen=True)
class _Fit:
    """Picklable training callable for five_fold."""

    model_cfg: object

    def __call__(self, X, y, lengths):
        return train_model(self.model_cfg, X, y, lengths)


def evaluate(dataset: Dataset, cfg: ExperimentConfig) -> list:
    reports = []
    for modality in cfg.modalities:
        X, _ = dataset.matrix(modality)
        for model in cfg.models:
            with stage("eval", f"{modality}/{model}"):
                rep = five_fold(X, dataset.y, _Fit(cfg.model_config(model)), cfg.sessions,
                                model=model, modality=modality, jobs=cfg.jobs)
            reports.append(rep)
    return reports


def header(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "config_hash": cfg.digest()}


def write_predictions(rep, starts, path, cfg) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# vigil {__version__} config_hash={cfg.digest()}\n")
        w = csv.writer(fh)
        w.writerow(["window_start_s", "perclos_true", "perclos_pred"])
        for t, a, b in zip(starts, rep.truth, rep.predictions):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(b))])


def run_experiment(cfg: ExperimentConfig, session=None, write: bool = True) -> dict:
    """Features, labels and five-fold reports for every (modality, model) pair."""
    cfg.validate()
    dataset = build_dataset(cfg, session)
    reports = evaluate(dataset, cfg)
    doc = {
        **header(cfg),
        "config": cfg.to_dict(),
        "n_windows": int(dataset.y.size),
        "dataset": {k: v for k, v in dataset.meta.items()},
        "results": [],
    }
    for rep in reports:
        entry = rep.to_json()
        entry["confusion"] = confusion(rep.predictions, rep.truth).to_json()
        doc["results"].append(entry)
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
        for rep in reports:
            write_predictions(rep, dataset.window_starts,
                              os.path.join(cfg.out_dir, f"pred_{rep.modality}_{rep.model}.csv"), cfg)
        with open(os.path.join(cfg.out_dir, "report.json"), "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return doc
