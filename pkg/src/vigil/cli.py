"""``vigil`` command line.

Exit status: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import eeg as eeg_mod
from ._version import __version__
from .config import MODALITIES, load_config
from .dsp import Recording, read_recording, write_recording
from .eog_features import extract_windows, write_features_csv
from .errors import ConfigError, DataError, VigilError
from .evaluation import confusion, five_fold
from .events import DetectorConfig, WaveletConfig, detect_events, read_events_jsonl, write_events_jsonl
from .labels import VigilanceLabel, label_windows, read_gaze_jsonl, read_labels_csv, split_states, write_gaze_jsonl, write_labels_csv
from .models import ModelConfig, from_bundle, fuse, load_bundle, save_bundle, to_bundle, train_model
from .models.bundle import names_hash
from .pipeline import run_experiment
from .separation import FOREHEAD_CHANNELS, ForeheadQuad, separate
from .synth import SynthConfig, generate
from .tables import digest, read_matrix, stamp_line, write_matrix

log = logging.getLogger("vigil")

LIGHT_GRID = {"c_grid": (1.0, 4.0, 16.0), "g_grid": (2.0 ** -6, 2.0 ** -4, 2.0 ** -2),
              "alpha_reg_grid": (1.0,), "beta_reg_grid": (1e-2,), "restarts": 1}


def _hash(args) -> str:
    d = {k: v for k, v in vars(args).items() if k not in ("func", "jobs", "verbose")}
    return digest(d)


def _floats(text):
    from .config import eval_number
    return tuple(eval_number(s) for s in text.split(",") if s.strip())


def _n_windows(args) -> int:
    if getattr(args, "windows", None):
        return int(args.windows)
    if getattr(args, "recording", None):
        rec = read_recording(args.recording)
        return int(rec.duration_s // args.window_s)
    if getattr(args, "duration", None):
        return int(args.duration // args.window_s)
    raise ConfigError("give --windows, --recording or --duration")


def _session_lengths(n: int, sessions: int | None):
    if not sessions or sessions <= 1:
        return [n]
    edges = np.linspace(0, n, sessions + 1).round().astype(int)
    return list(np.diff(edges))


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> None:
    cfg = SynthConfig(duration_s=args.duration, sample_rate_hz=args.rate, seed=args.seed)
    s = generate(cfg)
    os.makedirs(args.out, exist_ok=True)
    ext = ".bin" if args.format == "bin" else ".csv"
    h = _hash(args)
    extra = {"version": __version__, "config_hash": h}
    write_recording(s.quad.to_recording(), os.path.join(args.out, "forehead" + ext), extra)
    write_recording(s.temporal, os.path.join(args.out, "temporal" + ext), extra)
    write_recording(s.posterior, os.path.join(args.out, "posterior" + ext), extra)
    write_gaze_jsonl(s.gaze, os.path.join(args.out, "gaze.jsonl"))
    write_events_jsonl(s.events, os.path.join(args.out, "events_truth.jsonl"))
    labels = [VigilanceLabel(float(p), split_states(float(p)), float(t))
              for p, t in zip(s.perclos, s.window_starts)]
    write_labels_csv(labels, os.path.join(args.out, "labels_truth.csv"), stamp_line(h))
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump({"version": __version__, "config_hash": h, "synth": asdict(cfg),
                   "n_windows": len(labels)}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_separate(args) -> None:
    quad = ForeheadQuad.from_recording(read_recording(args.input))
    pair = separate(quad, args.method, seed=args.seed)
    rec = Recording(np.vstack([pair.veo, pair.heo]), ("veo", "heo"), quad.sample_rate_hz)
    write_recording(rec, args.out, {"version": __version__, "config_hash": _hash(args),
                                    "method": pair.method.value})


def cmd_detect(args) -> None:
    rec = read_recording(args.input)
    wave = WaveletConfig(theta_h=args.theta_h, theta_l=args.theta_l)
    cfg = DetectorConfig(wavelet=wave, detect_rate_hz=args.detect_rate)
    blinks, saccades = detect_events(rec.channel(args.veo), rec.channel(args.heo), rec.sample_rate_hz, cfg)
    write_events_jsonl(blinks + saccades, args.out)
    log.info("%d blinks, %d saccades", len(blinks), len(saccades))


def cmd_eog_features(args) -> None:
    events = read_events_jsonl(args.events)
    vecs = extract_windows(events, _n_windows(args), args.window_s)
    write_features_csv(vecs, args.out, _hash(args))


def cmd_eeg_features(args) -> None:
    rec = read_recording(args.input)
    if args.site == "forehead4":
        quad = ForeheadQuad.from_recording(rec, FOREHEAD_CHANNELS)
        rec, report = eeg_mod.reconstruct_forehead_eeg(quad, seed=args.seed)
        log.info("zeroed EOG components %s", sorted(report.eog_component_indices))
    else:
        names = eeg_mod.SITE_PRESETS[args.site]
        if all(n in rec.channel_names for n in names):
            rec = rec.select(names)
    pre = eeg_mod.preprocess(rec)
    vecs = eeg_mod.extract_de_features(pre, args.banding)
    eeg_mod.write_de_csv(vecs, args.out, _hash(args))


def cmd_label(args) -> None:
    gaze = read_gaze_jsonl(args.gaze)
    labels = label_windows(gaze, _n_windows(args), args.window_s,
                           gaps_as_fixation=not args.drop_gaps, smooth=args.smooth)
    write_labels_csv(labels, args.out, stamp_line(_hash(args)))


def cmd_fuse(args) -> None:
    t_eog, n_eog, X_eog = read_matrix(args.eog)
    t_eeg, n_eeg, X_eeg = read_matrix(args.eeg)
    if t_eog.shape != t_eeg.shape or not np.allclose(t_eog, t_eeg):
        from .errors import AlignmentMismatch
        raise AlignmentMismatch("feature tables have different window grids")
    write_matrix(args.out, t_eog, list(n_eog) + list(n_eeg), fuse(X_eeg, X_eog), _hash(args))


def _load_xy(features, labels):
    starts, names, X = read_matrix(features)
    lab = read_labels_csv(labels)
    if len(lab) != X.shape[0]:
        raise DataError(f"{len(lab)} labels for {X.shape[0]} feature rows")
    if not np.allclose(starts, [v.window_start_s for v in lab]):
        raise DataError("labels and features are on different window grids")
    return starts, names, X, np.array([v.perclos for v in lab])


def _model_config(args) -> ModelConfig:
    kw = dict(LIGHT_GRID) if args.light else {}
    if args.c_grid:
        kw["c_grid"] = _floats(args.c_grid)
    if args.g_grid:
        kw["g_grid"] = _floats(args.g_grid)
    if args.restarts:
        kw["restarts"] = args.restarts
    k1 = (args.k1,) if args.k1 else ModelConfig().k1_grid
    return ModelConfig(args.model, k1_grid=k1, seed=args.seed, **kw)


def cmd_train(args) -> None:
    _, names, X, y = _load_xy(args.features, args.labels)
    est = train_model(_model_config(args), X, y, _session_lengths(len(y), args.sessions))
    save_bundle(to_bundle(est, names, {"config_hash": _hash(args)}), args.out)


def cmd_predict(args) -> None:
    doc = load_bundle(args.model)
    est = from_bundle(doc)
    starts, names, X = read_matrix(args.features)
    if names_hash(names) != doc["feature_manifest_hash"]:
        raise DataError("feature columns do not match the model's feature manifest")
    pred = est.predict(X, _session_lengths(len(starts), args.sessions))
    write_matrix(args.out, starts, ["perclos_pred"], pred[:, None], _hash(args))


def cmd_eval(args) -> None:
    if args.config:
        cfg = load_config(args.config, {"seed": args.seed, "jobs": args.jobs})
        doc = run_experiment(cfg, write=False)
    else:
        if not (args.features and args.labels):
            raise ConfigError("eval needs --config, or --features and --labels")
        _, _, X, y = _load_xy(args.features, args.labels)
        mcfg = _model_config(args)
        from .pipeline import _Fit
        rep = five_fold(X, y, _Fit(mcfg), args.sessions or 5, model=mcfg.kind.value,
                        modality=args.modality, jobs=args.jobs)
        entry = rep.to_json()
        entry["confusion"] = confusion(rep.predictions, rep.truth).to_json()
        doc = {"version": __version__, "config_hash": _hash(args), "results": [entry]}
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_run(args) -> None:
    overrides = {"seed": args.seed, "out_dir": args.out_dir, "jobs": args.jobs}
    cfg = load_config(args.config, overrides)
    doc = run_experiment(cfg)
    for r in doc["results"]:
        cor = "n/a" if r["cor"] is None else f"{r['cor']:.3f}"
        print(f"{r['modality']:18s} {r['model']:5s} COR {cor}  RMSE {r['rmse_mean']:.3f}")


# ------------------------------------------------------------------ parser

def _model_args(p, default_model="svr"):
    p.add_argument("--model", default=default_model, choices=("svr", "ccrf", "ccnf"))
    p.add_argument("--k1", type=int, choices=(10, 20, 30))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int)
    p.add_argument("--c-grid", help="comma list, e.g. 2^-2,1,4")
    p.add_argument("--g-grid")
    p.add_argument("--light", action="store_true", help="small grids for quick runs")
    p.add_argument("--sessions", type=int, help="split rows into this many contiguous sessions")


def _window_args(p):
    p.add_argument("--windows", type=int)
    p.add_argument("--recording")
    p.add_argument("--duration", type=float)
    p.add_argument("--window-s", type=float, default=8.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vigil", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"vigil {__version__}")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for fold evaluation")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic session")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--duration", type=float, default=2400.0)
    p.add_argument("--rate", type=float, default=250.0)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("separate", help="VEO/HEO from the forehead channels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--method", default="ica-minus", choices=("minus", "ica", "ica-minus"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("detect", help="blink and saccade detection")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--veo", default="veo")
    p.add_argument("--heo", default="heo")
    p.add_argument("--detect-rate", type=float, default=100.0)
    p.add_argument("--theta-h", type=float)
    p.add_argument("--theta-l", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eog-features", help="36 eye-movement features per window")
    p.add_argument("--events", required=True)
    _window_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eog_features)

    p = sub.add_parser("eeg-features", help="differential-entropy features")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--site", default="forehead4", choices=tuple(eeg_mod.SITE_PRESETS))
    p.add_argument("--banding", default="2hz", choices=("5band", "2hz"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eeg_features)

    p = sub.add_parser("label", help="PERCLOS labels from a gaze stream")
    p.add_argument("--gaze", required=True)
    _window_args(p)
    p.add_argument("--smooth", type=int, default=0)
    p.add_argument("--drop-gaps", action="store_true", help="leave unlabelled time out of the denominator")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("fuse", help="concatenate EOG and EEG feature tables")
    p.add_argument("--eog", required=True)
    p.add_argument("--eeg", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train", help="fit a model bundle")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    _model_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a model bundle")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--sessions", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="five-fold session evaluation")
    p.add_argument("--config")
    p.add_argument("--features")
    p.add_argument("--labels")
    p.add_argument("--modality", default="", choices=("",) + MODALITIES)
    _model_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="full experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)          # usage errors exit with status 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except VigilError as exc:
        print(f"vigil {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"vigil {args.command}: {exc}", file=sys.stderr)
        return DataError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
