"""Convert MATLAB recordings and PERCLOS vectors to vigil's file formats.

    python3 repro/convert_mat.py recording --mat raw/1_20151124_noon_2.mat \
        --key EEG --channels ch4,ch5,ch6,ch7 --rows 0,1,2,3 --rate 1000 --out data/s1_forehead.bin
    python3 repro/convert_mat.py labels --mat perclos/1_20151124_noon_2.mat \
        --key perclos --out data/s1_labels.csv

Field names differ between dataset releases; list them with ``--show``.
"""
from __future__ import annotations

import argparse

import numpy as np
from scipy.io import loadmat

from vigil.dsp import Recording, write_recording
from vigil.labels import VigilanceLabel, split_states, write_labels_csv


def _load(path, key):
    mat = loadmat(path)
    if key not in mat:
        keys = sorted(k for k in mat if not k.startswith("__"))
        raise SystemExit(f"{path}: no field {key!r}; available: {', '.join(keys)}")
    return np.asarray(mat[key])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("what", choices=("recording", "labels", "show"))
    ap.add_argument("--mat", required=True)
    ap.add_argument("--key")
    ap.add_argument("--channels", help="names to give the selected rows")
    ap.add_argument("--rows", help="row (or column) indices to keep")
    ap.add_argument("--rate", type=float)
    ap.add_argument("--window-s", type=float, default=8.0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    if args.what == "show":
        for k, v in loadmat(args.mat).items():
            if not k.startswith("__"):
                print(k, getattr(v, "shape", type(v)))
        return
    data = _load(args.mat, args.key)
    if args.what == "labels":
        values = data.ravel().astype(float)
        labels = [VigilanceLabel(float(v), split_states(float(np.clip(v, 0, 1))), i * args.window_s)
                  for i, v in enumerate(values)]
        write_labels_csv(labels, args.out)
        return
    names = args.channels.split(",")
    rows = [int(r) for r in args.rows.split(",")]
    # stored either channels x time or time x channels
    samples = data[rows] if data.shape[0] < data.shape[1] else data[:, rows].T
    write_recording(Recording(samples.astype(np.float64), names, args.rate), args.out)


if __name__ == "__main__":
    main()
