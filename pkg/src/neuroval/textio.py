"""Plain-text serialization of models, encoders, and predictors.

Format: `#` comment lines carry provenance and scalar fields as `key: value`
pairs; each matrix follows as a `name rows cols` line and `rows` lines of
row-major shortest-roundtrip decimals. Binary-free, self-describing, and
byte-stable across runs, so files double as golden fixtures.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .estimators import EncodingModel, TaskPredictor
from .linmodel import ModelParams


def dump_bundle(header: dict, matrices: dict) -> str:
    out = io.StringIO()
    for key, value in header.items():
        out.write(f"# {key}: {value}\n")
    for name, arr in matrices.items():
        a = np.atleast_2d(np.asarray(arr, dtype=float))
        out.write(f"{name} {a.shape[0]} {a.shape[1]}\n")
        for row in a:
            out.write(" ".join(repr(float(v)) for v in row) + "\n")
    return out.getvalue()


def parse_bundle(text: str) -> tuple[dict, dict]:
    header, matrices = {}, {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, value = body.split(":", 1)
                header[key.strip()] = value.strip()
            i += 1
            continue
        name, rows, cols = line.split()
        rows, cols = int(rows), int(cols)
        block = [[float(v) for v in lines[i + 1 + r].split()] for r in range(rows)]
        arr = np.array(block)
        if arr.shape != (rows, cols):
            raise ValueError(f"matrix {name}: expected {(rows, cols)}, got {arr.shape}")
        matrices[name] = arr
        i += 1 + rows
    return header, matrices


def save_model(path, params: ModelParams, provenance: str = "") -> None:
    header = {
        "kind": "model",
        "provenance": provenance,
        "dim_x": params.dim_x,
        "dim_latent": params.dim_latent,
        "dim_rec": params.dim_rec,
        "rec_noise_var": repr(params.rec_noise_var),
        "label_noise_var": repr(params.label_noise_var),
    }
    matrices = {
        "latent_map": params.latent_map,
        "readout": params.readout,
        "task_vector": params.task_vector,
        "latent_cov": params.latent_cov,
    }
    Path(path).write_text(dump_bundle(header, matrices))


def load_model(path) -> ModelParams:
    header, mats = parse_bundle(Path(path).read_text())
    if header.get("kind") != "model":
        raise ValueError(f"not a model bundle: kind={header.get('kind')!r}")
    return ModelParams(
        dim_x=int(header["dim_x"]),
        dim_latent=int(header["dim_latent"]),
        dim_rec=int(header["dim_rec"]),
        latent_map=mats["latent_map"],
        readout=mats["readout"],
        task_vector=mats["task_vector"].ravel(),
        latent_cov=mats["latent_cov"],
        rec_noise_var=float(header["rec_noise_var"]),
        label_noise_var=float(header["label_noise_var"]),
    )


def save_encoding(path, enc: EncodingModel, provenance: str = "") -> None:
    header = {"kind": "encoding", "provenance": provenance, "rank": enc.rank}
    Path(path).write_text(dump_bundle(header, {
        "basis": enc.basis, "readout": enc.readout, "projector": enc.projector,
    }))


def load_encoding(path) -> EncodingModel:
    header, mats = parse_bundle(Path(path).read_text())
    if header.get("kind") != "encoding":
        raise ValueError(f"not an encoding bundle: kind={header.get('kind')!r}")
    return EncodingModel(basis=mats["basis"], readout=mats["readout"], projector=mats["projector"])


def save_predictor(path, pred: TaskPredictor) -> None:
    header = {"kind": "predictor", "provenance": pred.provenance, "penalty": repr(pred.penalty)}
    Path(path).write_text(dump_bundle(header, {"coef": pred.coef}))


def load_predictor(path) -> TaskPredictor:
    header, mats = parse_bundle(Path(path).read_text())
    if header.get("kind") != "predictor":
        raise ValueError(f"not a predictor bundle: kind={header.get('kind')!r}")
    return TaskPredictor(coef=mats["coef"].ravel(), penalty=float(header["penalty"]),
                         provenance=header.get("provenance", ""))
