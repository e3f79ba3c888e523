"""Binary snapshot dump: one JSON header line, then little-endian complex64 data."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .grid import GridSpec, ModelParams, build_grid
from .state import SpinorWaveFunction

FORMAT = "bohmlab-snapshot"


def dump_state(psi: SpinorWaveFunction, path) -> Path:
    g = psi.grid
    header = {
        "format": FORMAT,
        "version": 1,
        "num_particles": g.num_particles,
        "space_dim": g.space_dim,
        "box": list(g.spec.box),
        "points_per_axis": g.m,
        "spin_dim": psi.params.spin_dim,
        "masses": list(psi.params.masses),
        "hbar": psi.params.hbar,
        "time": psi.time,
        "shape": list(psi.amplitudes.shape),
        "dtype": "<c8",
        "order": "C",
    }
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(psi.amplitudes, dtype="<c8").tobytes())
    return path


def load_state(path) -> SpinorWaveFunction:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline())
        raw = fh.read()
    if header.get("format") != FORMAT:
        raise ValidationError(f"{path}: not a {FORMAT} file")
    shape = tuple(header["shape"])
    amp = np.frombuffer(raw, dtype="<c8")
    if amp.size != int(np.prod(shape)):
        raise ValidationError(f"{path}: payload has {amp.size} values, header wants {shape}")
    spec = GridSpec(header["num_particles"], header["space_dim"], tuple(header["box"]),
                    header["points_per_axis"])
    params = ModelParams(tuple(header["masses"]), header["hbar"], header["spin_dim"])
    return SpinorWaveFunction(build_grid(spec, params), params,
                              amp.reshape(shape).astype(complex), header["time"])
