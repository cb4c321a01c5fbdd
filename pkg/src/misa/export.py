"""Plain-text run artifacts: history, metric reports, embeddings and attention maps.

Every writer goes through :func:`atomic_write`, so a crash never leaves a
truncated file behind.

Formats (tab separated, floats as decimal text):

* ``history.jsonl``: one JSON object per epoch, ``{epoch, lr, train: {...}, val: {...}}``
* ``embeddings.txt``: ``id  kind  modality  v_1 ... v_d`` with kind ``hc`` or ``hp``
* ``attention.txt``: ``id  a_11 ... a_RR`` (row-major, head-averaged), after a ``# rows`` header
* ``attention_mean.txt``: the split-mean attention matrix, one matrix row per line
"""

from __future__ import annotations

import json
import os

import numpy as np


def atomic_write(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _floats(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def write_history(path, records):
    atomic_write(path, "".join(json.dumps(r.to_json(), sort_keys=True) + "\n" for r in records))


def read_history(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_embeddings(path, result):
    lines = []
    for kind, reps in (("hc", result.shared), ("hp", result.private)):
        for m, matrix in reps.items():
            for ex_id, vec in zip(result.ids, matrix):
                lines.append(f"{ex_id}\t{kind}\t{m}\t{_floats(vec)}\n")
    atomic_write(path, "".join(lines))
    return len(lines)


def read_embeddings(path):
    """List of (id, kind, modality, vector) records."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            ex_id, kind, m, vec = line.rstrip("\n").split("\t")
            out.append((ex_id, kind, m, np.array(vec.split(), dtype=np.float64)))
    return out


def write_attention(path, mean_path, result):
    rows = list(result.rows)
    lines = ["# rows " + " ".join(rows) + "\n"]
    for ex_id, att in zip(result.ids, result.attention):
        lines.append(f"{ex_id}\t{_floats(att)}\n")
    atomic_write(path, "".join(lines))
    mean = result.attention.astype(np.float64).mean(axis=0)
    atomic_write(mean_path, "# rows " + " ".join(rows) + "\n" + "".join(_floats(r) + "\n" for r in mean))
    return mean


def read_attention(path):
    """(row labels, {id: (R, R) matrix})."""
    with open(path, encoding="utf-8") as fh:
        rows = fh.readline().split()[2:]
        maps = {}
        for line in fh:
            ex_id, vec = line.rstrip("\n").split("\t")
            maps[ex_id] = np.array(vec.split(), dtype=np.float64).reshape(len(rows), len(rows))
    return rows, maps


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        return np.array([line.split() for line in fh if not line.startswith("#")], dtype=np.float64)
