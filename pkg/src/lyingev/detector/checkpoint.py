"""Plain-text model checkpoints.

Layout (version 1), UTF-8, one record per line::

    lyingev-checkpoint 1
    kind gru                      # or mlp
    activation softsign
    dropout 0.0
    layers 2                      # gru only
    units 128                     # gru only
    layer_sizes 48 768 ... 2      # mlp only
    params <count>
    param <name> <rows> <cols>    # vectors are written as 1 x n
    <row 0 values, space separated, %.17g>
    ...
    end

Parameters appear in the model's own order and each matrix is written
row-major, so values round-trip exactly.
"""

from __future__ import annotations

import numpy as np

from .gru import Gru
from .mlp import Mlp

MAGIC = "lyingev-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(model) -> str:
    lines = [f"{MAGIC} {VERSION}", f"kind {model.kind}", f"activation {model.activation}",
             f"dropout {model.dropout!r}"]
    if model.kind == "gru":
        lines += [f"layers {model.n_layers}", f"units {model.units}"]
    else:
        lines.append("layer_sizes " + " ".join(str(n) for n in model.layer_sizes))
    lines.append(f"params {len(model.params)}")
    for name, value in model.params.items():
        m = np.atleast_2d(value)
        lines.append(f"param {name} {m.shape[0]} {m.shape[1]}")
        lines.extend(" ".join("%.17g" % v for v in row) for row in m)
    lines.append("end")
    return "\n".join(lines) + "\n"


def save(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def _expect(lines, i, key):
    if i >= len(lines):
        raise CheckpointError(f"line {i + 1}: unexpected end of file, wanted {key!r}")
    parts = lines[i].split()
    if not parts or parts[0] != key:
        raise CheckpointError(f"line {i + 1}: expected {key!r}, got {lines[i]!r}")
    return parts[1:]


def loads(text: str):
    lines = text.splitlines()
    head = _expect(lines, 0, MAGIC)
    if head != [str(VERSION)]:
        raise CheckpointError(f"unsupported checkpoint version {' '.join(head)}")
    kind = _expect(lines, 1, "kind")[0]
    activation = _expect(lines, 2, "activation")[0]
    dropout = float(_expect(lines, 3, "dropout")[0])
    if kind == "gru":
        layers = int(_expect(lines, 4, "layers")[0])
        units = int(_expect(lines, 5, "units")[0])
        model = Gru(layers, units, activation=activation, dropout=dropout)
        i = 6
    elif kind == "mlp":
        sizes = [int(v) for v in _expect(lines, 4, "layer_sizes")]
        model = Mlp(sizes, activation=activation, dropout=dropout)
        i = 5
    else:
        raise CheckpointError(f"unknown model kind {kind!r}")
    count = int(_expect(lines, i, "params")[0])
    i += 1
    if count != len(model.params):
        raise CheckpointError(f"checkpoint lists {count} parameters, model has {len(model.params)}")
    for _ in range(count):
        name, rows, cols = _expect(lines, i, "param")
        rows, cols = int(rows), int(cols)
        if name not in model.params:
            raise CheckpointError(f"line {i + 1}: unexpected parameter {name!r}")
        target = model.params[name]
        if np.atleast_2d(target).shape != (rows, cols):
            raise CheckpointError(f"line {i + 1}: {name} has shape {rows}x{cols}, "
                                  f"expected {np.atleast_2d(target).shape}")
        block = lines[i + 1 : i + 1 + rows]
        try:
            values = np.array([[float(v) for v in row.split()] for row in block])
        except ValueError as exc:
            raise CheckpointError(f"parameter {name}: {exc}") from None
        if values.shape != (rows, cols):
            raise CheckpointError(f"parameter {name}: truncated or ragged block")
        if not np.all(np.isfinite(values)):
            raise CheckpointError(f"parameter {name}: non-finite values")
        model.params[name] = values.reshape(target.shape)
        i += 1 + rows
    _expect(lines, i, "end")
    return model


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
