"""Reading and writing channel specifications.

A spec is a JSON object::

    {"name": "qubit", "dim": 2, "inputs": 2,
     "matrices": [[[[0.9, 0], [0.05, 0]], [[0.05, 0], [0.1, 0]]],
                  [[[0.3, 0], [0.2, 0]], [[0.2, 0], [0.7, 0]]]]}

Each matrix is a row-major nested array of ``[re, im]`` pairs.  Instead of
``matrices`` a spec may carry ``"symmetric": {"W1": ..., "V": ..., "m": k}``,
which generates ``W_x = V^x W1 V^-x``.  When both are present they must agree.
Errors report the line and column of the offending token.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
from dataclasses import dataclass, field

import numpy as np

from .channels import CQChannel
from .errors import CQExpError, SpecError

__all__ = ["ChannelSpec", "parse_spec", "load_spec", "dump_spec", "save_spec", "matrix_to_pairs"]


@dataclass
class ChannelSpec:
    """Parsed channel specification."""

    matrices: list
    name: str = ""
    description: str = ""
    symmetric: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return int(self.matrices[0].shape[0])

    @property
    def inputs(self) -> int:
        return len(self.matrices)

    def channel(self) -> CQChannel:
        return CQChannel(self.matrices, name=self.name)

    @classmethod
    def from_channel(cls, W: CQChannel, name: str = "", description: str = "") -> "ChannelSpec":
        return cls([np.array(W[x].matrix, dtype=complex) for x in range(W.size)],
                   name or W.name, description)


def _tracking_decoder(positions):
    dec = json.JSONDecoder()

    def parse_array(s_and_end, scan_once, _f=json.decoder.JSONArray):
        start = s_and_end[1] - 1
        val, end = _f(s_and_end, scan_once)
        positions[id(val)] = start
        return val, end

    dec.parse_array = parse_array
    dec.scan_once = json.scanner.py_make_scanner(dec)
    return dec


def _linecol(text, pos):
    if pos is None:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _matrix(node, text, positions, what, dim=None):
    def fail(msg, at):
        raise SpecError(f"{what}: {msg}", *_linecol(text, positions.get(id(at))))

    if not isinstance(node, list) or not node:
        fail("expected a non-empty array of rows", node)
    rows = []
    for row in node:
        if not isinstance(row, list):
            fail("expected a row array", node)
        vals = []
        for pair in row:
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)):
                fail("expected an [re, im] pair of numbers", pair if isinstance(pair, list) else row)
            vals.append(complex(pair[0], pair[1]))
        rows.append(vals)
    size = len(rows)
    if any(len(r) != size for r in rows):
        fail("matrix is not square", node)
    if dim is not None and size != dim:
        fail(f"matrix is {size}x{size}, expected {dim}x{dim}", node)
    return np.array(rows, dtype=complex)


def parse_spec(text: str) -> ChannelSpec:
    """Parse spec text into a validated :class:`ChannelSpec`.

    Raises:
        SpecError: on malformed JSON, wrong shapes, or invalid operators.
    """
    positions = {}
    try:
        obj = _tracking_decoder(positions).decode(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(obj, dict):
        raise SpecError("top level must be an object", 1, 1)

    dim = obj.get("dim")
    if dim is not None and (not isinstance(dim, int) or dim < 1):
        raise SpecError("'dim' must be a positive integer")
    mats = None
    if "matrices" in obj:
        node = obj["matrices"]
        if not isinstance(node, list) or not node:
            raise SpecError("'matrices' must be a non-empty array",
                            *_linecol(text, positions.get(id(node))))
        mats = [_matrix(m, text, positions, f"matrices[{i}]", dim) for i, m in enumerate(node)]

    sym = None
    if "symmetric" in obj:
        blk = obj["symmetric"]
        if not isinstance(blk, dict) or not {"W1", "V", "m"} <= set(blk):
            raise SpecError("'symmetric' needs keys W1, V and m")
        W1 = _matrix(blk["W1"], text, positions, "symmetric.W1", dim)
        V = _matrix(blk["V"], text, positions, "symmetric.V", W1.shape[0])
        m = blk["m"]
        if not isinstance(m, int) or m < 1:
            raise SpecError("'symmetric.m' must be a positive integer")
        from .converse import build_symmetric

        try:
            gen = build_symmetric(W1, V, m)
        except CQExpError as exc:
            raise SpecError(f"symmetric block: {exc}") from None
        sym = {"W1": W1, "V": V, "m": m}
        gen_mats = [np.array(gen[x].matrix) for x in range(m)]
        if mats is None:
            mats = gen_mats
        elif len(mats) != m or any(np.max(np.abs(a - b)) > 1e-10 for a, b in zip(mats, gen_mats)):
            raise SpecError("'matrices' disagree with the symmetric block")
    if mats is None:
        raise SpecError("spec needs 'matrices' or a 'symmetric' block")
    if "inputs" in obj and obj["inputs"] != len(mats):
        raise SpecError(f"'inputs' is {obj['inputs']} but {len(mats)} matrices were given")
    if len({m.shape for m in mats}) != 1:
        raise SpecError("matrices have different sizes")

    extra = {k: v for k, v in obj.items()
             if k not in {"name", "description", "dim", "inputs", "matrices", "symmetric"}}
    spec = ChannelSpec(mats, str(obj.get("name", "")), str(obj.get("description", "")), sym, extra)
    try:
        spec.channel()
    except CQExpError as exc:
        raise SpecError(f"invalid channel: {exc}") from None
    return spec


def load_spec(path) -> ChannelSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def matrix_to_pairs(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _dump_matrix(M, indent):
    pad = " " * indent
    rows = [json.dumps(r) for r in matrix_to_pairs(M)]
    return "[\n" + ",\n".join(pad + "  " + r for r in rows) + "\n" + pad + "]"


def dump_spec(spec: ChannelSpec) -> str:
    """Serialise a spec; floats use shortest round-trip repr, so parsing is lossless."""
    parts = [f'  "name": {json.dumps(spec.name)}']
    if spec.description:
        parts.append(f'  "description": {json.dumps(spec.description)}')
    parts.append(f'  "dim": {spec.dim}')
    parts.append(f'  "inputs": {spec.inputs}')
    mats = ",\n".join("    " + _dump_matrix(M, 4) for M in spec.matrices)
    parts.append('  "matrices": [\n' + mats + "\n  ]")
    if spec.symmetric is not None:
        s = spec.symmetric
        parts.append('  "symmetric": {\n    "W1": ' + _dump_matrix(s["W1"], 4)
                     + ',\n    "V": ' + _dump_matrix(s["V"], 4) + f',\n    "m": {int(s["m"])}\n  }}')
    for k, v in spec.extra.items():
        parts.append(f"  {json.dumps(k)}: {json.dumps(v)}")
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save_spec(spec: ChannelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_spec(spec))
