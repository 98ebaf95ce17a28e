"""Instance files and trace files.

An instance file is one JSON document: header fields (format, version,
problem, spec, seed) followed by scalars and arrays.  Arrays are stored as
base64 of their little-endian bytes with dtype and shape alongside, so a
load/save round trip reproduces the file byte for byte.

A CSV trace has the header ``k,f,G,H,step_kind,alpha,active_size``, one row
per recorded iteration, and a footer of ``# `` prefixed lines holding a JSON
metadata object.  The ``f`` column is the best value seen so far, the f_k of
the termination test, so it never increases down the file.
"""

import base64
from dataclasses import dataclass, field
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import IterationRecord, StepKind
from .nucnorm import GenNucNormRegion
from .objective import LeastSquaresObjective, MaskedFrobeniusObjective
from .synth import MatrixGenSpec, TrendGenSpec, gen_matrix_instance, gen_trend_instance
from .trendfilter import TrendFilterRegion

FORMAT = "ufw-instance"
VERSION = 1
TRACE_COLUMNS = ("k", "f", "G", "H", "step_kind", "alpha", "active_size")
_DTYPES = {"f8": "<f8", "i8": "<i8"}


def _encode_number(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _decode_number(v):
    if isinstance(v, str) and v in ("inf", "-inf", "nan"):
        return float(v)
    return v


def _encode_array(a):
    a = np.asarray(a)
    kind = "f8" if a.dtype.kind == "f" else "i8"
    data = np.ascontiguousarray(a, dtype=_DTYPES[kind]).tobytes()
    return {"dtype": kind, "shape": list(a.shape), "data": base64.b64encode(data).decode("ascii")}


def _decode_array(d):
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=_DTYPES[d["dtype"]]).astype(float if d["dtype"] == "f8" else np.int64).reshape(d["shape"])


@dataclass
class ProblemInstance:
    problem: str  # "trend" or "matrix"
    spec: dict
    seed: int
    scalars: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)

    def to_json(self):
        doc = {
            "format": FORMAT,
            "version": VERSION,
            "problem": self.problem,
            "spec": {k: _encode_number(v) for k, v in self.spec.items()},
            "seed": self.seed,
            "scalars": {k: _encode_number(v) for k, v in self.scalars.items()},
            "arrays": {k: _encode_array(v) for k, v in self.arrays.items()},
        }
        return json.dumps(doc, indent=1) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != FORMAT:
            raise ValueError("not a ufw instance file")
        if doc.get("version") != VERSION:
            raise ValueError(f"unsupported instance version {doc.get('version')}")
        if doc["problem"] not in ("trend", "matrix"):
            raise ValueError(f"unknown problem kind {doc['problem']!r}")
        return cls(
            problem=doc["problem"],
            spec={k: _decode_number(v) for k, v in doc["spec"].items()},
            seed=doc["seed"],
            scalars={k: _decode_number(v) for k, v in doc["scalars"].items()},
            arrays={k: _decode_array(v) for k, v in doc["arrays"].items()},
        )

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def content_hash(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def make_trend_instance(spec):
    A, b, x_star, delta = gen_trend_instance(spec)
    return ProblemInstance(
        "trend", spec.to_dict(), spec.seed,
        scalars={"n": spec.n, "r": spec.r, "delta": delta},
        arrays={"A": A, "b": b, "x_star": x_star},
    )


def make_matrix_instance(spec):
    B_obs, (rows, cols), P1, delta, truth = gen_matrix_instance(spec)
    return ProblemInstance(
        "matrix", spec.to_dict(), spec.seed,
        scalars={"m": spec.m, "n": spec.n, "delta": delta},
        arrays={"rows": rows, "cols": cols, "values": B_obs[rows, cols], "P1": P1,
                "ground_truth": truth},
    )


def build_problem(instance):
    """(objective, region) for a loaded instance."""
    s, a = instance.scalars, instance.arrays
    if instance.problem == "trend":
        return (LeastSquaresObjective(a["A"], a["b"]),
                TrendFilterRegion(int(s["n"]), int(s["r"]), float(s["delta"])))
    m, n = int(s["m"]), int(s["n"])
    objective = MaskedFrobeniusObjective((m, n), a["rows"], a["cols"], a["values"])
    region = GenNucNormRegion.side_information(a["P1"], n, float(s["delta"]))
    return objective, region


def parse_inline_spec(text):
    """``trend:N=200,n=100,r=1,snr=1,seed=0`` or ``matrix:m=50,...`` to a spec object."""
    kind, _, body = text.partition(":")
    fields = {}
    for item in filter(None, body.split(",")):
        key, _, value = item.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        fields[key] = float(value) if any(ch in value for ch in ".eEn") or value == "inf" else int(value)
    if kind == "trend":
        return TrendGenSpec(**fields)
    if kind == "matrix":
        return MatrixGenSpec(**fields)
    raise ValueError(f"unknown inline problem kind {kind!r}")


def make_instance(spec):
    return make_trend_instance(spec) if isinstance(spec, TrendGenSpec) else make_matrix_instance(spec)


def _fmt(v):
    return repr(float(v))


def _running_best(records):
    best = math.inf
    for r in records:
        best = min(best, r.f_val)
        yield r, best


def write_trace_csv(records, meta, stream):
    stream.write(",".join(TRACE_COLUMNS) + "\n")
    for r, best in _running_best(records):
        stream.write(",".join([str(r.k), _fmt(best), _fmt(r.G), _fmt(r.H),
                               StepKind(r.step_kind).value, _fmt(r.alpha), str(r.active_size)]) + "\n")
    for line in json.dumps(meta, indent=1, sort_keys=True).splitlines():
        stream.write("# " + line + "\n")


def read_trace_csv(stream):
    """Returns (records, meta).  f_val reads back as the best-so-far value and
    f_y, which is not stored, as nan."""
    records, footer = [], []
    header = stream.readline().strip()
    if tuple(header.split(",")) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {header!r}")
    for line in stream:
        line = line.rstrip("\n")
        if line.startswith("#"):
            footer.append(line[2:] if line.startswith("# ") else line[1:])
        elif line:
            k, f, G, H, kind, alpha, active = line.split(",")
            records.append(IterationRecord(int(k), float(f), float(G), float(H),
                                           StepKind(kind), float(alpha), int(active)))
    return records, (json.loads("\n".join(footer)) if footer else {})


def write_trace_json(records, meta, stream):
    rows = [{"k": r.k, "f": best, "G": r.G, "H": r.H, "step_kind": StepKind(r.step_kind).value,
             "alpha": r.alpha, "active_size": r.active_size} for r, best in _running_best(records)]
    json.dump({"records": rows, "meta": meta}, stream, indent=1, sort_keys=True)
    stream.write("\n")


def read_trace_json(stream):
    doc = json.load(stream)
    records = [IterationRecord(d["k"], d["f"], d["G"], d["H"], StepKind(d["step_kind"]),
                               d["alpha"], d["active_size"]) for d in doc["records"]]
    return records, doc["meta"]


def trace_to_string(records, meta, fmt="csv"):
    buf = io.StringIO()
    (write_trace_csv if fmt == "csv" else write_trace_json)(records, meta, buf)
    return buf.getvalue()
