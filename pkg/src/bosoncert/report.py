"""CSV / JSON artifact writers.

Floats are written with 17 significant digits in both formats. Each file
carries a provenance block (tool, version, command, config echo, seed); it
deliberately omits anything that varies between identical runs such as
timestamps, worker counts or the output path.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .correlators import Species


def format_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_scalar(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no NaN/inf
        return format_float(x) if math.isfinite(x) else "null"
    if isinstance(x, Species):
        return json.dumps(x.value)
    return json.dumps(str(x))


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """``json.dumps`` with floats at 17 significant digits.

    Lists of scalars are kept on one line.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k.value if isinstance(k, Species) else k))}: "
                 f"{dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_scalar(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    return _json_scalar(obj)


def provenance(command: str, config: dict, seed) -> dict:
    return {"tool": "bosoncert", "version": __version__, "command": command,
            "seed": seed, "config": config}


def csv_text(header, rows, prov: dict | None = None) -> str:
    buf = io.StringIO()
    if prov is not None:
        buf.write("# provenance: " + json.dumps(prov, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def write_json(path: Path, doc) -> Path:
    return write_text(path, dumps(doc) + "\n")


# ---------------------------------------------------------------- per experiment

def write_histogram(result, out: Path, prov: dict) -> list[Path]:
    out = Path(out)
    written = []
    for s, ds in result.datasets.items():
        written.append(write_text(out / f"cdataset_{s.value}.csv",
                                  ds.to_csv(["provenance: " + json.dumps(prov, sort_keys=True)])))
        meta = ds.metadata()
        meta["input_modes"] = list(result.selection)
        meta["provenance"] = prov
        written.append(write_json(out / f"cdataset_{s.value}.json", meta))
        density, edges = result.histograms[s]
        rows = zip(edges[:-1], edges[1:], density)
        written.append(write_text(out / f"histogram_{s.value}.csv",
                                  csv_text(["bin_left", "bin_right", "density"], rows, prov)))
    summary = {"provenance": prov, "m": result.m, "n": result.config.n,
               "input_modes": list(result.selection), "statistics": {}}
    for s, st in result.statistics.items():
        summary["statistics"][s.value] = None if st is None else st._asdict()
    written.append(write_json(out / "histogram_summary.json", summary))
    return written


def write_sweep(result, out: Path, prov: dict) -> list[Path]:
    from .experiments import SWEEP_COLUMNS

    rows = [[r[c] for c in SWEEP_COLUMNS] for r in result.rows]
    return [write_text(Path(out) / "sweep.csv", csv_text(SWEEP_COLUMNS, rows, prov))]


def verdict_doc(verdict) -> dict:
    return verdict.to_json()


def scatter_summary(result, prov: dict) -> dict:
    doc = {
        "provenance": prov,
        "n": result.config.n,
        "m": result.m,
        "low_confidence": result.low_confidence,
        "predictions": {s.value: p._asdict() for s, p in result.predictions.items()},
        "repetitions": [],
    }
    for rep in result.repetitions:
        rdoc = {"rep": rep.rep, "clouds": {}, "verdicts": {}, "separations": {}}
        for s, cloud in rep.clouds.items():
            rdoc["clouds"][s.value] = None if cloud is None else cloud.to_json()
            rdoc["verdicts"][s.value] = [v.to_json() for _, v in sorted(rep.verdicts[s].items())]
        for (a, b), d in rep.separations.items():
            rdoc["separations"][f"{a.value}-{b.value}"] = d
        doc["repetitions"].append(rdoc)
    return doc


def write_scatter(result, out: Path, prov: dict) -> list[Path]:
    out = Path(out)
    written = []
    multi = len(result.repetitions) > 1
    for rep in result.repetitions:
        suffix = f"_rep{rep.rep}" if multi else ""
        for s, pts in rep.points.items():
            rows = [(int(t), cv, sk) for t, (cv, sk) in zip(rep.trial_ids[s], pts)]
            written.append(write_text(out / f"cloud_{s.value}{suffix}.csv",
                                      csv_text(["trial", "cv", "s"], rows, prov)))
    written.append(write_json(out / "scatter_summary.json", scatter_summary(result, prov)))
    return written
