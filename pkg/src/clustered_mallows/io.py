"""Reading rankings and writing results as plain CSV and JSON.

Every writer takes a ``config`` mapping that is embedded in the file (a
``# config:`` comment line for CSV, a ``config`` field for JSON), so that a
result can be regenerated from its own header.
"""
from __future__ import annotations

import csv
import io
import json
import os
from typing import Mapping

import numpy as np

from .errors import FullyMissingRow, InconsistentWidth, InvalidLabel
from .rank_core import Allocation, RankingDataset, brack

TIED = " ~ "
PREFERRED = " ≻ "


def fmt(x: float) -> str:
    """Floats are written with 12 significant digits."""
    return format(float(x), ".12g")


def config_line(config: Mapping | None) -> str:
    return "# config: " + json.dumps(dict(config or {}), sort_keys=True, default=str) + "\n"


def read_config(path) -> dict:
    """The embedded config of a CSV written by this module (empty if absent)."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# config:"):
                return json.loads(line[len("# config:"):])
            if not line.startswith("#"):
                break
    return {}


# rankings -------------------------------------------------------------------------

def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def read_rankings(path, orientation: str = "ordering", delimiter: str = ",") -> RankingDataset:
    """Delimited rankings, one row per assessor.

    ``ordering`` rows list item labels by rank position; ``ranks`` rows give
    the rank of items ``1..n``.  Blank or ``0`` cells are missing, lines
    starting with ``#`` are skipped and a first row with non-integer cells
    is read as item names.
    """
    if orientation not in ("ordering", "ranks"):
        raise ValueError("orientation must be 'ordering' or 'ranks'")
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    names = None
    rows: list[list[int]] = []
    width = None
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    for lineno, cells in enumerate(reader, start=1):
        if not cells or cells[0].lstrip().startswith("#"):
            continue
        cells = [c.strip() for c in cells]
        if cells == [""]:
            continue
        if width is None:
            width = len(cells)
            if not all(c == "" or _is_int(c) for c in cells):
                names = cells
                continue
        if len(cells) != width:
            raise InconsistentWidth(lineno, f"expected {width} cells, found {len(cells)}")
        vals = []
        for c in cells:
            if c == "":
                vals.append(0)
            elif _is_int(c) and 0 <= int(c) <= width:
                vals.append(int(c))
            else:
                raise InvalidLabel(lineno, f"{c!r} is not a label in 0..{width}")
        if not any(vals):
            raise FullyMissingRow(lineno, "no observed cell")
        seen = [v for v in vals if v]
        if len(set(seen)) != len(seen):
            raise InvalidLabel(lineno, "repeated label")
        if orientation == "ranks":
            order = [0] * width
            for item, rank in enumerate(vals, start=1):
                if rank:
                    order[rank - 1] = item
            vals = order
        rows.append(vals)
    if width is None:
        from .errors import EmptyInput

        raise EmptyInput(f"{path}: no rankings found")
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, width)
    return RankingDataset(arr, item_names=names)


def rankings_text(data: RankingDataset, config: Mapping | None = None) -> str:
    buf = io.StringIO()
    buf.write(config_line(config))
    w = csv.writer(buf, lineterminator="\n")
    if data.item_names:
        w.writerow(data.item_names)
    for row in data.orders:
        w.writerow(["" if x == 0 else int(x) for x in row])
    return buf.getvalue()


def write_rankings(path, data: RankingDataset, config: Mapping | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rankings_text(data, config))


# allocations ----------------------------------------------------------------------

def label_string(z: Allocation) -> str:
    """Labels as one digit each, dot-separated once ``L`` reaches 10."""
    return ("" if z.L < 10 else ".").join(map(str, z.labels))


def parse_label_string(s: str) -> Allocation:
    return Allocation(tuple(int(c) for c in (s.split(".") if "." in s else s)))


def render_clusters(z: Allocation, names=None) -> str:
    """``a ~ b`` for tied items, ``≻`` between consecutive clusters."""
    def name(i):
        return names[i - 1] if names else str(i)

    return PREFERRED.join(TIED.join(name(i) for i in sorted(b)) for b in brack(z))


# traces -----------------------------------------------------------------------------

TRACE_COLUMNS = ["iteration", "theta", "z", "log_target", "accept_z", "accept_theta", "dist_sum"]


def write_trace(path, trace, config: Mapping | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(config_line(config))
        fh.write(f"# burn_in: {trace.burn_in}\n# sigma: {fmt(trace.sigma)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t in range(len(trace)):
            z = Allocation(tuple(int(x) for x in trace.z[t]))
            w.writerow([t + 1, fmt(trace.theta[t]), label_string(z), fmt(trace.log_target[t]),
                        int(trace.accept_z[t]), int(trace.accept_theta[t]),
                        int(trace.dist_sum[t])])


def read_trace(path):
    from .bayes import PosteriorTrace

    burn_in, sigma = 0, float("nan")
    body = []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# burn_in:"):
                burn_in = int(line.split(":", 1)[1])
            elif line.startswith("# sigma:"):
                sigma = float(line.split(":", 1)[1])
            elif not line.startswith("#"):
                body.append(line)
    rows = list(csv.DictReader(body))
    z = np.array([parse_label_string(r["z"]).labels for r in rows], dtype=np.int64)
    return PosteriorTrace(
        z=z.reshape(len(rows), -1),
        theta=np.array([float(r["theta"]) for r in rows]),
        log_target=np.array([float(r["log_target"]) for r in rows]),
        accept_z=np.array([r["accept_z"] == "1" for r in rows]),
        accept_theta=np.array([r["accept_theta"] == "1" for r in rows]),
        dist_sum=np.array([int(r["dist_sum"]) for r in rows], dtype=np.int64),
        burn_in=burn_in,
        sigma=sigma,
    )


def map_summary(trace, names=None, level: float = 0.95) -> dict:
    z = trace.map_z()
    lo, hi = trace.credible_interval(level)
    acc_z, acc_t = trace.acceptance_rates()
    return {
        "map_z": list(z.labels),
        "clusters": [[names[i - 1] if names else i for i in sorted(b)] for b in brack(z)],
        "rendering": render_clusters(z, names),
        "clustering_table": list(z.ct.sizes),
        "theta": {"map": float(fmt(trace.theta_map())), "mean": float(fmt(trace.theta_mean())),
                  "interval": [float(fmt(lo)), float(fmt(hi))], "level": level},
        "acceptance": {"z": float(fmt(acc_z)), "theta": float(fmt(acc_t))},
        "iterations": len(trace),
        "burn_in": trace.burn_in,
    }


def write_json(path, payload: Mapping, config: Mapping | None = None) -> None:
    out = dict(payload)
    out["config"] = dict(config or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True, ensure_ascii=False, default=str)
        fh.write("\n")


# matrices and reports -----------------------------------------------------------------

def write_matrix(path, mat: np.ndarray, row_label: str, col_names, row_names=None,
                 config: Mapping | None = None) -> None:
    mat = np.asarray(mat, dtype=float)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(config_line(config))
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([row_label, *col_names])
        for i, row in enumerate(mat):
            label = row_names[i] if row_names is not None else i + 1
            w.writerow([label, *("" if np.isnan(x) else fmt(x) for x in row)])


def read_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        body = [line for line in fh if not line.startswith("#")]
    rows = list(csv.reader(body))[1:]
    return np.array([[float(x) if x else np.nan for x in r[1:]] for r in rows])


def write_rc_probs(path, rc: np.ndarray, config: Mapping | None = None) -> None:
    write_matrix(path, rc, "rank", [f"cluster_{l + 1}" for l in range(rc.shape[1])],
                 config=config)


def write_pref_matrix(path, pref, names=None, config: Mapping | None = None) -> None:
    labels = list(names) if names else [str(i + 1) for i in range(pref.n)]
    write_matrix(path, pref.p, "item", labels, row_names=labels, config=config)


def write_search_report(path, result, config: Mapping | None = None) -> None:
    on_path = {ct.sizes for ct in result.path}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(config_line(config))
        fh.write(f"# decisive: {int(result.decisive)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ct", "z", "theta", "criterion", "value", "se", "on_path", "best"])
        for c in result.ranking:
            w.writerow([",".join(map(str, c.ct.sizes)), label_string(c.z), fmt(c.theta),
                        c.criterion.value, fmt(c.value), fmt(c.se),
                        int(c.ct.sizes in on_path), int(c.ct == result.best.ct)])


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
