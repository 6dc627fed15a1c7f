"""Reading and writing datasets, models, tables and DOT drawings.

All external formats use 1-based node labels; everything in memory is
0-based.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from .distribution import JointTable, LogLinearParams, mask_of, nodes_of, phi_to_theta
from .errors import DomainError, ParseError, SchemaError
from .graph import UndirectedGraph, common_neighbors
from .model import Context, StratifiedGraph, Stratum
from .scoring import Dataset

SCHEMA = "sgm-v1"
BIT_ORDER = "lsb=var1"


class EmptyDataWarning(UserWarning):
    pass


class ConstantColumnWarning(UserWarning):
    pass


class ModelFileWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CsvSpec:
    delimiter: str = ","
    header: bool = True


def load_csv(path, spec: CsvSpec = CsvSpec()) -> Dataset:
    """Read a 0/1 CSV file into a :class:`Dataset`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        lines = [(i, row) for i, row in enumerate(reader, start=1) if row and any(c.strip() for c in row)]
    names: tuple[str, ...] = ()
    if spec.header:
        if not lines:
            raise ParseError("missing header", 1)
        names = tuple(c.strip() for c in lines[0][1])
        lines = lines[1:]
    width = len(names) if names else (len(lines[0][1]) if lines else 0)
    if width == 0:
        raise ParseError("cannot infer the number of columns", 1)
    rows = np.zeros((len(lines), width), dtype=np.uint8)
    for r, (lineno, row) in enumerate(lines):
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell not in ("0", "1"):
                try:
                    float(cell)
                except ValueError:
                    raise ParseError(f"cannot parse {cell!r}", lineno, c + 1) from None
                raise DomainError(f"value {cell!r} is not 0 or 1", lineno, c + 1)
            rows[r, c] = cell == "1"
    if len(rows) == 0:
        warnings.warn(f"{path}: no data rows", EmptyDataWarning, stacklevel=2)
    else:
        for c in range(width):
            if rows[:, c].min() == rows[:, c].max():
                label = names[c] if names else f"X{c + 1}"
                warnings.warn(f"column {label} is constant", ConstantColumnWarning, stacklevel=2)
    return Dataset.from_rows(rows, names)


def write_csv(path, rows: np.ndarray, names: Iterable[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names))
        writer.writerows(np.asarray(rows, dtype=int).tolist())


def heart_disease() -> Dataset:
    """The bundled coronary heart disease data (1841 men, six binary factors)."""
    path = resources.files("sgm") / "data" / "heart_disease.csv"
    with resources.as_file(path) as p:
        return load_csv(p)


# -- graphs and models -----------------------------------------------------


def graph_to_dict(g: UndirectedGraph) -> dict:
    return {"nodes": g.node_count, "edges": [[a + 1, b + 1] for a, b in g.sorted_edges()]}


def _expect(cond: bool, message: str, pointer: str) -> None:
    if not cond:
        raise SchemaError(message, pointer)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _parse_edge(raw, d: int, pointer: str) -> tuple[int, int]:
    _expect(isinstance(raw, list) and len(raw) == 2 and all(_is_int(v) for v in raw),
            "an edge is a pair of integers", pointer)
    a, b = raw
    _expect(1 <= a <= d and 1 <= b <= d, f"node labels must lie in 1..{d}", pointer)
    _expect(a != b, "self-loops are not allowed", pointer)
    return (a - 1, b - 1) if a < b else (b - 1, a - 1)


def graph_from_dict(obj: dict, pointer: str = "") -> UndirectedGraph:
    _expect(isinstance(obj, dict), "expected an object", pointer)
    d = obj.get("nodes")
    _expect(_is_int(d) and d >= 1, "'nodes' must be a positive integer", f"{pointer}/nodes")
    edges = obj.get("edges", [])
    _expect(isinstance(edges, list), "'edges' must be a list", f"{pointer}/edges")
    return UndirectedGraph(d, frozenset(_parse_edge(e, d, f"{pointer}/edges/{i}") for i, e in enumerate(edges)))


def model_to_dict(sg: StratifiedGraph) -> dict:
    out = {"schema": SCHEMA, **graph_to_dict(sg.graph), "strata": []}
    for s in sg.strata:
        out["strata"].append({
            "edge": [s.edge[0] + 1, s.edge[1] + 1],
            "contexts": [{str(k + 1): v for k, v in c.items} for c in sorted(s.contexts)],
        })
    return out


_MODEL_FIELDS = {"schema", "nodes", "edges", "strata"}


def model_from_dict(obj: dict) -> StratifiedGraph:
    """Parse a model object.

    Structural problems raise :class:`SchemaError`.  Contexts that do not
    fix exactly the edge's common neighbours only trigger a warning here;
    :func:`sgm.model.validate` rejects them.
    """
    _expect(isinstance(obj, dict), "expected an object", "")
    for key in obj:
        _expect(key in _MODEL_FIELDS, f"unknown field {key!r}", f"/{key}")
    if "schema" in obj:
        _expect(obj["schema"] == SCHEMA, f"unsupported schema {obj['schema']!r}", "/schema")
    g = graph_from_dict(obj)
    strata_raw = obj.get("strata", [])
    _expect(isinstance(strata_raw, list), "'strata' must be a list", "/strata")
    strata = []
    for i, raw in enumerate(strata_raw):
        ptr = f"/strata/{i}"
        _expect(isinstance(raw, dict), "a stratum is an object", ptr)
        for key in raw:
            _expect(key in ("edge", "contexts"), f"unknown field {key!r}", f"{ptr}/{key}")
        edge = _parse_edge(raw.get("edge"), g.node_count, f"{ptr}/edge")
        contexts_raw = raw.get("contexts")
        _expect(isinstance(contexts_raw, list) and contexts_raw, "'contexts' must be a non-empty list",
                f"{ptr}/contexts")
        contexts = []
        for j, c in enumerate(contexts_raw):
            cptr = f"{ptr}/contexts/{j}"
            _expect(isinstance(c, dict), "a context is an object", cptr)
            items = {}
            for k, v in c.items():
                _expect(k.isdigit() and 1 <= int(k) <= g.node_count, f"bad node label {k!r}", f"{cptr}/{k}")
                _expect(v in (0, 1) and not isinstance(v, bool), "context values must be 0 or 1", f"{cptr}/{k}")
                items[int(k) - 1] = v
            ctx = Context(items)
            if g.has_edge(*edge) and ctx.nodes != common_neighbors(g, edge):
                warnings.warn(
                    f"{cptr}: context does not fix exactly the common neighbours of edge "
                    f"{[edge[0] + 1, edge[1] + 1]}",
                    ModelFileWarning,
                    stacklevel=2,
                )
            contexts.append(ctx)
        strata.append(Stratum(edge, frozenset(contexts)))
    return StratifiedGraph(g, tuple(strata))


def dumps_model(sg: StratifiedGraph) -> str:
    return json.dumps(model_to_dict(sg), sort_keys=True, indent=2) + "\n"


def save_model(sg: StratifiedGraph, path) -> None:
    Path(path).write_text(dumps_model(sg))


def load_model(path) -> StratifiedGraph:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return model_from_dict(obj)


# -- tables ----------------------------------------------------------------


def table_to_dict(t: JointTable) -> dict:
    return {"d": t.d, "bit_order": BIT_ORDER, "probs": t.probs.tolist()}


def save_table(t: JointTable, path) -> None:
    Path(path).write_text(json.dumps(table_to_dict(t), indent=2) + "\n")


def table_from_dict(obj: dict) -> JointTable:
    """Parse either ``{"d", "probs"}`` or ``{"d", "phi"}``.

    ``phi`` maps comma-separated 1-based subsets (``""`` for the empty set)
    to log-linear parameter values.
    """
    _expect(isinstance(obj, dict), "expected an object", "")
    for key in obj:
        _expect(key in ("d", "bit_order", "probs", "phi"), f"unknown field {key!r}", f"/{key}")
    d = obj.get("d")
    _expect(_is_int(d) and d >= 0, "'d' must be a non-negative integer", "/d")
    if "bit_order" in obj:
        _expect(obj["bit_order"] == BIT_ORDER, f"only bit_order {BIT_ORDER!r} is supported", "/bit_order")
    _expect(("probs" in obj) != ("phi" in obj), "give exactly one of 'probs' or 'phi'", "")
    if "probs" in obj:
        probs = obj["probs"]
        _expect(isinstance(probs, list) and len(probs) == 1 << d, f"'probs' needs {1 << d} entries", "/probs")
        try:
            table = JointTable(d, np.asarray(probs, dtype=float))
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc), "/probs") from None
        _expect(abs(table.total - 1.0) < 1e-9, "probabilities must sum to 1", "/probs")
        return table
    phi = np.zeros(1 << d)
    _expect(isinstance(obj["phi"], dict), "'phi' must be an object", "/phi")
    for key, value in obj["phi"].items():
        ptr = f"/phi/{key}"
        try:
            nodes = [int(v) - 1 for v in key.split(",") if v.strip()]
        except ValueError:
            raise SchemaError(f"bad subset {key!r}", ptr) from None
        _expect(all(0 <= v < d for v in nodes), f"subset {key!r} out of range", ptr)
        phi[mask_of(nodes)] = float(value)
    return phi_to_theta(LogLinearParams(d, phi))


def load_table(path) -> JointTable:
    return table_from_dict(json.loads(Path(path).read_text()))


def phi_to_dict(p: LogLinearParams) -> dict[str, float]:
    return {",".join(str(v + 1) for v in nodes_of(m)): float(x) for m, x in enumerate(p.phi)}


# -- DOT -------------------------------------------------------------------


def _dot_id(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def context_label(ctx: Context) -> str:
    """Shorthand ``(1, 0)``: values of the conditioning variables in label order."""
    return "(" + ", ".join(str(v) for v in ctx.values()) + ")"


def export_dot(sg: StratifiedGraph | UndirectedGraph, names: Iterable[str] | None = None) -> str:
    if isinstance(sg, UndirectedGraph):
        sg = StratifiedGraph(sg)
    g = sg.graph
    names = list(names) if names is not None else [str(i + 1) for i in g.nodes]
    labels = {s.edge: "\\n".join(context_label(c) for c in sorted(s.contexts)) for s in sg.strata}
    lines = ["graph sgm {"]
    for v in g.nodes:
        lines.append(f"  n{v + 1} [label={_dot_id(names[v])}];")
    for a, b in g.sorted_edges():
        attr = f' [label="{labels[(a, b)]}"]' if (a, b) in labels else ""
        lines.append(f"  n{a + 1} -- n{b + 1}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
