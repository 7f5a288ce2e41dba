"""MPS reading and conversion to standard form.

Handles fixed- and free-format MPS (section headers start in column
one, data lines are indented), and converts the parsed general-form
problem into ``min c'x, Ax = b, x >= 0`` while recording an exact map
back to the original variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .model import StandardLp


class MpsParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ModelError(ValueError):
    """Structurally valid file describing an inconsistent model."""


class UnsupportedFeatureError(ValueError):
    """Feature outside the supported MPS subset (e.g. RANGES, integers)."""


_SECTIONS = {"NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA",
             "OBJSENSE"}


@dataclass
class GeneralLp:
    """Parsed MPS content before standardization."""

    name: str = ""
    obj_name: str = ""
    row_names: list[str] = field(default_factory=list)
    row_types: list[str] = field(default_factory=list)
    col_names: list[str] = field(default_factory=list)
    entries_row: list[int] = field(default_factory=list)
    entries_col: list[int] = field(default_factory=list)
    entries_val: list[float] = field(default_factory=list)
    obj: dict[int, float] = field(default_factory=dict)
    rhs: dict[int, float] = field(default_factory=dict)
    lower: dict[int, float] = field(default_factory=dict)
    upper: dict[int, float] = field(default_factory=dict)
    obj_offset: float = 0.0

    @property
    def m(self) -> int:
        return len(self.row_names)

    @property
    def n(self) -> int:
        return len(self.col_names)

    def bounds(self, j: int) -> tuple[float, float]:
        return self.lower.get(j, 0.0), self.upper.get(j, np.inf)


def _num(token: str, lineno: int) -> float:
    try:
        return float(token.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise MpsParseError(lineno, f"malformed numeric field {token!r}") from None


def parse_mps(text) -> GeneralLp:
    """Parse MPS text (str or bytes) into a :class:`GeneralLp`.

    Duplicate (row, column) coefficients are summed.  A RHS entry on the
    objective row is taken as the negated objective constant.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    g = GeneralLp()
    row_index: dict[str, int] = {}
    col_index: dict[str, int] = {}
    section = None
    bounded_lower: set[int] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if raw[0] not in (" ", "\t"):
            fields = raw.split()
            head = fields[0].upper()
            if head == "NAME":
                g.name = fields[1] if len(fields) > 1 else ""
                section = "NAME"
                continue
            if head == "ENDATA":
                section = "ENDATA"
                break
            if head == "RANGES":
                raise UnsupportedFeatureError("RANGES sections are not supported")
            if head not in _SECTIONS:
                raise MpsParseError(lineno, f"unknown section {head!r}")
            section = head
            continue

        fields = raw.split()
        if section == "ROWS":
            if len(fields) < 2:
                raise MpsParseError(lineno, "ROWS line needs a type and a name")
            rtype, rname = fields[0].upper(), fields[1]
            if rtype == "N":
                if g.obj_name:
                    raise MpsParseError(lineno, "multiple objective (N) rows")
                g.obj_name = rname
            elif rtype in ("L", "G", "E"):
                if rname in row_index:
                    raise MpsParseError(lineno, f"duplicate row name {rname!r}")
                row_index[rname] = len(g.row_names)
                g.row_names.append(rname)
                g.row_types.append(rtype)
            else:
                raise MpsParseError(lineno, f"unknown row type {rtype!r}")
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1].startswith("'MARKER'"):
                raise UnsupportedFeatureError("integer markers are not supported")
            cname = fields[0]
            if cname not in col_index:
                col_index[cname] = len(g.col_names)
                g.col_names.append(cname)
            j = col_index[cname]
            pairs = fields[1:]
            if len(pairs) % 2 != 0:
                raise MpsParseError(lineno, "COLUMNS line has unpaired fields")
            for rname, val in zip(pairs[::2], pairs[1::2]):
                v = _num(val, lineno)
                if rname == g.obj_name:
                    g.obj[j] = g.obj.get(j, 0.0) + v
                elif rname in row_index:
                    g.entries_row.append(row_index[rname])
                    g.entries_col.append(j)
                    g.entries_val.append(v)
                else:
                    raise MpsParseError(lineno, f"undeclared row {rname!r}")
        elif section == "RHS":
            pairs = fields[1:] if len(fields) % 2 == 1 else fields
            for rname, val in zip(pairs[::2], pairs[1::2]):
                v = _num(val, lineno)
                if rname == g.obj_name:
                    g.obj_offset += -v
                elif rname in row_index:
                    i = row_index[rname]
                    g.rhs[i] = g.rhs.get(i, 0.0) + v
                else:
                    raise MpsParseError(lineno, f"undeclared row {rname!r}")
        elif section == "BOUNDS":
            if len(fields) < 3:
                raise MpsParseError(lineno, "BOUNDS line too short")
            btype = fields[0].upper()
            cname = fields[2]
            if cname not in col_index:
                raise MpsParseError(lineno, f"undeclared column {cname!r}")
            j = col_index[cname]
            if btype in ("LO", "UP", "FX"):
                if len(fields) < 4:
                    raise MpsParseError(lineno, f"{btype} bound needs a value")
                v = _num(fields[3], lineno)
                if btype == "LO":
                    g.lower[j] = v
                    bounded_lower.add(j)
                elif btype == "FX":
                    g.lower[j] = v
                    g.upper[j] = v
                    bounded_lower.add(j)
                else:
                    g.upper[j] = v
                    # classic convention: a negative upper bound with no
                    # explicit lower bound frees the lower side
                    if v < 0 and j not in bounded_lower:
                        g.lower[j] = -np.inf
            elif btype == "FR":
                g.lower[j] = -np.inf
                g.upper[j] = np.inf
            elif btype == "MI":
                g.lower[j] = -np.inf
            elif btype == "PL":
                g.upper[j] = np.inf
            else:
                raise UnsupportedFeatureError(
                    f"bound type {btype!r} is not supported")
        elif section == "OBJSENSE":
            sense = fields[0].upper()
            if sense in ("MAX", "MAXIMIZE"):
                raise UnsupportedFeatureError(
                    "maximization objectives are not supported")
            if sense not in ("MIN", "MINIMIZE"):
                raise MpsParseError(lineno, f"unknown objective sense {sense!r}")
        elif section in ("NAME", None):
            raise MpsParseError(lineno, "data before any section header")
        elif section == "ENDATA":
            break
        else:
            raise MpsParseError(lineno, f"data in unsupported section {section!r}")

    if not g.obj_name:
        raise ModelError("no objective (N) row declared")
    return g


def load_mps(path) -> GeneralLp:
    with open(path, "rb") as fh:
        return parse_mps(fh.read())


@dataclass(frozen=True)
class VarMap:
    kind: str  # "shifted" | "split" | "fixed"
    col: int = -1
    col_neg: int = -1
    shift: float = 0.0
    sign: float = 1.0
    value: float = 0.0


@dataclass(frozen=True)
class StandardizeMap:
    """Affine recovery of original variables from the standard-form ones."""

    var_maps: tuple[VarMap, ...]
    n_std: int
    slack_cols: tuple[int, ...]
    obj_offset: float


def to_standard_form(g: GeneralLp) -> tuple[StandardLp, StandardizeMap]:
    """Convert a general-form LP to ``min c'x, Ax=b, x>=0``.

    Inequality rows gain slack columns, finitely bounded variables are
    shifted (or mirrored when only bounded above), free variables are
    split into differences of nonnegatives, and fixed variables are
    substituted out.  Variables with both bounds finite get an explicit
    ``x + slack = u - l`` row.
    """
    m0, n0 = g.m, g.n
    cols = [[] for _ in range(n0)]  # (row, val) per original variable
    for i, j, v in zip(g.entries_row, g.entries_col, g.entries_val):
        cols[j].append((i, v))

    b = np.zeros(m0)
    for i, v in g.rhs.items():
        b[i] = v
    obj_offset = g.obj_offset

    var_maps: list[VarMap] = []
    new_cols: list[list[tuple[int, float]]] = []
    c_new: list[float] = []
    col_names: list[str] = []
    upper_rows: list[tuple[int, float]] = []  # (std col, rhs of bound row)

    for j in range(n0):
        lo, up = g.bounds(j)
        cj = g.obj.get(j, 0.0)
        cname = g.col_names[j]
        if lo > up:
            raise ModelError(f"variable {cname!r} has empty bound range"
                             f" [{lo}, {up}]")
        if np.isfinite(lo) and lo == up:
            for i, v in cols[j]:
                b[i] -= v * lo
            obj_offset += cj * lo
            var_maps.append(VarMap(kind="fixed", value=lo))
            continue
        if np.isfinite(lo):
            col = len(new_cols)
            if lo != 0.0:
                for i, v in cols[j]:
                    b[i] -= v * lo
                obj_offset += cj * lo
            new_cols.append(list(cols[j]))
            c_new.append(cj)
            col_names.append(cname)
            var_maps.append(VarMap(kind="shifted", col=col, shift=lo, sign=1.0))
            if np.isfinite(up):
                upper_rows.append((col, up - lo))
            continue
        if np.isfinite(up):
            # only bounded above: mirror so the new variable is >= 0
            col = len(new_cols)
            for i, v in cols[j]:
                b[i] -= v * up
            obj_offset += cj * up
            new_cols.append([(i, -v) for i, v in cols[j]])
            c_new.append(-cj)
            col_names.append(cname + "#mirror")
            var_maps.append(VarMap(kind="shifted", col=col, shift=up, sign=-1.0))
            continue
        # free: difference of two nonnegative parts
        col_p = len(new_cols)
        new_cols.append(list(cols[j]))
        c_new.append(cj)
        col_names.append(cname + "#pos")
        col_n = len(new_cols)
        new_cols.append([(i, -v) for i, v in cols[j]])
        c_new.append(-cj)
        col_names.append(cname + "#neg")
        var_maps.append(VarMap(kind="split", col=col_p, col_neg=col_n))

    m_total = m0 + len(upper_rows)
    rows_out = []
    cols_out = []
    vals_out = []
    for col, entries in enumerate(new_cols):
        for i, v in entries:
            rows_out.append(i)
            cols_out.append(col)
            vals_out.append(v)

    b_total = np.concatenate([b, [rhs for _, rhs in upper_rows]])
    row_names = list(g.row_names)
    slack_cols: list[int] = []

    for i, rtype in enumerate(g.row_types):
        if rtype == "E":
            continue
        col = len(new_cols) + len(slack_cols)
        rows_out.append(i)
        cols_out.append(col)
        vals_out.append(1.0 if rtype == "L" else -1.0)
        c_new.append(0.0)
        col_names.append(f"#slack[{g.row_names[i]}]")
        slack_cols.append(col)
    for k, (col, _) in enumerate(upper_rows):
        i = m0 + k
        row_names.append(f"#bound[{col_names[col]}]")
        rows_out.append(i)
        cols_out.append(col)
        vals_out.append(1.0)
        scol = len(new_cols) + len(slack_cols)
        rows_out.append(i)
        cols_out.append(scol)
        vals_out.append(1.0)
        c_new.append(0.0)
        col_names.append(f"#slack[{row_names[i]}]")
        slack_cols.append(scol)

    n_total = len(c_new)
    if n_total == 0 or m_total == 0:
        raise ModelError("standardized problem has no variables or no rows")
    A = sp.csr_array(sp.coo_array(
        (vals_out, (rows_out, cols_out)), shape=(m_total, n_total)))
    A.sum_duplicates()
    lp = StandardLp(A=A, b=b_total, c=np.asarray(c_new),
                    row_names=tuple(row_names), col_names=tuple(col_names),
                    name=g.name)
    smap = StandardizeMap(var_maps=tuple(var_maps), n_std=n_total,
                          slack_cols=tuple(slack_cols), obj_offset=obj_offset)
    return lp, smap


def recover_solution(smap: StandardizeMap, x_std) -> np.ndarray:
    """Map a standard-form point back to the original variables."""
    x_std = np.asarray(x_std, dtype=float).reshape(-1)
    if x_std.shape != (smap.n_std,):
        raise ValueError(f"expected length {smap.n_std}, got {x_std.shape}")
    out = np.empty(len(smap.var_maps))
    for k, vm in enumerate(smap.var_maps):
        if vm.kind == "fixed":
            out[k] = vm.value
        elif vm.kind == "shifted":
            out[k] = vm.sign * x_std[vm.col] + vm.shift
        else:
            out[k] = x_std[vm.col] - x_std[vm.col_neg]
    return out
