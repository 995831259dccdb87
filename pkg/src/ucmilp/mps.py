"""Reader/writer for a fixed-field MPS subset.

Supported sections, in order: NAME, ROWS (N/L/G/E), COLUMNS (with
INTORG/INTEND integrality markers), RHS, BOUNDS (LO/UP/BV/FR), ENDATA.
Anything else is rejected.  Names are case-sensitive, lines are 8-bit text
capped at 255 characters.  Marker-scoped integer columns must be binary
(bounds within [0, 1]); general integers are out of scope.

The file format always encodes a minimization: ``write_mps`` negates the
objective of a maximize-sense model, so reading it back yields the
equivalent minimize model (same optimal points, negated optimal value).
An RHS entry against the objective row stores the negated constant term,
following the usual MPS convention.
"""

from __future__ import annotations

import io

import numpy as np

from .model import GeneralLp, Row

MAX_LINE = 255


class MpsParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def write_mps(p: GeneralLp, name: str = "UCMILP") -> str:
    """Serialize a GeneralLp to MPS text (minimize encoding)."""
    sign = 1.0 if p.sense == "min" else -1.0
    n = p.num_vars
    var_names = [f"X{j:07d}" for j in range(n)]
    row_names = [f"R{i:07d}" for i in range(len(p.rows))]
    rel_code = {"<=": "L", ">=": "G", "=": "E"}

    out = io.StringIO()
    out.write(f"NAME          {name}\n")
    out.write("ROWS\n")
    out.write(" N  OBJ\n")
    for i, row in enumerate(p.rows):
        out.write(f" {rel_code[row.relation]}  {row_names[i]}\n")

    # Column-major entries: objective first, then each row's coefficient.
    per_col: list[list[tuple[str, float]]] = [[] for _ in range(n)]
    for j in range(n):
        cost = sign * float(p.costs[j])
        if cost != 0.0:
            per_col[j].append(("OBJ", cost))
    for i, row in enumerate(p.rows):
        for j, v in zip(row.cols, row.vals):
            if v != 0.0:
                per_col[int(j)].append((row_names[i], float(v)))

    out.write("COLUMNS\n")
    in_int = False
    marker = 0
    for j in range(n):
        binary = bool(p.is_binary[j])
        if binary and not in_int:
            out.write(f"    M{marker:06d}   'MARKER'                 'INTORG'\n")
            marker += 1
            in_int = True
        elif not binary and in_int:
            out.write(f"    M{marker:06d}   'MARKER'                 'INTEND'\n")
            marker += 1
            in_int = False
        entries = per_col[j] or [("OBJ", 0.0)]
        for rname, val in entries:
            out.write(f"    {var_names[j]:<10}{rname:<10}{val:.17g}\n")
    if in_int:
        out.write(f"    M{marker:06d}   'MARKER'                 'INTEND'\n")

    out.write("RHS\n")
    for i, row in enumerate(p.rows):
        if row.rhs != 0.0:
            out.write(f"    RHS       {row_names[i]:<10}{float(row.rhs):.17g}\n")
    constant = sign * float(p.constant)
    if constant != 0.0:
        out.write(f"    RHS       {'OBJ':<10}{-constant:.17g}\n")

    out.write("BOUNDS\n")
    for j in range(n):
        lo, hi = float(p.lower[j]), float(p.upper[j])
        if p.is_binary[j]:
            if lo == 0.0 and hi == 1.0:
                out.write(f" BV BND       {var_names[j]}\n")
            else:
                out.write(f" LO BND       {var_names[j]:<10}{lo:.17g}\n")
                out.write(f" UP BND       {var_names[j]:<10}{hi:.17g}\n")
            continue
        if not np.isfinite(lo) and not np.isfinite(hi):
            out.write(f" FR BND       {var_names[j]}\n")
            continue
        if lo != 0.0 and np.isfinite(lo):
            out.write(f" LO BND       {var_names[j]:<10}{lo:.17g}\n")
        elif not np.isfinite(lo):
            out.write(f" FR BND       {var_names[j]}\n")
            if np.isfinite(hi):
                out.write(f" UP BND       {var_names[j]:<10}{hi:.17g}\n")
            continue
        if np.isfinite(hi):
            out.write(f" UP BND       {var_names[j]:<10}{hi:.17g}\n")
    out.write("ENDATA\n")
    return out.getvalue()


SECTION_ORDER = ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]


def read_mps(text: str) -> GeneralLp:
    """Parse the MPS subset back into a (minimize-sense) GeneralLp."""
    obj_name: str | None = None
    row_rel: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_index: dict[str, int] = {}
    col_binary: list[bool] = []
    entries: dict[tuple[int, str], float] = {}
    costs: dict[int, float] = {}
    rhs: dict[str, float] = {}
    constant = 0.0
    bounds_lo: dict[int, float] = {}
    bounds_hi: dict[int, float] = {}
    explicit_free: set[int] = set()

    section = None
    seen_sections: list[str] = []
    in_int = False
    ended = False

    def fail(line_no, msg):
        raise MpsParseError(line_no, msg)

    def enter_section(line_no, name):
        nonlocal section
        if name not in SECTION_ORDER:
            fail(line_no, f"unknown section {name!r}")
        if seen_sections and SECTION_ORDER.index(name) <= SECTION_ORDER.index(seen_sections[-1]):
            fail(line_no, f"section {name} out of order")
        seen_sections.append(name)
        section = name

    def get_col(line_no, name):
        if name not in col_index:
            fail(line_no, f"unknown column name {name!r}")
        return col_index[name]

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if len(raw) > MAX_LINE:
            fail(line_no, f"line exceeds {MAX_LINE} characters")
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if ended:
            fail(line_no, "content after ENDATA")

        if not raw[0].isspace():
            fields = raw.split()
            enter_section(line_no, fields[0])
            if section == "ENDATA":
                ended = True
            continue

        fields = raw.split()
        if section is None:
            fail(line_no, "data before any section header")
        elif section == "NAME":
            fail(line_no, "unexpected indented line in NAME section")
        elif section == "ROWS":
            if len(fields) != 2:
                fail(line_no, "ROWS line needs a type and a name")
            rtype, rname = fields
            if rname in row_rel or rname == obj_name:
                fail(line_no, f"duplicate row name {rname!r}")
            if rtype == "N":
                if obj_name is None:
                    obj_name = rname
                else:
                    fail(line_no, "multiple N rows are not supported")
            elif rtype in ("L", "G", "E"):
                row_rel[rname] = {"L": "<=", "G": ">=", "E": "="}[rtype]
                row_order.append(rname)
            else:
                fail(line_no, f"unknown row type {rtype!r}")
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1] == "'MARKER'":
                if fields[2] == "'INTORG'":
                    in_int = True
                elif fields[2] == "'INTEND'":
                    in_int = False
                else:
                    fail(line_no, f"unknown marker {fields[2]!r}")
                continue
            if len(fields) not in (3, 5):
                fail(line_no, "COLUMNS line needs name/row/value pairs")
            cname = fields[0]
            if cname not in col_index:
                col_index[cname] = len(col_order)
                col_order.append(cname)
                col_binary.append(in_int)
            j = col_index[cname]
            for k in range(1, len(fields), 2):
                rname, sval = fields[k], fields[k + 1]
                try:
                    val = float(sval)
                except ValueError:
                    fail(line_no, f"bad numeric value {sval!r}")
                if rname == obj_name:
                    costs[j] = costs.get(j, 0.0) + val
                elif rname in row_rel:
                    entries[(j, rname)] = entries.get((j, rname), 0.0) + val
                else:
                    fail(line_no, f"unknown row name {rname!r}")
        elif section == "RHS":
            if len(fields) not in (3, 5):
                fail(line_no, "RHS line needs set/row/value pairs")
            for k in range(1, len(fields), 2):
                rname, sval = fields[k], fields[k + 1]
                try:
                    val = float(sval)
                except ValueError:
                    fail(line_no, f"bad numeric value {sval!r}")
                if rname == obj_name:
                    constant = -val
                elif rname in row_rel:
                    rhs[rname] = val
                else:
                    fail(line_no, f"unknown row name {rname!r}")
        elif section == "BOUNDS":
            if len(fields) < 3:
                fail(line_no, "BOUNDS line needs a type, set name and column")
            btype, cname = fields[0], fields[2]
            j = get_col(line_no, cname)
            if btype in ("LO", "UP"):
                if len(fields) != 4:
                    fail(line_no, f"{btype} bound needs a value")
                try:
                    val = float(fields[3])
                except ValueError:
                    fail(line_no, f"bad numeric value {fields[3]!r}")
                if btype == "LO":
                    bounds_lo[j] = val
                else:
                    bounds_hi[j] = val
            elif btype == "BV":
                col_binary[j] = True
                bounds_lo[j] = 0.0
                bounds_hi[j] = 1.0
            elif btype == "FR":
                explicit_free.add(j)
            else:
                fail(line_no, f"unknown bound type {btype!r}")

    last = len(text.splitlines())
    if not ended:
        fail(last, "missing ENDATA")
    if obj_name is None:
        fail(last, "missing N (objective) row")

    n = len(col_order)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    binary = np.array(col_binary, dtype=bool)
    for j in explicit_free:
        lower[j] = -np.inf
    for j, v in bounds_lo.items():
        lower[j] = v
    for j, v in bounds_hi.items():
        upper[j] = v
    # Marker-scoped integers default to binary bounds; wider boxes would be
    # general integers, which this subset rejects.
    for j in range(n):
        if binary[j]:
            if j not in bounds_lo:
                lower[j] = 0.0
            if j not in bounds_hi:
                upper[j] = 1.0
            if lower[j] < 0.0 or upper[j] > 1.0:
                raise MpsParseError(
                    last, f"integer column {col_order[j]!r} has non-binary bounds"
                )

    cost_vec = np.zeros(n)
    for j, v in costs.items():
        cost_vec[j] = v

    rows = []
    for rname in row_order:
        cols = [j for j in range(n) if (j, rname) in entries]
        vals = [entries[(j, rname)] for j in cols]
        rows.append(Row(
            np.array(cols, dtype=np.int64), np.array(vals, dtype=np.float64),
            row_rel[rname], rhs.get(rname, 0.0),
        ))

    return GeneralLp("min", cost_vec, constant, rows, lower, upper, binary)
