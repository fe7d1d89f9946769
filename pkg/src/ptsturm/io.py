"""Plain-text readers and writers for matrices, spectra and tables.

Matrices use a Matrix-Market-style coordinate format:

    %%MatrixMarket matrix coordinate complex general
    % optional comment lines
    <rows> <cols> <entries>
    <row> <col> <re> <im>        (1-based indices, one entry per line)

Floats are written with 17 significant digits so that a write/read round
trip is exact.
"""

import csv
import io

import numpy as np

__all__ = [
    "write_matrix",
    "read_matrix",
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_sweep_csv",
    "read_sweep_csv",
    "write_oracle_csv",
    "read_oracle_csv",
    "save_vectors",
    "load_vectors",
]

MM_HEADER = "%%MatrixMarket matrix coordinate complex general"


def _fmt(x):
    return repr(float(x))


def write_matrix(path_or_file, matrix, comment=None, dense=False):
    """Write nonzero entries (all entries when ``dense``)."""
    m = np.asarray(matrix, dtype=complex)
    if dense:
        rows, cols = np.indices(m.shape)
        rows, cols = rows.ravel(), cols.ravel()
    else:
        rows, cols = np.nonzero(m)
    lines = [MM_HEADER]
    if comment:
        lines.extend(f"% {c}" for c in str(comment).splitlines())
    lines.append(f"{m.shape[0]} {m.shape[1]} {len(rows)}")
    for i, j in zip(rows, cols):
        z = m[i, j]
        lines.append(f"{i + 1} {j + 1} {_fmt(z.real)} {_fmt(z.imag)}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def read_matrix(path_or_file):
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("%")]
    if not lines:
        raise ValueError("empty matrix file")
    nrows, ncols, nnz = (int(t) for t in lines[0].split())
    if len(lines) - 1 != nnz:
        raise ValueError(f"header announces {nnz} entries, found {len(lines) - 1}")
    m = np.zeros((nrows, ncols), dtype=complex)
    for ln in lines[1:]:
        i, j, re, im = ln.split()
        m[int(i) - 1, int(j) - 1] = complex(float(re), float(im))
    return m


def _open_text(path_or_file, mode):
    if hasattr(path_or_file, "write") or hasattr(path_or_file, "read"):
        return path_or_file, False
    return open(path_or_file, mode, newline=""), True


SPECTRUM_FIELDS = ["index", "re", "im", "residual", "degenerate"]


def write_spectrum_csv(path_or_file, spectrum):
    fh, close = _open_text(path_or_file, "w")
    try:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(SPECTRUM_FIELDS)
        for k, lam in enumerate(spectrum.eigencharges):
            writer.writerow(
                [k, _fmt(lam.real), _fmt(lam.imag), _fmt(spectrum.residuals[k]), int(bool(spectrum.degenerate_flags[k]))]
            )
    finally:
        if close:
            fh.close()


def read_spectrum_csv(path_or_file):
    """Return a dict of arrays keyed by the CSV columns plus ``eigencharges``."""
    fh, close = _open_text(path_or_file, "r")
    try:
        rows = list(csv.DictReader(fh))
    finally:
        if close:
            fh.close()
    out = {
        "index": np.array([int(r["index"]) for r in rows]),
        "re": np.array([float(r["re"]) for r in rows]),
        "im": np.array([float(r["im"]) for r in rows]),
        "residual": np.array([float(r["residual"]) for r in rows]),
        "degenerate": np.array([bool(int(r["degenerate"])) for r in rows]),
    }
    out["eigencharges"] = out["re"] + 1j * out["im"]
    return out


SWEEP_FIELDS = ["parameter", "value", "branch", "re", "im", "collision"]


def write_sweep_csv(path_or_file, parameter, values, branches, collisions):
    """``branches`` is (steps, n) complex, columns already continued across steps."""
    fh, close = _open_text(path_or_file, "w")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_FIELDS)
        for s, value in enumerate(values):
            for b, lam in enumerate(branches[s]):
                writer.writerow([parameter, _fmt(value), b, _fmt(lam.real), _fmt(lam.imag), int(bool(collisions[s][b]))])
    finally:
        if close:
            fh.close()


def read_sweep_csv(path_or_file):
    fh, close = _open_text(path_or_file, "r")
    try:
        rows = list(csv.DictReader(fh))
    finally:
        if close:
            fh.close()
    if not rows:
        return {"parameter": None, "values": np.array([]), "branches": np.zeros((0, 0), complex)}
    values = list(dict.fromkeys(float(r["value"]) for r in rows))
    nb = max(int(r["branch"]) for r in rows) + 1
    branches = np.zeros((len(values), nb), dtype=complex)
    collisions = np.zeros((len(values), nb), dtype=bool)
    pos = {v: i for i, v in enumerate(values)}
    for r in rows:
        s, b = pos[float(r["value"])], int(r["branch"])
        branches[s, b] = complex(float(r["re"]), float(r["im"]))
        collisions[s, b] = bool(int(r["collision"]))
    return {"parameter": rows[0]["parameter"], "values": np.array(values), "branches": branches, "collisions": collisions}


ORACLE_FIELDS = ["n_interior", "h", "index", "numerical_re", "numerical_im", "reference_re", "reference_im", "rel_error", "order"]


def write_oracle_csv(path_or_file, table):
    fh, close = _open_text(path_or_file, "w")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ORACLE_FIELDS)
        for row in table.rows:
            for k, (got, err, order) in enumerate(zip(row.charges, row.errors, row.orders)):
                ref = table.reference[k]
                writer.writerow(
                    [row.n_interior, _fmt(row.h), k, _fmt(got.real), _fmt(got.imag), _fmt(ref.real), _fmt(ref.imag), _fmt(err), _fmt(order)]
                )
    finally:
        if close:
            fh.close()


def read_oracle_csv(path_or_file):
    fh, close = _open_text(path_or_file, "r")
    try:
        rows = list(csv.DictReader(fh))
    finally:
        if close:
            fh.close()
    return [
        {
            "n_interior": int(r["n_interior"]),
            "h": float(r["h"]),
            "index": int(r["index"]),
            "numerical": complex(float(r["numerical_re"]), float(r["numerical_im"])),
            "reference": complex(float(r["reference_re"]), float(r["reference_im"])),
            "rel_error": float(r["rel_error"]),
            "order": float(r["order"]),
        }
        for r in rows
    ]


def save_vectors(path, spectrum):
    """Full eigencharges and vectors as a compressed .npz archive."""
    np.savez_compressed(
        path,
        eigencharges=spectrum.eigencharges,
        right_vectors=spectrum.right_vectors,
        left_vectors=spectrum.left_vectors,
    )


def load_vectors(path):
    with np.load(path) as data:
        return {k: data[k] for k in data.files}


def matrix_to_string(matrix, **kwargs):
    buf = io.StringIO()
    write_matrix(buf, matrix, **kwargs)
    return buf.getvalue()
