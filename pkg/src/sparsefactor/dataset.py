"""Assay/response containers, standardization, concatenation, CSV ingestion."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    BoundaryMismatch,
    ConstantColumn,
    EmptyInput,
    ParseError,
    RowMismatch,
)


@dataclass(frozen=True)
class AssayMatrix:
    """An n x p data block with its centering/scaling parameters.

    values is column-standardized when `standardized` is True; col_means and
    col_scales always refer back to the raw data so the transform is invertible.
    """

    values: np.ndarray
    col_means: np.ndarray
    col_scales: np.ndarray
    standardized: bool = True

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def destandardize(self):
        """Recover raw values from a standardized matrix."""
        return self.values * self.col_scales + self.col_means


@dataclass(frozen=True)
class Response:
    values: np.ndarray
    mean: float
    scale: float
    standardized: bool = True

    def destandardize(self):
        return self.values * self.scale + self.mean


@dataclass
class MultiAssaySet:
    """Ordered list of assays sharing rows; concatenation is built lazily."""

    assays: list
    _concatenated: AssayMatrix = field(default=None, repr=False)

    def __post_init__(self):
        if not self.assays:
            raise EmptyInput("need at least one assay")
        n = self.assays[0].values.shape[0]
        for a in self.assays[1:]:
            if a.values.shape[0] != n:
                raise RowMismatch(
                    f"assays have differing row counts: {a.values.shape[0]} vs {n}"
                )

    @property
    def K(self):
        return len(self.assays)

    @property
    def n(self):
        return self.assays[0].n

    @property
    def widths(self):
        return [a.p for a in self.assays]

    @property
    def concatenated(self):
        if self._concatenated is None:
            self._concatenated = concat(self)
        return self._concatenated


def standardize(raw):
    """Center each column to mean 0 and scale to sample variance 1 (n-1 divisor)."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] < 2 or raw.shape[1] < 1:
        raise EmptyInput(f"need an n>=2 by p>=1 matrix, got shape {raw.shape}")
    means = raw.mean(axis=0)
    scales = raw.std(axis=0, ddof=1)
    zero = np.flatnonzero(scales <= 0.0)
    if zero.size:
        raise ConstantColumn(int(zero[0]))
    values = (raw - means) / scales
    return AssayMatrix(values=values, col_means=means, col_scales=scales, standardized=True)


def standardize_response(raw):
    raw = np.asarray(raw, dtype=np.float64).ravel()
    if raw.size < 2:
        raise EmptyInput("response needs at least 2 observations")
    mean = float(raw.mean())
    scale = float(raw.std(ddof=1))
    if scale <= 0.0:
        raise ConstantColumn("response")
    return Response(values=(raw - mean) / scale, mean=mean, scale=scale, standardized=True)


def apply_standardization(raw, col_means, col_scales):
    """Standardize new data with previously stored (training) parameters."""
    raw = np.asarray(raw, dtype=np.float64)
    return (raw - col_means) / col_scales


def concat(mset):
    """Column-wise concatenation preserving assay order then within-assay order."""
    n = mset.assays[0].values.shape[0]
    for a in mset.assays:
        if a.values.shape[0] != n:
            raise RowMismatch("assays have differing row counts")
    return AssayMatrix(
        values=np.hstack([a.values for a in mset.assays]),
        col_means=np.concatenate([a.col_means for a in mset.assays]),
        col_scales=np.concatenate([a.col_scales for a in mset.assays]),
        standardized=all(a.standardized for a in mset.assays),
    )


def split_by_boundaries(matrix, widths):
    """Slice a concatenated matrix back into per-assay blocks."""
    if sum(widths) != matrix.shape[1]:
        raise BoundaryMismatch(
            f"boundaries sum to {sum(widths)} but matrix has {matrix.shape[1]} columns"
        )
    out = []
    start = 0
    for w in widths:
        out.append(matrix[:, start : start + w])
        start += w
    return out


def load_csv(path, has_header, response_column, assay_boundaries):
    """Read a numeric CSV into (MultiAssaySet, Response); no standardization applied.

    response_column is a header name (requires has_header) or a 0-based index.
    assay_boundaries is the list of feature-column counts per assay.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise EmptyInput(f"{path} is empty")
    header = None
    body_start = 0
    if has_header:
        header = [h.strip() for h in lines[0].split(",")]
        body_start = 1
    rows = []
    for i, line in enumerate(lines[body_start:]):
        cells = line.split(",")
        row = []
        for j, cell in enumerate(cells):
            try:
                row.append(float(cell))
            except ValueError:
                raise ParseError(i, j) from None
        rows.append(row)
    if not rows:
        raise EmptyInput(f"{path} has no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(-1, -1, "rows have inconsistent column counts")
    data = np.asarray(rows, dtype=np.float64)

    if isinstance(response_column, str):
        if header is None:
            raise ParseError(-1, -1, "named response column requires a header row")
        try:
            y_idx = header.index(response_column)
        except ValueError:
            raise ParseError(-1, -1, f"response column {response_column!r} not in header") from None
    else:
        y_idx = int(response_column)
        if not 0 <= y_idx < data.shape[1]:
            raise ParseError(-1, -1, f"response index {y_idx} out of range")

    y = data[:, y_idx]
    features = np.delete(data, y_idx, axis=1)
    if sum(assay_boundaries) != features.shape[1]:
        raise BoundaryMismatch(
            f"boundaries sum to {sum(assay_boundaries)} but file has "
            f"{features.shape[1]} feature columns"
        )
    assays = []
    for block in split_by_boundaries(features, list(assay_boundaries)):
        p = block.shape[1]
        assays.append(
            AssayMatrix(
                values=block,
                col_means=np.zeros(p),
                col_scales=np.ones(p),
                standardized=False,
            )
        )
    response = Response(values=y, mean=0.0, scale=1.0, standardized=False)
    return MultiAssaySet(assays=assays), response
