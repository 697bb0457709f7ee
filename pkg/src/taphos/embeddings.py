"""Feature-matrix I/O.

On disk a matrix is one UTF-8 JSON header line followed by the raw
row-major little-endian float32 payload:

    {"n": 100, "dim": 2048, "dtype": "f32", "order": "row-major"}\n
    <n * dim * 4 bytes>

In memory everything is float64; precision is only dropped at the disk
boundary. ``load_embeddings`` also accepts a plain CSV of floats (one
row per line) so small fixtures can be written by hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

HEADER_DTYPE = "f32"
HEADER_ORDER = "row-major"


class EmbeddingsError(ValueError):
    """Raised on a malformed, truncated, or inconsistent matrix file."""


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-aligned feature matrix: row i of ``values`` belongs to ``image_ids[i]``."""

    image_ids: tuple[str, ...]
    values: np.ndarray  # (n, dim) float64

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise EmbeddingsError(f"expected a 2-d matrix, got shape {self.values.shape}")
        if len(self.image_ids) != self.values.shape[0]:
            raise EmbeddingsError(
                f"row count mismatch: {len(self.image_ids)} image ids vs "
                f"{self.values.shape[0]} matrix rows"
            )
        bad = np.argwhere(~np.isfinite(self.values))
        if bad.size:
            r, c = bad[0]
            raise EmbeddingsError(f"non-finite value at row {int(r)}, column {int(c)}")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def write_matrix_stream(fh, values: np.ndarray) -> None:
    """Write one header line + f32 payload to an open binary stream."""
    values = np.asarray(values, dtype=np.float64)
    header = {
        "n": values.shape[0],
        "dim": values.shape[1],
        "dtype": HEADER_DTYPE,
        "order": HEADER_ORDER,
    }
    fh.write(json.dumps(header).encode("utf-8"))
    fh.write(b"\n")
    fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def read_matrix_stream(fh, source: str = "<stream>") -> np.ndarray:
    """Read one header line + f32 payload from an open binary stream."""
    header_line = fh.readline()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise EmbeddingsError(f"{source}: bad header line: {exc}") from exc
    for key in ("n", "dim", "dtype", "order"):
        if key not in header:
            raise EmbeddingsError(f"{source}: header missing {key!r}")
    n, dim = int(header["n"]), int(header["dim"])
    if header["dtype"] != HEADER_DTYPE:
        raise EmbeddingsError(f"{source}: unsupported dtype {header['dtype']!r}")
    if header["order"] != HEADER_ORDER:
        raise EmbeddingsError(f"{source}: unsupported order {header['order']!r}")
    if n < 0 or dim <= 0:
        raise EmbeddingsError(f"{source}: bad shape n={n} dim={dim}")
    expected = n * dim * 4
    payload = fh.read(expected)
    if len(payload) != expected:
        raise EmbeddingsError(
            f"{source}: truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(n, dim).astype(np.float64)


def save_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the header line and float32 payload. Ids travel separately
    with the manifest; the file stores only shape and numbers."""
    path = Path(path)
    with path.open("wb") as fh:
        write_matrix_stream(fh, matrix.values)


def _load_binary(path: Path, image_ids: tuple[str, ...] | None) -> EmbeddingMatrix:
    with path.open("rb") as fh:
        values = read_matrix_stream(fh, source=str(path))
        trailing = fh.read(1)
    if trailing:
        raise EmbeddingsError(f"{path}: trailing bytes after payload")
    if image_ids is None:
        image_ids = tuple(f"row_{i}" for i in range(values.shape[0]))
    return EmbeddingMatrix(image_ids=image_ids, values=values)


def _load_csv(path: Path, image_ids: tuple[str, ...] | None) -> EmbeddingMatrix:
    try:
        values = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise EmbeddingsError(f"{path}: bad CSV matrix: {exc}") from exc
    if image_ids is None:
        image_ids = tuple(f"row_{i}" for i in range(values.shape[0]))
    return EmbeddingMatrix(image_ids=image_ids, values=values)


def load_embeddings(path: str | Path, image_ids: list[str] | tuple[str, ...] | None = None) -> EmbeddingMatrix:
    """Load a matrix from the binary format, or from CSV when the path
    ends in ``.csv``.

    When ``image_ids`` is given its length must match the stored row
    count; the mismatch error states both counts. Without ids, rows get
    placeholder names.
    """
    path = Path(path)
    ids = tuple(image_ids) if image_ids is not None else None
    if path.suffix.lower() == ".csv":
        matrix = _load_csv(path, None)
    else:
        matrix = _load_binary(path, None)
    if ids is not None:
        if len(ids) != matrix.n:
            raise EmbeddingsError(
                f"{path}: row count mismatch: {len(ids)} image ids vs {matrix.n} matrix rows"
            )
        matrix = EmbeddingMatrix(image_ids=ids, values=matrix.values)
    return matrix
