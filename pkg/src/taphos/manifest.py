"""Photo manifest loading and validation.

The manifest CSV is the backbone of the whole pipeline: its row order
defines the row order of every matrix downstream (embeddings, weather
block, reduced/augmented features, assignments).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

MANIFEST_HEADER = ["image_id", "file_path", "donor_id", "taken_at"]


class ManifestError(ValueError):
    """Raised when a manifest file is missing, malformed, or inconsistent."""


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp that must carry an explicit UTC offset.

    Python 3.10's ``fromisoformat`` rejects a trailing ``Z``, so that form
    is normalized to ``+00:00`` first.
    """
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise ManifestError(f"invalid timestamp {text!r}: {exc}") from exc
    if ts.tzinfo is None:
        raise ManifestError(f"timestamp {text!r} has no UTC offset")
    return ts


def _check_image_id(token: str) -> str:
    if not token:
        raise ManifestError("empty image_id")
    if any(c.isspace() for c in token) or "/" in token or "\\" in token:
        raise ManifestError(f"image_id {token!r} contains whitespace or a path separator")
    return token


@dataclass(frozen=True)
class ImageRecord:
    """One photo: identity, relative path, donor, and capture instant."""

    image_id: str
    file_path: str
    donor_id: str
    taken_at: datetime


@dataclass(frozen=True)
class Manifest:
    """Ordered, validated photo listing. Row i everywhere means record i here."""

    records: tuple[ImageRecord, ...]
    source_path: str

    def __post_init__(self) -> None:
        if not self.records:
            raise ManifestError("manifest has no records")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def image_ids(self) -> list[str]:
        return [r.image_id for r in self.records]

    @property
    def donor_ids(self) -> list[str]:
        return sorted({r.donor_id for r in self.records})


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a manifest CSV.

    Row numbers in error messages are file rows (header is row 1).

    Raises
    ------
    ManifestError
        On a duplicate image_id (citing both rows), a malformed timestamp
        (citing the row), an unexpected header, or an empty file.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"{path}: empty manifest") from None
        if header != MANIFEST_HEADER:
            raise ManifestError(
                f"{path}: expected header {','.join(MANIFEST_HEADER)}, got {','.join(header)}"
            )

        records: list[ImageRecord] = []
        seen: dict[str, int] = {}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(MANIFEST_HEADER):
                raise ManifestError(
                    f"{path}: row {row_no}: expected {len(MANIFEST_HEADER)} fields, got {len(row)}"
                )
            image_id, file_path, donor_id, taken_at_raw = row
            try:
                image_id = _check_image_id(image_id)
                taken_at = parse_timestamp(taken_at_raw)
            except ManifestError as exc:
                raise ManifestError(f"{path}: row {row_no}: {exc}") from None
            if image_id in seen:
                raise ManifestError(
                    f"{path}: duplicate image_id {image_id!r} on rows {seen[image_id]} and {row_no}"
                )
            seen[image_id] = row_no
            records.append(ImageRecord(image_id, file_path, donor_id, taken_at))

    if not records:
        raise ManifestError(f"{path}: empty manifest")
    return Manifest(records=tuple(records), source_path=str(path))


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest back out in the canonical CSV form."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for rec in manifest.records:
            writer.writerow([rec.image_id, rec.file_path, rec.donor_id, rec.taken_at.isoformat()])
