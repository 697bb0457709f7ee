"""Human-review bookkeeping: marks, labels, merges, and precision.

A session is an immutable value; every mutation returns a new session
with a refreshed updated_at. Marks stay in click order, which the
exported text file preserves byte for byte. Persistence is a single
JSON file written atomically (temp file + rename) so a crash can never
leave a half-written session behind.
"""

from __future__ import annotations

import json
import os
import tempfile
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np


class EvaluationError(ValueError):
    """Raised on inconsistent marks, labels, merges, or session files."""


def _now_iso(now: datetime | None) -> str:
    return (now or datetime.now(timezone.utc)).isoformat()


@dataclass(frozen=True)
class EvaluationSession:
    """One evaluator's review state over a fixed assignments file."""

    session_id: str
    assignments_ref: str
    marks: tuple[str, ...]
    labels: dict[int, str]
    merge_map: dict[int, int]
    created_at: str
    updated_at: str

    def __post_init__(self) -> None:
        if len(set(self.marks)) != len(self.marks):
            raise EvaluationError("duplicate image_id in marks")


def new_session(
    assignments_ref: str,
    session_id: str | None = None,
    *,
    now: datetime | None = None,
) -> EvaluationSession:
    stamp = _now_iso(now)
    return EvaluationSession(
        session_id=session_id or uuid.uuid4().hex,
        assignments_ref=assignments_ref,
        marks=(),
        labels={},
        merge_map={},
        created_at=stamp,
        updated_at=stamp,
    )


# ---- mark / label / merge mutations -----------------------------------


def add_mark(
    session: EvaluationSession,
    image_id: str,
    assignments: dict[str, int],
    *,
    now: datetime | None = None,
) -> EvaluationSession:
    """Append a miss-clustered mark. Marking an already-marked image is
    a no-op (the marks stay a set in click order)."""
    if image_id not in assignments:
        raise EvaluationError(f"unknown image_id {image_id!r}")
    if image_id in session.marks:
        return session
    return replace(session, marks=session.marks + (image_id,), updated_at=_now_iso(now))


def remove_mark(
    session: EvaluationSession,
    image_id: str,
    assignments: dict[str, int],
    *,
    now: datetime | None = None,
) -> EvaluationSession:
    """Remove a mark if present; removing an unmarked image is a no-op."""
    if image_id not in assignments:
        raise EvaluationError(f"unknown image_id {image_id!r}")
    if image_id not in session.marks:
        return session
    return replace(
        session,
        marks=tuple(m for m in session.marks if m != image_id),
        updated_at=_now_iso(now),
    )


def set_label(
    session: EvaluationSession,
    cluster_id: int,
    keyword: str,
    assignments: dict[str, int],
    *,
    now: datetime | None = None,
) -> EvaluationSession:
    """Attach a keyword to a cluster; relabeling overwrites."""
    observed = set(assignments.values())
    if cluster_id not in observed:
        raise EvaluationError(f"unknown cluster {cluster_id}")
    labels = dict(session.labels)
    labels[cluster_id] = keyword
    return replace(session, labels=labels, updated_at=_now_iso(now))


def normalize_merge_map(merge_map: dict[int, int]) -> dict[int, int]:
    """Remap target ids onto 0..G-1, preserving their relative order."""
    targets = sorted(set(merge_map.values()))
    rank = {t: i for i, t in enumerate(targets)}
    return {int(src): rank[dst] for src, dst in merge_map.items()}


def set_merge(
    session: EvaluationSession,
    merge_map: dict[int, int],
    assignments: dict[str, int],
    *,
    now: datetime | None = None,
) -> EvaluationSession:
    """Install a merge plan. The map must cover every observed cluster;
    targets are normalized to a contiguous 0..G-1 range. An empty map
    clears the plan."""
    if merge_map:
        observed = set(assignments.values())
        missing = sorted(observed - set(int(k) for k in merge_map))
        if missing:
            raise EvaluationError(
                f"merge_map does not cover cluster(s): {', '.join(map(str, missing))}"
            )
        merge_map = normalize_merge_map(merge_map)
    return replace(session, merge_map=dict(merge_map), updated_at=_now_iso(now))


# ---- merge application ------------------------------------------------


def apply_merge(assignments, merge_map: dict[int, int]) -> np.ndarray:
    """Map each cluster assignment through merge_map.

    The map must be total on the observed cluster ids; the first id it
    misses is named in the error.
    """
    assignments = np.asarray(assignments, dtype=np.int64)
    out = np.empty_like(assignments)
    for i, c in enumerate(assignments):
        c = int(c)
        if c not in merge_map:
            raise EvaluationError(f"cluster {c} missing from merge_map")
        out[i] = merge_map[c]
    return out


# ---- precision --------------------------------------------------------


@dataclass(frozen=True)
class ClusterPrecision:
    total: int
    missed: int
    precision: float


@dataclass(frozen=True)
class PrecisionReport:
    """Per-cluster counts plus the two summary views: macro averages
    clusters with equal weight, micro weights every image equally."""

    per_cluster: dict[int, ClusterPrecision]
    macro_precision: float
    micro_precision: float


def compute_precision(assignments: dict[str, int], marks) -> PrecisionReport:
    """Precision per cluster and overall, treating marks as the
    miss-clustered set.

    per-cluster: (total - missed) / total. macro: unweighted mean over
    clusters. micro: 1 - sum(missed) / sum(total), which equals
    (sum(total) - sum(missed)) / sum(total) and is exactly
    1 - |marks| / N here since marks never repeat.
    """
    marks = list(marks)
    for m in marks:
        if m not in assignments:
            raise EvaluationError(f"mark references unknown image_id {m!r}")
    if len(set(marks)) != len(marks):
        raise EvaluationError("duplicate image_id in marks")

    totals: dict[int, int] = {}
    missed: dict[int, int] = {}
    mark_set = set(marks)
    for image_id, cluster in assignments.items():
        cluster = int(cluster)
        totals[cluster] = totals.get(cluster, 0) + 1
        if image_id in mark_set:
            missed[cluster] = missed.get(cluster, 0) + 1

    per_cluster = {
        c: ClusterPrecision(
            total=totals[c],
            missed=missed.get(c, 0),
            precision=(totals[c] - missed.get(c, 0)) / totals[c],
        )
        for c in sorted(totals)
    }
    if per_cluster:
        macro = sum(cp.precision for cp in per_cluster.values()) / len(per_cluster)
        micro = 1.0 - sum(missed.values()) / sum(totals.values())
    else:
        macro = 1.0
        micro = 1.0
    return PrecisionReport(
        per_cluster=per_cluster, macro_precision=macro, micro_precision=micro
    )


def export_marks(session: EvaluationSession) -> str:
    """Marks as plain text, one id per line in click order, trailing
    newline; empty marks export as the empty string."""
    if not session.marks:
        return ""
    return "\n".join(session.marks) + "\n"


# ---- persistence ------------------------------------------------------


def session_to_json(session: EvaluationSession) -> str:
    payload = {
        "session_id": session.session_id,
        "assignments_ref": session.assignments_ref,
        "marks": list(session.marks),
        "labels": {str(k): v for k, v in sorted(session.labels.items())},
        "merge_map": {str(k): v for k, v in sorted(session.merge_map.items())},
        "created_at": session.created_at,
        "updated_at": session.updated_at,
    }
    return json.dumps(payload, indent=2) + "\n"


def save_session(session: EvaluationSession, path: str | Path) -> None:
    """Atomic write: serialize to a temp file in the same directory,
    fsync, then rename over the target."""
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(session_to_json(session))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def load_session(path: str | Path) -> EvaluationSession:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise EvaluationError(f"corrupt session file {path}: {exc}") from exc
    try:
        return EvaluationSession(
            session_id=str(payload["session_id"]),
            assignments_ref=str(payload["assignments_ref"]),
            marks=tuple(str(m) for m in payload["marks"]),
            labels={int(k): str(v) for k, v in payload["labels"].items()},
            merge_map={int(k): int(v) for k, v in payload["merge_map"].items()},
            created_at=str(payload["created_at"]),
            updated_at=str(payload["updated_at"]),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise EvaluationError(f"corrupt session file {path}: {exc}") from exc


# ---- assignments CSV --------------------------------------------------


def save_assignments(
    image_ids, clusters, path: str | Path
) -> None:
    """CSV `image_id,cluster`, one row per image in input order."""
    if len(image_ids) != len(clusters):
        raise EvaluationError(
            f"{len(image_ids)} image ids vs {len(clusters)} cluster assignments"
        )
    lines = ["image_id,cluster"]
    lines += [f"{i},{int(c)}" for i, c in zip(image_ids, clusters)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_assignments(path: str | Path) -> dict[str, int]:
    """Assignments CSV back into an ordered image_id -> cluster map."""
    path = Path(path)
    out: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "image_id,cluster":
            raise EvaluationError(
                f"{path}: expected header image_id,cluster, got {header!r}"
            )
        for row_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                image_id, cluster = line.rsplit(",", 1)
                cluster_idx = int(cluster)
            except ValueError as exc:
                raise EvaluationError(f"{path}: row {row_no}: {exc}") from None
            if image_id in out:
                raise EvaluationError(
                    f"{path}: row {row_no}: duplicate image_id {image_id!r}"
                )
            out[image_id] = cluster_idx
    if not out:
        raise EvaluationError(f"{path}: empty assignments file")
    return out
