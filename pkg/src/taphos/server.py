"""HTTP review service.

One server instance owns one session file. Reads are lock-free; every
mutation takes the writer lock, persists the new session atomically,
and only then updates in-memory state and responds, so a crash at any
point leaves either the old or the new state on disk, never a mix.

Static UI assets (when a built frontend directory is supplied) are
served at `/`; everything programmatic lives under `/api/*`.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, PlainTextResponse, Response
from pydantic import BaseModel

from .evaluation import (
    EvaluationError,
    EvaluationSession,
    add_mark,
    apply_merge,
    compute_precision,
    load_assignments,
    load_session,
    new_session,
    remove_mark,
    save_session,
    set_label,
    set_merge,
)
from .manifest import Manifest, load_manifest

DEFAULT_PAGE_LIMIT = 60

CONTENT_TYPES = {
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".png": "image/png",
    ".gif": "image/gif",
    ".webp": "image/webp",
    ".bmp": "image/bmp",
    ".tif": "image/tiff",
    ".tiff": "image/tiff",
}


class MarkBody(BaseModel):
    image_id: str


class LabelBody(BaseModel):
    cluster_id: int
    keyword: str


class MergeBody(BaseModel):
    merge_map: dict[str, int]


class ReviewState:
    """Everything the endpoints share: fixed inputs, the mutable
    session, and the single-writer lock."""

    def __init__(
        self,
        manifest: Manifest,
        assignments: dict[str, int],
        session: EvaluationSession,
        session_path: Path,
        image_root: Path | None,
        scatter_path: Path | None,
    ):
        self.manifest = manifest
        self.records = {r.image_id: r for r in manifest.records}
        self.assignments = assignments
        self.session = session
        self.session_path = session_path
        self.image_root = image_root
        self.scatter_path = scatter_path
        self.lock = threading.Lock()
        self.cluster_ids = sorted(set(assignments.values()))
        self.cluster_members: dict[int, list[str]] = {c: [] for c in self.cluster_ids}
        for image_id, c in assignments.items():
            self.cluster_members[c].append(image_id)

    def commit(self, session: EvaluationSession) -> None:
        """Persist first, then expose. Callers hold the lock."""
        save_session(session, self.session_path)
        self.session = session

    def current_groups(self) -> dict[str, int]:
        """Assignments mapped through the merge plan when one is set."""
        if not self.session.merge_map:
            return self.assignments
        merged = apply_merge(list(self.assignments.values()), self.session.merge_map)
        return {i: int(g) for i, g in zip(self.assignments, merged)}


def _load_or_create_session(session_path: Path, assignments_ref: str) -> EvaluationSession:
    if session_path.exists():
        return load_session(session_path)
    session = new_session(str(assignments_ref))
    session_path.parent.mkdir(parents=True, exist_ok=True)
    save_session(session, session_path)
    return session


def build_app(
    manifest_path,
    assignments_path,
    session_path,
    scatter_path=None,
    image_root=None,
    static_dir=None,
) -> FastAPI:
    """Wire the service. A corrupt or inconsistent session file refuses
    startup, naming the file, rather than serving doubtful state."""
    manifest = load_manifest(manifest_path)
    assignments = load_assignments(assignments_path)
    unknown = [i for i in assignments if i not in set(manifest.image_ids)]
    if unknown:
        raise EvaluationError(
            f"assignments reference image ids missing from the manifest: "
            f"{', '.join(unknown[:5])}"
        )
    session_path = Path(session_path)
    session = _load_or_create_session(session_path, str(assignments_path))
    bad_marks = [m for m in session.marks if m not in assignments]
    if bad_marks:
        raise EvaluationError(
            f"corrupt session file {session_path}: marks reference unknown "
            f"image ids: {', '.join(bad_marks[:5])}"
        )
    if session.merge_map:
        uncovered = sorted(set(assignments.values()) - set(session.merge_map))
        if uncovered:
            raise EvaluationError(
                f"corrupt session file {session_path}: merge_map misses "
                f"cluster(s) {', '.join(map(str, uncovered))}"
            )

    state = ReviewState(
        manifest=manifest,
        assignments=assignments,
        session=session,
        session_path=session_path,
        image_root=Path(image_root) if image_root else None,
        scatter_path=Path(scatter_path) if scatter_path else None,
    )
    app = FastAPI(title="cluster review service")
    app.state.review = state

    @app.get("/api/clusters")
    def get_clusters():
        return [
            {
                "cluster_id": c,
                "size": len(state.cluster_members[c]),
                "label": state.session.labels.get(c),
            }
            for c in state.cluster_ids
        ]

    @app.get("/api/clusters/{cluster_id}/images")
    def get_cluster_images(cluster_id: int, offset: int = 0, limit: int = DEFAULT_PAGE_LIMIT):
        if cluster_id not in state.cluster_members:
            raise HTTPException(status_code=404, detail=f"unknown cluster {cluster_id}")
        if offset < 0 or limit < 1:
            raise HTTPException(status_code=400, detail="offset must be >= 0 and limit >= 1")
        members = state.cluster_members[cluster_id]
        marked = set(state.session.marks)
        page = members[offset : offset + limit]
        return {
            "cluster_id": cluster_id,
            "total": len(members),
            "offset": offset,
            "limit": limit,
            "label": state.session.labels.get(cluster_id),
            "images": [{"image_id": i, "marked": i in marked} for i in page],
        }

    @app.get("/api/images/{image_id}")
    def get_image(image_id: str):
        record = state.records.get(image_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown image {image_id!r}")
        if state.image_root is None:
            raise HTTPException(status_code=404, detail="no image root configured")
        path = state.image_root / record.file_path
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"image file missing for {image_id!r}")
        media_type = CONTENT_TYPES.get(path.suffix.lower(), "application/octet-stream")
        return FileResponse(path, media_type=media_type)

    @app.get("/api/scatter")
    def get_scatter():
        if state.scatter_path is None or not state.scatter_path.is_file():
            raise HTTPException(status_code=404, detail="no scatter file available")
        return PlainTextResponse(
            state.scatter_path.read_text(encoding="utf-8"), media_type="text/csv"
        )

    @app.get("/api/metrics")
    def get_metrics():
        report = compute_precision(state.current_groups(), state.session.marks)
        return {
            "macro_precision": report.macro_precision,
            "micro_precision": report.micro_precision,
            "per_cluster": {
                str(c): {"total": cp.total, "missed": cp.missed, "precision": cp.precision}
                for c, cp in report.per_cluster.items()
            },
        }

    @app.get("/api/export")
    def get_export():
        # Byte-exact marks file: one id per line in click order.
        text = "\n".join(state.session.marks) + "\n" if state.session.marks else ""
        return PlainTextResponse(text, media_type="text/plain")

    @app.get("/api/session")
    def get_session():
        s = state.session
        return {
            "session_id": s.session_id,
            "assignments_ref": s.assignments_ref,
            "marks": list(s.marks),
            "labels": {str(k): v for k, v in sorted(s.labels.items())},
            "merge_map": {str(k): v for k, v in sorted(s.merge_map.items())},
            "created_at": s.created_at,
            "updated_at": s.updated_at,
        }

    @app.post("/api/marks")
    def post_mark(body: MarkBody):
        with state.lock:
            try:
                state.commit(add_mark(state.session, body.image_id, state.assignments))
            except EvaluationError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            return {"marks": list(state.session.marks)}

    @app.delete("/api/marks/{image_id}")
    def delete_mark(image_id: str):
        with state.lock:
            try:
                state.commit(remove_mark(state.session, image_id, state.assignments))
            except EvaluationError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            return {"marks": list(state.session.marks)}

    @app.post("/api/labels")
    def post_label(body: LabelBody):
        with state.lock:
            try:
                state.commit(
                    set_label(state.session, body.cluster_id, body.keyword, state.assignments)
                )
            except EvaluationError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            return {"labels": {str(k): v for k, v in sorted(state.session.labels.items())}}

    @app.post("/api/merge")
    def post_merge(body: MergeBody):
        try:
            merge_map = {int(k): int(v) for k, v in body.merge_map.items()}
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=f"bad merge_map key: {exc}")
        with state.lock:
            try:
                state.commit(set_merge(state.session, merge_map, state.assignments))
            except EvaluationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return {"merge_map": {str(k): v for k, v in sorted(state.session.merge_map.items())}}

    static = Path(static_dir) if static_dir else None
    if static is not None and static.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static, html=True), name="ui")
    else:

        @app.get("/", response_class=Response)
        def root():
            return PlainTextResponse(
                "cluster review service: API under /api/, no UI bundle configured\n"
            )

    return app
