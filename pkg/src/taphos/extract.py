"""Optional deep-feature extraction from an ONNX backbone.

Precomputed embeddings files are the canonical pipeline input; this
module exists for users who start from raw photos and a pretrained
model (classifier head removed, global pooling applied, 2048-d output).
Preprocessing is not hardcoded: it comes from a JSON sidecar next to
the model, `{"resize": [h, w], "mean": [...], "std": [...],
"channel_order": "rgb"}`.

onnxruntime and pillow are imported lazily so the rest of the package
(and the test suite) never needs them; a caller can also inject any
callable as the model runner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix
from .manifest import Manifest

EXPECTED_DIM = 2048


class ExtractError(ValueError):
    """Raised on missing images, bad sidecars, or wrong model output."""


@dataclass(frozen=True)
class PreprocessConfig:
    """Decode-time contract for the model: target size, per-channel
    normalization, and channel order."""

    resize: tuple[int, int]  # (h, w)
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    channel_order: str  # "rgb" or "bgr"

    def __post_init__(self) -> None:
        if len(self.resize) != 2 or any(v <= 0 for v in self.resize):
            raise ExtractError(f"bad resize {self.resize}")
        if len(self.mean) != 3 or len(self.std) != 3:
            raise ExtractError("mean and std must each have 3 entries")
        if any(s <= 0 for s in self.std):
            raise ExtractError(f"std entries must be positive, got {self.std}")
        if self.channel_order not in ("rgb", "bgr"):
            raise ExtractError(f"channel_order must be rgb or bgr, got {self.channel_order!r}")


def load_preprocess_config(path: str | Path) -> PreprocessConfig:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ExtractError(f"cannot read preprocessing config {path}: {exc}") from exc
    try:
        return PreprocessConfig(
            resize=tuple(int(v) for v in payload["resize"]),
            mean=tuple(float(v) for v in payload["mean"]),
            std=tuple(float(v) for v in payload["std"]),
            channel_order=str(payload.get("channel_order", "rgb")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ExtractError(f"bad preprocessing config {path}: {exc}") from exc


def sidecar_path(model_path: str | Path) -> Path:
    """The preprocessing config ships beside the model as <stem>.json."""
    return Path(model_path).with_suffix(".json")


def preprocess_image(image_path: str | Path, config: PreprocessConfig) -> np.ndarray:
    """Decode, resize, scale to [0, 1], normalize. Returns float32 CHW."""
    try:
        from PIL import Image
    except ImportError as exc:
        raise ExtractError(
            "image decoding requires pillow (install the 'extract' extra)"
        ) from exc
    h, w = config.resize
    with Image.open(image_path) as img:
        img = img.convert("RGB").resize((w, h), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32) / 255.0  # (h, w, 3), RGB
    if config.channel_order == "bgr":
        arr = arr[:, :, ::-1]
    mean = np.asarray(config.mean, dtype=np.float32)
    std = np.asarray(config.std, dtype=np.float32)
    arr = (arr - mean) / std
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def _onnx_runner(model_path: Path):
    try:
        import onnxruntime
    except ImportError as exc:
        raise ExtractError(
            "model execution requires onnxruntime (install the 'extract' extra) "
            "or an injected runner"
        ) from exc
    session = onnxruntime.InferenceSession(
        str(model_path), providers=["CPUExecutionProvider"]
    )
    input_name = session.get_inputs()[0].name

    def run(batch: np.ndarray) -> np.ndarray:
        return np.asarray(session.run(None, {input_name: batch})[0])

    return run


def extract_embeddings(
    model_path: str | Path,
    manifest: Manifest,
    image_root: str | Path,
    *,
    runner=None,
    preprocess_path: str | Path | None = None,
) -> EmbeddingMatrix:
    """Run every manifest image through the backbone, rows in manifest
    order.

    ``runner`` maps a (1, 3, h, w) float32 batch to a (1, d) array;
    by default it is built from the ONNX model at ``model_path``. The
    output dimension must be 2048; anything else is reported with the
    actual shape.
    """
    model_path = Path(model_path)
    image_root = Path(image_root)
    config = load_preprocess_config(preprocess_path or sidecar_path(model_path))
    if runner is None:
        runner = _onnx_runner(model_path)

    rows = np.empty((len(manifest), EXPECTED_DIM), dtype=np.float64)
    for i, rec in enumerate(manifest.records):
        image_path = image_root / rec.file_path
        if not image_path.is_file():
            raise ExtractError(f"missing image file for {rec.image_id!r}: {image_path}")
        batch = preprocess_image(image_path, config)[None, :]
        out = np.asarray(runner(batch))
        flat = out.reshape(out.shape[0], -1) if out.ndim > 1 else out[None, :]
        if flat.shape != (1, EXPECTED_DIM):
            raise ExtractError(
                f"model output shape {tuple(out.shape)} for {rec.image_id!r}, "
                f"expected (1, {EXPECTED_DIM})"
            )
        rows[i] = flat[0]
    return EmbeddingMatrix(image_ids=tuple(manifest.image_ids), values=rows)
