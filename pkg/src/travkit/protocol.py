"""Clients for the segmentation adapter wire protocol.

Both segmenter kinds speak newline-delimited JSON over the stdin/stdout of a
spawned subprocess. Prompt-segmenter request/response:

    {"id": int, "image": "path", "prompts": [[u, v], ...]}
    {"id": int, "masks": ["path", ...], "scores": [float, ...]}

Semantic-segmenter request/response:

    {"id": int, "image": "path"}
    {"id": int, "semantic": "path", "vocabulary": "path"}

A response may instead carry {"id": int, "error": "..."}. Either adapter can
be replaced by a directory of pre-computed rasters keyed by frame index,
which is how the test suite runs without any neural model:

    frame000007_mask0.png, frame000007_mask1.png, ...   mask proposals
    frame000007_scores.json                             optional score list
    frame000007_semantic.png                            class-index raster
    vocabulary.json                                     shared vocabulary
"""

from __future__ import annotations

import json
import subprocess
import threading
from pathlib import Path

import numpy as np

from .errors import ProtocolError
from .fusion import SemanticMap, load_semantic_map
from .geometry import PixelPoints
from .maskproc import MaskProposalSet, load_mask

__all__ = [
    "SubprocessAdapter",
    "SubprocessPromptSegmenter",
    "SubprocessSemanticSegmenter",
    "FixturePromptSegmenter",
    "FixtureSemanticSegmenter",
]


class SubprocessAdapter:
    """One spawned adapter process; requests are serialized by a lock."""

    def __init__(self, command: list[str]):
        self.command = list(command)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def request(self, payload: dict) -> dict:
        with self._lock:
            proc = self._ensure_started()
            try:
                proc.stdin.write(json.dumps(payload) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ProtocolError(f"adapter process died: {exc}") from exc
        if not line:
            raise ProtocolError("adapter closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"adapter sent invalid JSON: {line!r}") from exc
        if response.get("id") != payload["id"]:
            raise ProtocolError(
                f"adapter answered id {response.get('id')} to request {payload['id']}"
            )
        if "error" in response:
            raise ProtocolError(f"adapter error: {response['error']}")
        return response

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


class SubprocessPromptSegmenter(SubprocessAdapter):
    def segment(
        self, image_path: str | Path, prompts: PixelPoints, frame_index: int
    ) -> MaskProposalSet:
        response = self.request(
            {
                "id": frame_index,
                "image": str(image_path),
                "prompts": [[float(u), float(v)] for u, v in prompts.points],
            }
        )
        try:
            mask_paths = response["masks"]
            scores = [float(s) for s in response["scores"]]
        except KeyError as exc:
            raise ProtocolError(f"prompt-segmenter response missing {exc}") from exc
        if len(mask_paths) != len(scores):
            raise ProtocolError("masks and scores length mismatch")
        return MaskProposalSet([load_mask(p) for p in mask_paths], scores)


class SubprocessSemanticSegmenter(SubprocessAdapter):
    def segment(self, image_path: str | Path, frame_index: int) -> SemanticMap:
        response = self.request({"id": frame_index, "image": str(image_path)})
        try:
            return load_semantic_map(response["semantic"], response["vocabulary"])
        except KeyError as exc:
            raise ProtocolError(f"semantic-segmenter response missing {exc}") from exc


class FixturePromptSegmenter:
    """Reads pre-computed mask proposals keyed by frame index."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def segment(
        self, image_path: str | Path, prompts: PixelPoints, frame_index: int
    ) -> MaskProposalSet:
        stem = f"frame{frame_index:06d}"
        mask_paths = sorted(self.directory.glob(f"{stem}_mask*.png"))
        if not mask_paths:
            raise ProtocolError(f"no fixture masks for frame {frame_index}")
        masks = [load_mask(p) for p in mask_paths]
        scores_path = self.directory / f"{stem}_scores.json"
        scores = (
            [float(s) for s in json.loads(scores_path.read_text())]
            if scores_path.exists()
            else []
        )
        return MaskProposalSet(masks, scores)

    def close(self) -> None:
        pass


class FixtureSemanticSegmenter:
    """Reads pre-computed semantic rasters keyed by frame index."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._vocab_path = self.directory / "vocabulary.json"

    def segment(self, image_path: str | Path, frame_index: int) -> SemanticMap:
        png = self.directory / f"frame{frame_index:06d}_semantic.png"
        if not png.exists():
            raise ProtocolError(f"no fixture semantic map for frame {frame_index}")
        return load_semantic_map(png, self._vocab_path)

    def close(self) -> None:
        pass
