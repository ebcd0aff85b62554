"""On-disk episode layout: manifest.json, frames.json, frame_*.pgm.

All writes go through a temp-file-and-rename so a crashed run never leaves a
half-written artifact.  JSON is dumped with sorted keys and fixed separators
so equal inputs produce byte-identical files.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .raster import Frame, FrameSequence, TemplateSet, iter_frames
from .scene import Episode, frame_times, manifest_json


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode()


def atomic_write_json(path: Path, obj) -> None:
    atomic_write_bytes(path, dump_json(obj))


def write_pgm(path: Path, pixels: np.ndarray) -> None:
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode()
    atomic_write_bytes(path, header + pixels.tobytes())


def read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path} is not a binary PGM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    pixels = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8)
    return pixels.reshape(height, width).copy()


def write_episode_dir(
    episode: Episode,
    out_dir: Path,
    fps: float,
    width: int,
    height: int,
    templates: TemplateSet | None = None,
) -> Path:
    """Write manifest + frames for one episode; returns the episode directory."""
    templates = templates or TemplateSet.scaled(episode.spec.game, width, height)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    times = []
    for i, frame in enumerate(iter_frames(episode, fps, width, height, templates)):
        write_pgm(out_dir / f"frame_{i:05d}.pgm", frame.pixels)
        times.append(frame.t_s)
    atomic_write_json(out_dir / "manifest.json", manifest_json(episode, generation_fps=fps))
    atomic_write_json(
        out_dir / "frames.json",
        {
            "fps": fps,
            "width": width,
            "height": height,
            "timestamps": times,
            "templates": templates.to_json(),
        },
    )
    return out_dir


def read_manifest(episode_dir: Path) -> dict:
    return json.loads((Path(episode_dir) / "manifest.json").read_text())


def read_frame_sequence(episode_dir: Path) -> tuple[FrameSequence, TemplateSet]:
    episode_dir = Path(episode_dir)
    meta = json.loads((episode_dir / "frames.json").read_text())
    templates = TemplateSet.from_json(meta["templates"])
    frames = []
    for i, t in enumerate(meta["timestamps"]):
        pixels = read_pgm(episode_dir / f"frame_{i:05d}.pgm")
        frames.append(Frame(meta["width"], meta["height"], pixels, float(t)))
    seq = FrameSequence(
        frames=tuple(frames),
        fps=float(meta["fps"]),
        layout_scale=((meta["width"] - 1) / 1000.0, (meta["height"] - 1) / 1000.0),
    )
    return seq, templates
