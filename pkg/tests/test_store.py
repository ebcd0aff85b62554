"""On-disk artifacts: PGM codec, canonical JSON, episode directories."""
import json

import numpy as np
import pytest

from shelltrack.raster import rasterize
from shelltrack.scene import EpisodeSpec, build_episode
from shelltrack.store import (
    dump_json,
    read_frame_sequence,
    read_manifest,
    read_pgm,
    write_episode_dir,
    write_pgm,
)

SPEC = EpisodeSpec("cups", 3, 2, seed=4)


def test_pgm_round_trip(tmp_path):
    rng = np.random.Generator(np.random.PCG64(0))
    pixels = rng.integers(0, 256, size=(37, 53), dtype=np.uint8)
    path = tmp_path / "x.pgm"
    write_pgm(path, pixels)
    back = read_pgm(path)
    assert np.array_equal(back, pixels)
    data = path.read_bytes()
    assert data.startswith(b"P5\n53 37\n255\n")


def test_read_pgm_rejects_other_formats(tmp_path):
    path = tmp_path / "x.ppm"
    path.write_bytes(b"P6\n2 2\n255\n" + bytes(12))
    with pytest.raises(ValueError):
        read_pgm(path)


def test_dump_json_is_canonical():
    assert dump_json({"b": 1, "a": [1, 2]}) == b'{"a":[1,2],"b":1}\n'
    assert dump_json({"b": 1, "a": [1, 2]}) == dump_json({"a": [1, 2], "b": 1})


def test_write_episode_dir(tmp_path):
    episode = build_episode(SPEC)
    dest = write_episode_dir(episode, tmp_path / "ep", 8.0, 250, 250)
    frames = sorted(dest.glob("frame_*.pgm"))
    assert len(frames) == int(episode.duration_s * 8) + 1
    manifest = read_manifest(dest)
    assert manifest["pi"]["map"] == list(episode.pi.map)
    assert manifest["continuity"]["fps"] == 8.0
    meta = json.loads((dest / "frames.json").read_text())
    assert meta["width"] == 250 and meta["fps"] == 8.0
    assert len(meta["timestamps"]) == len(frames)


def test_frame_sequence_round_trip(tmp_path):
    episode = build_episode(SPEC)
    dest = write_episode_dir(episode, tmp_path / "ep", 8.0, 250, 250)
    seq, templates = read_frame_sequence(dest)
    direct = rasterize(episode, 8.0, 250, 250, templates)
    assert seq.fps == 8.0
    assert len(seq.frames) == len(direct.frames)
    for a, b in zip(seq.frames, direct.frames):
        assert a.t_s == b.t_s
        assert np.array_equal(a.pixels, b.pixels)


def test_write_is_deterministic(tmp_path):
    episode = build_episode(SPEC)
    a = write_episode_dir(episode, tmp_path / "a", 8.0, 250, 250)
    b = write_episode_dir(episode, tmp_path / "b", 8.0, 250, 250)
    for fa in sorted(a.iterdir()):
        assert fa.read_bytes() == (b / fa.name).read_bytes()
