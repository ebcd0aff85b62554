"""Deterministic flat rasterizer and the exact pixel-level tracker.

Frames are 8-bit grayscale, black background, with objects stamped as solid
bright squares.  Localization exploits that glyph values are unique and
glyphs never overlap: connected components of glyph-valued pixels must be
exact side x side squares, whose centers are the object centers.  The
tracker matches centers frame-to-frame by unique nearest successor in L1
distance and composes the per-frame permutations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from .errors import (
    AmbiguousCandidate,
    ContinuityViolation,
    NoCandidate,
    NonInjective,
    WrongCount,
)
from .perms import Permutation, fold
from .scene import CANVAS, ContinuityReport, Episode, frame_times, sample_positions, validate_continuity

CONTAINER_VALUE = 255
BALL_VALUE = 200
CARD_BACK_VALUE = 255
CARD_FACE_VALUE = 160


def _odd(v: float) -> int:
    n = max(3, int(round(v)))
    return n if n % 2 else n + 1


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) uint8
    t_s: float


@dataclass(frozen=True)
class TemplateSet:
    """Solid-square glyph templates; values disambiguate glyph kinds."""

    kind: str = "cups"  # "cups" or "cards"
    container_side: int = 61
    ball_side: int = 21

    def __post_init__(self):
        if self.container_side % 2 == 0 or self.ball_side % 2 == 0:
            raise ValueError("template sides must be odd so centers are well-defined")

    @property
    def match_values(self) -> tuple[int, ...]:
        """Pixel values the localizer treats as object glyphs."""
        if self.kind == "cards":
            return (CARD_BACK_VALUE, CARD_FACE_VALUE)
        return (CONTAINER_VALUE,)

    @classmethod
    def for_game(cls, game: str, container_side: int = 61, ball_side: int = 21) -> "TemplateSet":
        return cls(kind=game, container_side=container_side, ball_side=ball_side)

    @classmethod
    def scaled(cls, game: str, width: int, height: int | None = None) -> "TemplateSet":
        """Glyph sides proportional to the raster so that the engine's
        no-overlap clearances (calibrated at 1000x1000 with 61/21 px) hold
        at any frame size."""
        extent = min(width, height or width)
        scale = (extent - 1) / CANVAS
        return cls(
            kind=game,
            container_side=_odd(61 * scale),
            ball_side=_odd(21 * scale),
        )

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "container_side": self.container_side,
            "ball_side": self.ball_side,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TemplateSet":
        return cls(str(obj["kind"]), int(obj["container_side"]), int(obj["ball_side"]))


@dataclass(frozen=True)
class TrackerConfig:
    d_max: int  # max L1 displacement per frame, pixels
    k: int

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.k < 2:
            raise ValueError("k must be >= 2")


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[Frame, ...]
    fps: float
    layout_scale: tuple[float, float]  # normalized -> pixel factors (x, y)


def to_pixel(x_norm: float, extent: int) -> int:
    return int(math.floor(x_norm * (extent - 1) / CANVAS + 0.5))


def to_norm(px: int, extent: int) -> float:
    return px * CANVAS / (extent - 1)


def _stamp(pixels: np.ndarray, cx: int, cy: int, side: int, value: int) -> None:
    half = side // 2
    y0, y1 = cy - half, cy + half + 1
    x0, x1 = cx - half, cx + half + 1
    if y0 < 0 or x0 < 0 or y1 > pixels.shape[0] or x1 > pixels.shape[1]:
        raise ValueError(f"template at ({cx},{cy}) side {side} leaves the frame")
    pixels[y0:y1, x0:x1] = value


def render_frame(
    episode: Episode,
    t: float,
    width: int,
    height: int,
    templates: TemplateSet,
) -> Frame:
    pixels = np.zeros((height, width), dtype=np.uint8)
    positions = sample_positions(episode, t)
    game = episode.spec.game
    reveal = episode.spec.reveal_s
    target = episode.target_initial_slot - 1

    if game == "cups" and reveal > 0 and t <= reveal:
        # ball sits on the cue anchor; containers are stamped afterwards and
        # occlude it whenever they cover the spot
        bx, by = episode.layout.anchor(episode.target_initial_slot)
        _stamp(pixels, to_pixel(bx, width), to_pixel(by, height), templates.ball_side, BALL_VALUE)

    for idx, (x, y) in enumerate(positions):
        if game == "cards":
            face_up = idx == target and t < reveal
            value = CARD_FACE_VALUE if face_up else CARD_BACK_VALUE
        else:
            value = CONTAINER_VALUE
        _stamp(pixels, to_pixel(x, width), to_pixel(y, height), templates.container_side, value)
    return Frame(width=width, height=height, pixels=pixels, t_s=t)


def iter_frames(
    episode: Episode,
    fps: float,
    width: int,
    height: int,
    templates: TemplateSet | None = None,
    check_continuity: bool = True,
) -> Iterator[Frame]:
    """check_continuity=False deliberately permits under-sampled (aliased)
    sequences, used to demonstrate tracking failure below the Nyquist rate."""
    templates = templates or TemplateSet.scaled(episode.spec.game, width, height)
    if check_continuity:
        report = validate_continuity(episode, fps)
        if not report.ok:
            raise ContinuityViolation(
                f"2*d_eff={2 * report.d_eff:.1f} >= delta_min={report.delta_min:.1f} at {fps} FPS"
            )
    for t in frame_times(episode.duration_s, fps):
        yield render_frame(episode, t, width, height, templates)


def rasterize(
    episode: Episode,
    fps: float,
    width: int = 1000,
    height: int = 1000,
    templates: TemplateSet | None = None,
    check_continuity: bool = True,
) -> FrameSequence:
    frames = tuple(iter_frames(episode, fps, width, height, templates, check_continuity))
    return FrameSequence(
        frames=frames,
        fps=fps,
        layout_scale=((width - 1) / CANVAS, (height - 1) / CANVAS),
    )


def localize(frame: Frame, templates: TemplateSet, k: int) -> list[tuple[int, int]]:
    """Centers (x, y) of the k object glyphs, sorted by x then y.

    Exact matching: every connected component of glyph-valued pixels must be
    a full side x side solid square, otherwise the frame is malformed.
    """
    side = templates.container_side
    mask = np.zeros(frame.pixels.shape, dtype=bool)
    for value in templates.match_values:
        mask |= frame.pixels == value
    labels, n = ndimage.label(mask)
    if n != k:
        raise WrongCount(f"found {n} glyphs, expected {k}")
    centers = []
    for sl in ndimage.find_objects(labels):
        ys, xs = sl
        h, w = ys.stop - ys.start, xs.stop - xs.start
        if h != side or w != side or not mask[sl].all():
            raise WrongCount(f"glyph bbox {w}x{h} is not an exact {side}x{side} square")
        centers.append((xs.start + side // 2, ys.start + side // 2))
    centers.sort()
    return centers


def match_adjacent(
    c_t: list[tuple[int, int]],
    c_t1: list[tuple[int, int]],
    cfg: TrackerConfig,
) -> Permutation:
    """Unique-nearest-successor matching within d_max (L1), verified injective."""
    if len(c_t) != cfg.k or len(c_t1) != cfg.k:
        raise WrongCount(f"center lists must have k={cfg.k} entries")
    mapping = []
    for i, (xi, yi) in enumerate(c_t):
        hits = [
            j
            for j, (xj, yj) in enumerate(c_t1)
            if abs(xi - xj) + abs(yi - yj) <= cfg.d_max
        ]
        if not hits:
            raise NoCandidate(f"object {i + 1} has no successor within d_max={cfg.d_max}")
        if len(hits) > 1:
            raise AmbiguousCandidate(
                f"object {i + 1} has {len(hits)} successors within d_max={cfg.d_max}"
            )
        mapping.append(hits[0] + 1)
    if len(set(mapping)) != cfg.k:
        raise NonInjective(f"successor map {mapping} is not injective")
    return Permutation(cfg.k, tuple(mapping))


@dataclass(frozen=True)
class TrackResult:
    pi: Permutation
    is_identity: bool


def track(
    seq: FrameSequence | Iterable[Frame],
    templates: TemplateSet,
    cfg: TrackerConfig,
    strategy: str = "sequential",
) -> TrackResult:
    """Recover the global permutation over the lexicographic initial ordering."""
    frames = seq.frames if isinstance(seq, FrameSequence) else seq
    steps: list[Permutation] = []
    prev = None
    index = -1
    for index, frame in enumerate(frames):
        try:
            centers = localize(frame, templates, cfg.k)
            if prev is not None:
                steps.append(match_adjacent(prev, centers, cfg))
        except (WrongCount, NoCandidate, AmbiguousCandidate, NonInjective) as err:
            err.frame_index = index
            raise
        prev = centers
    if index < 0:
        raise WrongCount("empty frame sequence", frame_index=None)
    pi = fold(steps, strategy=strategy, k=cfg.k)
    return TrackResult(pi=pi, is_identity=pi.is_identity)


def default_d_max(report: ContinuityReport, width: int, height: int) -> int:
    """Tracker displacement budget from the continuity audit at the run's fps."""
    scale = max((width - 1) / CANVAS, (height - 1) / CANVAS)
    return max(1, int(math.ceil(1.05 * report.d_eff * scale)))


def track_episode(
    episode: Episode,
    fps: float,
    width: int = 1000,
    height: int = 1000,
    templates: TemplateSet | None = None,
    strategy: str = "sequential",
    d_max: int | None = None,
) -> TrackResult:
    """Rasterize (streaming) and track in one pass."""
    templates = templates or TemplateSet.scaled(episode.spec.game, width, height)
    if d_max is None:
        d_max = default_d_max(validate_continuity(episode, fps), width, height)
    cfg = TrackerConfig(d_max=d_max, k=episode.spec.n_objects)
    return track(iter_frames(episode, fps, width, height, templates), templates, cfg, strategy)
