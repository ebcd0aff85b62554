"""Episode construction for the cups and cards games.

All geometry lives in a normalized 0-1000 coordinate space with image-style
y (smaller y is higher on screen).  Episodes are pure functions of their
spec: the swap schedule and the cue slot are drawn from a PCG64 generator
seeded with spec.seed, so equal specs give bit-identical episodes.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .errors import InvalidSpec, OutOfRange
from .perms import Permutation, fold

CANVAS = 1000.0
ROW_Y = 500.0
ANCHOR_MARGIN = 250.0
DEFAULT_ARC_HEIGHT = 200.0
# The cue lift is half the swap-arc height so that even 1 FPS sampling of the
# reveal stays within the strict continuity budget (2 * lift < slot spacing).
REVEAL_LIFT_FRACTION = 0.5
DEFAULT_MIN_FPS = 8.0


def slot_labels(n: int) -> tuple[str, ...]:
    if n == 2:
        return ("Left", "Right")
    if n == 3:
        return ("Left", "Middle", "Right")
    return tuple(f"Position {i} (from left)" for i in range(1, n + 1))


@dataclass(frozen=True)
class SlotLayout:
    """Horizontal row of slot anchors in normalized units."""

    n_slots: int
    anchors: tuple[tuple[float, float], ...]
    spacing: float
    arc_height: float
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.n_slots < 2:
            raise InvalidSpec(f"need at least 2 slots, got {self.n_slots}")
        if len(self.anchors) != self.n_slots or len(self.labels) != self.n_slots:
            raise InvalidSpec("anchors/labels must match n_slots")
        xs = [a[0] for a in self.anchors]
        ys = {a[1] for a in self.anchors}
        if len(ys) != 1 or any(x1 >= x2 for x1, x2 in zip(xs, xs[1:])):
            raise InvalidSpec("anchors must be collinear with strictly increasing x")
        if self.spacing <= 0 or self.arc_height <= 0:
            raise InvalidSpec("spacing and arc_height must be positive")

    @classmethod
    def default(cls, n_slots: int, arc_height: float = DEFAULT_ARC_HEIGHT) -> "SlotLayout":
        xs = np.linspace(ANCHOR_MARGIN, CANVAS - ANCHOR_MARGIN, n_slots)
        anchors = tuple((float(x), ROW_Y) for x in xs)
        spacing = float(xs[1] - xs[0])
        return cls(n_slots, anchors, spacing, arc_height, slot_labels(n_slots))

    def anchor(self, slot: int) -> tuple[float, float]:
        return self.anchors[slot - 1]

    def label(self, slot: int) -> str:
        return self.labels[slot - 1]

    def to_json(self) -> dict:
        return {
            "n_slots": self.n_slots,
            "anchors": [list(a) for a in self.anchors],
            "spacing": self.spacing,
            "arc_height": self.arc_height,
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SlotLayout":
        return cls(
            int(obj["n_slots"]),
            tuple((float(x), float(y)) for x, y in obj["anchors"]),
            float(obj["spacing"]),
            float(obj["arc_height"]),
            tuple(obj["labels"]),
        )


@dataclass(frozen=True)
class SwapEvent:
    slot_a: int
    slot_b: int
    start_s: float
    duration_s: float
    path_style: str = "arc"  # "arc" for game episodes, "gadget" for compiled words

    def __post_init__(self):
        if self.slot_a == self.slot_b:
            raise InvalidSpec("swap needs two distinct slots")
        if self.duration_s <= 0:
            raise InvalidSpec("swap duration must be positive")

    def to_json(self) -> dict:
        return {
            "slot_a": self.slot_a,
            "slot_b": self.slot_b,
            "start_s": self.start_s,
            "duration_s": self.duration_s,
            "path_style": self.path_style,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SwapEvent":
        return cls(
            int(obj["slot_a"]),
            int(obj["slot_b"]),
            float(obj["start_s"]),
            float(obj["duration_s"]),
            str(obj["path_style"]),
        )


@dataclass(frozen=True)
class EpisodeSpec:
    game: str  # "cups" or "cards"
    n_objects: int
    n_swaps: int
    seed: int
    reveal_s: float = 2.0
    swap_s: float = 2.0
    layout: SlotLayout | None = None

    def __post_init__(self):
        if self.game not in ("cups", "cards"):
            raise InvalidSpec(f"unknown game {self.game!r}")
        if self.n_objects < 2:
            raise InvalidSpec("need at least 2 objects")
        if self.n_swaps < 0:
            raise InvalidSpec("n_swaps must be >= 0")
        if self.reveal_s < 0 or self.swap_s <= 0:
            raise InvalidSpec("reveal_s must be >= 0 and swap_s > 0")
        if self.layout is None:
            object.__setattr__(self, "layout", SlotLayout.default(self.n_objects))
        if self.layout.n_slots != self.n_objects:
            raise InvalidSpec(
                f"n_objects={self.n_objects} but layout has {self.layout.n_slots} slots"
            )

    def to_json(self) -> dict:
        return {
            "game": self.game,
            "n_objects": self.n_objects,
            "n_swaps": self.n_swaps,
            "seed": self.seed,
            "reveal_s": self.reveal_s,
            "swap_s": self.swap_s,
            "layout": self.layout.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EpisodeSpec":
        return cls(
            str(obj["game"]),
            int(obj["n_objects"]),
            int(obj["n_swaps"]),
            int(obj["seed"]),
            float(obj["reveal_s"]),
            float(obj["swap_s"]),
            SlotLayout.from_json(obj["layout"]),
        )


@dataclass(frozen=True)
class PathSegment:
    """One timed motion primitive of a single object.

    kinds:
      hold - sit at (x0, y0)
      arc  - half-ellipse from (x0, y0) to (x1, y0); y dips by `height`
             (negative = above the row) with smoothstep time easing
      lift - rise by `height` and return, sin profile over [t0, t1]
      line - constant-speed straight segment (gadget paths)
    """

    t0: float
    t1: float
    kind: str
    x0: float
    y0: float
    x1: float
    y1: float
    height: float = 0.0

    def at(self, t: float) -> tuple[float, float]:
        if self.kind == "hold":
            return self.x0, self.y0
        u = (t - self.t0) / (self.t1 - self.t0)
        u = min(max(u, 0.0), 1.0)
        if self.kind == "arc":
            e = u * u * (3.0 - 2.0 * u)  # smoothstep: exact anchor landing
            x = self.x0 + (self.x1 - self.x0) * e
            y = self.y0 + self.height * math.sin(math.pi * e)
            return x, y
        if self.kind == "lift":
            return self.x0, self.y0 + self.height * math.sin(math.pi * u)
        if self.kind == "line":
            return (
                self.x0 + (self.x1 - self.x0) * u,
                self.y0 + (self.y1 - self.y0) * u,
            )
        raise ValueError(f"unknown segment kind {self.kind!r}")


class ObjectPath:
    """Piecewise path over [0, duration]; segments are contiguous in time."""

    def __init__(self, segments: list[PathSegment]):
        self.segments = segments
        self._starts = [s.t0 for s in segments]

    def at(self, t: float) -> tuple[float, float]:
        i = bisect_right(self._starts, t) - 1
        i = max(i, 0)
        return self.segments[i].at(t)


@dataclass(frozen=True)
class ContinuityReport:
    fps: float
    d_eff: float
    delta_min: float
    ok: bool  # strict sufficient condition 2 * d_eff < delta_min
    swap_frame_intervals_min: float  # sampled frame intervals per swap window
    min_rate_ok: bool  # every swap spans >= 2 frame intervals

    def to_json(self) -> dict:
        return {
            "fps": self.fps,
            "d_eff": self.d_eff,
            "delta_min": self.delta_min,
            "ok": self.ok,
            "swap_frame_intervals_min": self.swap_frame_intervals_min,
            "min_rate_ok": self.min_rate_ok,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ContinuityReport":
        return cls(
            float(obj["fps"]),
            float(obj["d_eff"]),
            float(obj["delta_min"]),
            bool(obj["ok"]),
            float(obj["swap_frame_intervals_min"]),
            bool(obj["min_rate_ok"]),
        )


@dataclass(frozen=True)
class Episode:
    spec: EpisodeSpec
    schedule: tuple[SwapEvent, ...]
    target_initial_slot: int
    pi: Permutation
    paths: tuple[ObjectPath, ...]
    duration_s: float
    declared_min_fps: float = DEFAULT_MIN_FPS
    word: str | None = None  # generator word text for compiled episodes
    gadget_params: object | None = None  # GadgetParams for compiled episodes

    @property
    def layout(self) -> SlotLayout:
        return self.spec.layout

    @property
    def episode_id(self) -> str:
        return f"{self.spec.game}-n{self.spec.n_objects}-s{self.spec.n_swaps}-seed{self.spec.seed}"


def schedule_swaps(spec: EpisodeSpec) -> list[SwapEvent]:
    """Seeded uniform slot-pair schedule; event i starts at reveal_s + i*swap_s."""
    _, events = _draw_cue_and_schedule(spec)
    return events


def _draw_cue_and_schedule(spec: EpisodeSpec) -> tuple[int, list[SwapEvent]]:
    # One PCG64 stream per spec; the cue slot is drawn first, then the pairs.
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    target = int(rng.integers(1, spec.n_objects + 1))
    pairs = list(combinations(range(1, spec.n_objects + 1), 2))
    events = []
    for i in range(spec.n_swaps):
        a, b = pairs[int(rng.integers(len(pairs)))]
        events.append(
            SwapEvent(a, b, spec.reveal_s + i * spec.swap_s, spec.swap_s, "arc")
        )
    return target, events


def build_episode(spec: EpisodeSpec) -> Episode:
    target, events = _draw_cue_and_schedule(spec)
    layout = spec.layout
    # Zero-swap episodes still get a static tail so the video is non-trivial.
    if spec.n_swaps > 0:
        duration = spec.reveal_s + spec.n_swaps * spec.swap_s
    else:
        duration = spec.reveal_s + spec.swap_s

    segments: list[list[PathSegment]] = [[] for _ in range(spec.n_objects)]
    occupant = list(range(spec.n_objects))  # occupant[slot-1] = object index (0-based)
    slot_of = list(range(spec.n_objects))  # slot-1 currently held by each object
    cursor = [0.0] * spec.n_objects

    if spec.game == "cups" and spec.reveal_s > 0:
        obj = occupant[target - 1]
        ax, ay = layout.anchor(target)
        lift = layout.arc_height * REVEAL_LIFT_FRACTION
        segments[obj].append(
            PathSegment(0.0, spec.reveal_s, "lift", ax, ay, ax, ay, height=-lift)
        )
        cursor[obj] = spec.reveal_s

    for ev in events:
        a, b = sorted((ev.slot_a, ev.slot_b))
        oa, ob = occupant[a - 1], occupant[b - 1]
        xa, ya = layout.anchor(a)
        xb, yb = layout.anchor(b)
        for obj, x0, x1, height in (
            (oa, xa, xb, -layout.arc_height),  # lower slot occupant arcs above
            (ob, xb, xa, +layout.arc_height),
        ):
            if cursor[obj] < ev.start_s:
                cx, cy = layout.anchor(slot_of[obj] + 1)
                segments[obj].append(
                    PathSegment(cursor[obj], ev.start_s, "hold", cx, cy, cx, cy)
                )
            segments[obj].append(
                PathSegment(
                    ev.start_s, ev.start_s + ev.duration_s, "arc", x0, ya, x1, ya, height
                )
            )
            cursor[obj] = ev.start_s + ev.duration_s
        occupant[a - 1], occupant[b - 1] = ob, oa
        slot_of[oa], slot_of[ob] = b - 1, a - 1

    for obj in range(spec.n_objects):
        if cursor[obj] < duration or not segments[obj]:
            cx, cy = layout.anchor(slot_of[obj] + 1)
            segments[obj].append(
                PathSegment(cursor[obj], duration, "hold", cx, cy, cx, cy)
            )

    transpositions = [
        Permutation.transposition(spec.n_objects, ev.slot_a, ev.slot_b) for ev in events
    ]
    pi = fold(transpositions, strategy="sequential", k=spec.n_objects)
    return Episode(
        spec=spec,
        schedule=tuple(events),
        target_initial_slot=target,
        pi=pi,
        paths=tuple(ObjectPath(s) for s in segments),
        duration_s=duration,
    )


def sample_positions(episode: Episode, t: float) -> list[tuple[float, float]]:
    """Positions of all objects (by initial slot order) at time t seconds."""
    if t < -1e-9 or t > episode.duration_s + 1e-9:
        raise OutOfRange(f"t={t} outside [0, {episode.duration_s}]")
    t = min(max(t, 0.0), episode.duration_s)
    return [p.at(t) for p in episode.paths]


def frame_times(duration_s: float, fps: float) -> list[float]:
    n = int(math.floor(duration_s * fps + 1e-9)) + 1
    return [min(i / fps, duration_s) for i in range(n)]


def validate_continuity(episode: Episode, fps: float) -> ContinuityReport:
    """Sample at 1/fps and measure max step displacement / min separation (L1)."""
    if fps <= 0:
        raise ValueError("fps must be positive")
    times = frame_times(episode.duration_s, fps)
    pts = np.array([sample_positions(episode, t) for t in times])  # (T, k, 2)
    steps = np.abs(np.diff(pts, axis=0)).sum(axis=2)
    d_eff = float(steps.max()) if steps.size else 0.0
    k = pts.shape[1]
    delta_min = math.inf
    for i in range(k):
        for j in range(i + 1, k):
            sep = np.abs(pts[:, i] - pts[:, j]).sum(axis=1).min()
            delta_min = min(delta_min, float(sep))
    ok = 2.0 * d_eff < delta_min
    if episode.schedule:
        swap_intervals = min(ev.duration_s * fps for ev in episode.schedule)
    else:
        swap_intervals = math.inf
    return ContinuityReport(
        fps=fps,
        d_eff=d_eff,
        delta_min=delta_min,
        ok=ok,
        swap_frame_intervals_min=swap_intervals,
        min_rate_ok=swap_intervals >= 2.0,
    )


def terminal_slot(episode: Episode) -> int:
    return episode.pi.apply(episode.target_initial_slot)


def manifest_json(episode: Episode, generation_fps: float | None = None) -> dict:
    obj = {
        "spec": episode.spec.to_json(),
        "schedule": [ev.to_json() for ev in episode.schedule],
        "target_initial_slot": episode.target_initial_slot,
        "pi": episode.pi.to_json(),
        "duration_s": episode.duration_s,
        "declared_min_fps": episode.declared_min_fps,
        "layout": episode.layout.to_json(),
    }
    if episode.word is not None:
        obj["word"] = episode.word
        obj["gadget_params"] = episode.gadget_params.to_json()
    if generation_fps is not None:
        obj["continuity"] = validate_continuity(episode, generation_fps).to_json()
    return obj


def episode_from_manifest(obj: dict) -> Episode:
    """Rebuild an episode from its manifest (pure regeneration from spec/word)."""
    if obj.get("word") is not None:
        from .wordgadget import GadgetParams, compile_word
        from .perms import GeneratorWord

        params = GadgetParams.from_json(obj["gadget_params"])
        return compile_word(GeneratorWord.from_text(obj["word"]), params)
    return build_episode(EpisodeSpec.from_json(obj["spec"]))
