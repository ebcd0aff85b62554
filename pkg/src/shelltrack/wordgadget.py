"""Compile S5 generator words into episodes whose tracked permutation is the
word's value.

Each symbol τj becomes a constant-length gadget: the object on slot j travels
over the top row via three axis-aligned segments while the object on slot j+1
mirrors it under the bottom row.  Gadgets start and end with every object
exactly on an anchor, so they concatenate freely.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParamViolation
from .perms import GeneratorWord, eval_word
from .scene import (
    CANVAS,
    ROW_Y,
    Episode,
    EpisodeSpec,
    ObjectPath,
    PathSegment,
    SlotLayout,
    SwapEvent,
    slot_labels,
)

STEP_S = 0.1  # seconds per discretized step; 10 FPS samples land on step ends


@dataclass(frozen=True)
class GadgetParams:
    L: float = 120.0  # anchor spacing
    h: float = 40.0  # row offset of the over/under detours
    d: float = 20.0  # per-step displacement bound
    steps_per_segment: int = 6
    k: int = 5
    margin: float = 60.0

    def __post_init__(self):
        if self.k < 5:
            raise ParamViolation(f"need k >= 5, got {self.k}")
        if self.L <= 2 * self.d:
            raise ParamViolation(f"L={self.L} must exceed 2d={2 * self.d}")
        if self.h <= self.d:
            raise ParamViolation(f"h={self.h} must exceed d={self.d}")
        if self.steps_per_segment < 1:
            raise ParamViolation("steps_per_segment must be >= 1")
        if max(self.L, self.h) / self.steps_per_segment > self.d + 1e-9:
            raise ParamViolation(
                f"segments of length {max(self.L, self.h)} in "
                f"{self.steps_per_segment} steps exceed the bound d={self.d}"
            )
        span = (self.k - 1) * self.L
        if span + 2 * self.margin > CANVAS:
            raise ParamViolation(f"{self.k} anchors spaced {self.L} overflow the canvas")

    @property
    def segment_s(self) -> float:
        return self.steps_per_segment * STEP_S

    @property
    def gadget_s(self) -> float:
        return 3 * self.segment_s

    def to_json(self) -> dict:
        return {
            "L": self.L,
            "h": self.h,
            "d": self.d,
            "steps_per_segment": self.steps_per_segment,
            "k": self.k,
            "margin": self.margin,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GadgetParams":
        return cls(
            L=float(obj["L"]),
            h=float(obj["h"]),
            d=float(obj["d"]),
            steps_per_segment=int(obj["steps_per_segment"]),
            k=int(obj["k"]),
            margin=float(obj["margin"]),
        )

    def layout(self) -> SlotLayout:
        start = (CANVAS - (self.k - 1) * self.L) / 2.0
        anchors = tuple((start + i * self.L, ROW_Y) for i in range(self.k))
        return SlotLayout(self.k, anchors, self.L, self.h, slot_labels(self.k))


def compile_word(w: GeneratorWord, params: GadgetParams | None = None) -> Episode:
    params = params or GadgetParams()
    layout = params.layout()
    m = len(w)
    duration = m * params.gadget_s if m else params.gadget_s  # static tail for <>

    segments: list[list[PathSegment]] = [[] for _ in range(params.k)]
    occupant = list(range(params.k))
    slot_of = list(range(params.k))
    cursor = [0.0] * params.k
    events = []

    for g, j in enumerate(w.symbols):
        t0 = g * params.gadget_s
        events.append(SwapEvent(j, j + 1, t0, params.gadget_s, "gadget"))
        top, bot = occupant[j - 1], occupant[j]
        (xa, ya), (xb, yb) = layout.anchor(j), layout.anchor(j + 1)
        # top object detours above (image-y minus h), bottom mirrors below
        for obj, x0, x1, dy in ((top, xa, xb, -params.h), (bot, xb, xa, +params.h)):
            if cursor[obj] < t0:
                cx, cy = layout.anchor(slot_of[obj] + 1)
                segments[obj].append(PathSegment(cursor[obj], t0, "hold", cx, cy, cx, cy))
            s = params.segment_s
            segments[obj] += [
                PathSegment(t0, t0 + s, "line", x0, ya, x0, ya + dy),
                PathSegment(t0 + s, t0 + 2 * s, "line", x0, ya + dy, x1, ya + dy),
                PathSegment(t0 + 2 * s, t0 + 3 * s, "line", x1, ya + dy, x1, ya),
            ]
            cursor[obj] = t0 + 3 * s
        occupant[j - 1], occupant[j] = bot, top
        slot_of[top], slot_of[bot] = j, j - 1

    for obj in range(params.k):
        if cursor[obj] < duration or not segments[obj]:
            cx, cy = layout.anchor(slot_of[obj] + 1)
            segments[obj].append(PathSegment(cursor[obj], duration, "hold", cx, cy, cx, cy))

    spec = EpisodeSpec(
        game="cups",
        n_objects=params.k,
        n_swaps=m,
        seed=0,
        reveal_s=0.0,
        swap_s=params.gadget_s,
        layout=layout,
    )
    return Episode(
        spec=spec,
        schedule=tuple(events),
        target_initial_slot=1,
        pi=eval_word(w, params.k),
        paths=tuple(ObjectPath(s) for s in segments),
        duration_s=duration,
        declared_min_fps=1.0 / STEP_S,
        word=w.to_text(),
        gadget_params=params,
    )
