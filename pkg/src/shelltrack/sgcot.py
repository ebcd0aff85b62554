"""Timestamped-trajectory chain-of-thought samples: synthesis, strict parsing,
answer binning, and the loss-mask layout used for masked fine-tuning files.

Wire format, byte-exact::

    <tracks coords="0.0 1 250 500;0.5 1 250 450;...">the cup that contains the ball</tracks> Answer: left.

Timestamps carry one decimal and are spaced 0.5 s apart; coordinates are
integers in the normalized 0-1000 space.  Only the ``Answer: <label>.``
suffix is inside a loss span.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import EmptyTrack, ParseError
from .scene import Episode, SlotLayout, sample_positions, terminal_slot

TRACK_OPEN = '<tracks coords="'
TRACK_CLOSE = "</tracks>"
ENTRY_STEP_S = 0.5
# In-distribution steps stay well under this: the widest half-second hop of a
# full-width swap arc is ~350 normalized units.
DEFAULT_JUMP_BOUND = 450.0

CUPS_OBJECT = "the cup that contains the ball"
CARDS_OBJECT = "the Queen of Hearts"
CUPS_QUESTION = "which cup contains the ball at the end of the video?"
CARDS_QUESTION = "where is the Queen of Hearts at the end of the video?"


@dataclass(frozen=True)
class TrackString:
    entries: tuple[tuple[float, int, float, float], ...]  # (t_s, object_idx, x, y)
    label: str


@dataclass(frozen=True)
class SgcotSample:
    prompt: str
    response: str
    loss_spans: tuple[tuple[int, int], ...]  # [start, end) char offsets into response
    meta: dict

    def to_json(self) -> dict:
        return {
            "prompt": self.prompt,
            "response": self.response,
            "loss_spans": [list(s) for s in self.loss_spans],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SgcotSample":
        return cls(
            str(obj["prompt"]),
            str(obj["response"]),
            tuple((int(a), int(b)) for a, b in obj["loss_spans"]),
            dict(obj["meta"]),
        )

    def to_jsonl_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))


def _fmt_entry(t: float, idx: int, x: float, y: float) -> str:
    return f"{t:.1f} {idx} {int(round(x))} {int(round(y))}"


def serialize_tracks(track: TrackString) -> str:
    body = ";".join(_fmt_entry(*e) for e in track.entries)
    return f'{TRACK_OPEN}{body}">{track.label}{TRACK_CLOSE}'


def parse_tracks(text: str) -> TrackString:
    """Strict parse of the tracks element; trailing text after it is ignored."""
    if not text.startswith(TRACK_OPEN):
        raise ParseError("missing tracks opening", 0)
    body_start = len(TRACK_OPEN)
    body_end = text.find('">', body_start)
    if body_end < 0:
        raise ParseError("unterminated coords attribute", len(text))
    entries = []
    pos = body_start
    prev_t = -math.inf
    for raw in text[body_start:body_end].split(";"):
        entry = raw[1:] if raw.startswith(" ") else raw  # one optional space after ';'
        fields = entry.split()
        if len(fields) != 4:
            raise ParseError(f"entry has {len(fields)} fields, expected 4", pos)
        try:
            t = float(fields[0])
            idx = int(fields[1])
            x = float(fields[2])
            y = float(fields[3])
        except ValueError:
            raise ParseError("non-numeric entry field", pos) from None
        if not (0.0 <= x <= 1000.0 and 0.0 <= y <= 1000.0):
            raise ParseError("coordinate outside 0-1000", pos)
        if t < prev_t:
            raise ParseError("timestamps decrease", pos)
        prev_t = t
        entries.append((t, idx, x, y))
        pos += len(raw) + 1
    label_start = body_end + 2
    close = text.find(TRACK_CLOSE, label_start)
    if close < 0:
        raise ParseError("unterminated tracks element", len(text))
    return TrackString(entries=tuple(entries), label=text[label_start:close])


def derive_answer(track: TrackString, layout: SlotLayout) -> str:
    """Bin the terminal x coordinate to a slot label.

    Three slots use the fixed thirds [0,333) / [333,667) / [667,1000];
    other slot counts bin to the nearest anchor.
    """
    if not track.entries:
        raise EmptyTrack("cannot derive an answer from an empty track")
    x = track.entries[-1][2]
    if layout.n_slots == 3:
        if x < 333:
            slot = 1
        elif x < 667:
            slot = 2
        else:
            slot = 3
    else:
        slot = min(
            range(1, layout.n_slots + 1),
            key=lambda s: abs(layout.anchor(s)[0] - x),
        )
    return layout.label(slot)


def answer_text(label: str) -> str:
    return label.lower()


def referred_object(game: str) -> str:
    return CARDS_OBJECT if game == "cards" else CUPS_OBJECT


def default_question(game: str) -> str:
    return CARDS_QUESTION if game == "cards" else CUPS_QUESTION


def target_track(episode: Episode) -> TrackString:
    """Trajectory of the cued object at 0.5 s spacing, padded to a multiple."""
    n_steps = int(math.ceil(episode.duration_s / ENTRY_STEP_S - 1e-9))
    target = episode.target_initial_slot - 1
    entries = []
    for i in range(n_steps + 1):
        t = min(i * ENTRY_STEP_S, episode.duration_s)
        x, y = sample_positions(episode, t)[target]
        entries.append((i * ENTRY_STEP_S, 1, float(round(x)), float(round(y))))
    return TrackString(entries=tuple(entries), label=referred_object(episode.spec.game))


def synthesize_sample(episode: Episode, question: str | None = None) -> SgcotSample:
    question = question or default_question(episode.spec.game)
    track = target_track(episode)
    label = answer_text(derive_answer(track, episode.layout))
    tracks_text = serialize_tracks(track)
    response = f"{tracks_text} Answer: {label}."
    answer_start = len(tracks_text) + 1
    prompt = f"Track {referred_object(episode.spec.game)} and answer {question}"
    return SgcotSample(
        prompt=prompt,
        response=response,
        loss_spans=((answer_start, len(response)),),
        meta={
            "episode_id": episode.episode_id,
            "game": episode.spec.game,
            "answer_label": label,
        },
    )


def flag_jumps(track: TrackString, bound: float = DEFAULT_JUMP_BOUND) -> list[int]:
    """Indices whose L1 step from the previous entry exceeds the bound."""
    flagged = []
    for i in range(1, len(track.entries)):
        _, _, x0, y0 = track.entries[i - 1]
        _, _, x1, y1 = track.entries[i]
        if abs(x1 - x0) + abs(y1 - y0) > bound:
            flagged.append(i)
    return flagged
