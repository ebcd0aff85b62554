"""MCQA construction, answer extraction, agents, scoring, and sweeps."""
from __future__ import annotations

import base64
import io
import json
import os
import re
import string
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .errors import EndpointError
from .raster import TemplateSet, iter_frames, track_episode
from .scene import Episode, EpisodeSpec, SlotLayout, build_episode, terminal_slot
from .sgcot import answer_text


@dataclass(frozen=True)
class McqaItem:
    episode_id: str
    question: str
    options: tuple[tuple[str, str], ...]  # (letter, label)
    gold: str
    video_dir: str | None
    n_objects: int

    def prompt_text(self) -> str:
        lines = [self.question]
        lines += [f"({letter}) {label}" for letter, label in self.options]
        letters = [letter for letter, _ in self.options]
        listing = ", ".join(letters[:-1]) + f", or {letters[-1]}"
        lines.append(
            f"Output your final answer ({listing}) in the format: \\boxed{{<option>}}."
        )
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "episode_id": self.episode_id,
            "question": self.question,
            "options": [list(o) for o in self.options],
            "gold": self.gold,
            "video_dir": self.video_dir,
            "n_objects": self.n_objects,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "McqaItem":
        return cls(
            str(obj["episode_id"]),
            str(obj["question"]),
            tuple((str(a), str(b)) for a, b in obj["options"]),
            str(obj["gold"]),
            obj.get("video_dir"),
            int(obj["n_objects"]),
        )


@dataclass(frozen=True)
class Metrics:
    n: int
    correct: int
    unparseable: int
    baseline: float

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "correct": self.correct,
            "unparseable": self.unparseable,
            "accuracy": self.accuracy,
            "baseline": self.baseline,
        }


@dataclass(frozen=True)
class SweepCell:
    n_objects: int
    n_swaps: int
    episodes: int
    metrics: dict  # agent name -> Metrics


def make_mcqa(episode: Episode, video_dir: str | None = None) -> McqaItem:
    layout = episode.layout
    if episode.spec.game == "cards":
        question = "Where is the Queen of Hearts at the end of the video?"
    else:
        question = "Which cup contains the ball at the end of the video?"
    letters = string.ascii_uppercase
    options = tuple((letters[i], layout.labels[i]) for i in range(layout.n_slots))
    gold_label = layout.label(terminal_slot(episode))
    gold = next(letter for letter, label in options if label == gold_label)
    return McqaItem(
        episode_id=episode.episode_id,
        question=question,
        options=options,
        gold=gold,
        video_dir=video_dir,
        n_objects=episode.spec.n_objects,
    )


_BOXED_RE = re.compile(r"\\boxed\{\s*\(?([A-Za-z])\)?\s*\}")
_ANSWER_RE = re.compile(r"Answer:\s*([^.\n]+)", re.IGNORECASE)
_PAREN_RE = re.compile(r"\(([A-Za-z])\)")


def extract_answer(response: str, item: McqaItem) -> str | None:
    """Extraction ladder; returns the option letter or None when unparseable."""
    letters = {letter for letter, _ in item.options}
    labels = {label.lower(): letter for letter, label in item.options}

    boxed = [m.group(1).upper() for m in _BOXED_RE.finditer(response)]
    boxed = [b for b in boxed if b in letters]
    if boxed:
        return boxed[-1]

    answers = [m.group(1).strip().lower() for m in _ANSWER_RE.finditer(response)]
    answers = [labels[a] for a in answers if a in labels]
    if answers:
        return answers[-1]

    parens = [m.group(1).upper() for m in _PAREN_RE.finditer(response)]
    parens = [p for p in parens if p in letters]
    if parens:
        return parens[-1]
    bare = [
        line.strip().upper()
        for line in response.splitlines()
        if line.strip().upper() in letters
    ]
    if bare:
        return bare[-1]
    return None


class Agent(Protocol):
    def __call__(self, item: McqaItem) -> str: ...


class RandomAgent:
    """Uniform guesser; ignores the video entirely."""

    def __init__(self, seed: int):
        self._rng = np.random.Generator(np.random.PCG64(seed))

    def __call__(self, item: McqaItem) -> str:
        letter = item.options[int(self._rng.integers(len(item.options)))][0]
        return f"\\boxed{{{letter}}}"


class OracleAgent:
    """Runs the exact pixel tracker on the episode's frames."""

    def __init__(
        self,
        episodes: Mapping[str, Episode],
        fps: float = 8.0,
        width: int = 500,
        height: int = 500,
        templates: TemplateSet | None = None,
    ):
        self.episodes = dict(episodes)
        self.fps = fps
        self.width = width
        self.height = height
        self.templates = templates

    def __call__(self, item: McqaItem) -> str:
        episode = self.episodes[item.episode_id]
        result = track_episode(
            episode, self.fps, self.width, self.height, self.templates
        )
        slot = result.pi.apply(episode.target_initial_slot)
        return f"Answer: {answer_text(episode.layout.label(slot))}."


class EndpointAgent:
    """Generic chat-style JSON-over-HTTP client with inlined base64 frames.

    config: {"base_url": str, "model": str, "fps": float, "width": int,
    "height": int, "max_frames": int, "headers": {...}}.  The API key comes
    from the SHELLTRACK_API_KEY environment variable.
    """

    def __init__(self, config: dict, episodes: Mapping[str, Episode], session=None):
        if session is None:
            import requests

            session = requests.Session()
        self.config = config
        self.episodes = dict(episodes)
        self.session = session

    def _frame_payload(self, episode: Episode) -> list[dict]:
        fps = float(self.config.get("fps", 1.0))
        width = int(self.config.get("width", 500))
        height = int(self.config.get("height", 500))
        max_frames = int(self.config.get("max_frames", 64))
        content = []
        templates = TemplateSet.scaled(episode.spec.game, width, height)
        for frame in iter_frames(episode, fps, width, height, templates, check_continuity=False):
            if len(content) >= max_frames:
                break
            data = _pgm_bytes(frame.pixels)
            content.append(
                {
                    "type": "image_url",
                    "image_url": {
                        "url": "data:image/x-portable-graymap;base64,"
                        + base64.b64encode(data).decode()
                    },
                }
            )
        return content

    def __call__(self, item: McqaItem) -> str:
        episode = self.episodes[item.episode_id]
        headers = dict(self.config.get("headers", {}))
        key = os.environ.get("SHELLTRACK_API_KEY")
        if key:
            headers.setdefault("Authorization", f"Bearer {key}")
        payload = {
            "model": self.config.get("model", ""),
            "messages": [
                {
                    "role": "user",
                    "content": [{"type": "text", "text": item.prompt_text()}]
                    + self._frame_payload(episode),
                }
            ],
        }
        try:
            resp = self.session.post(
                self.config["base_url"], json=payload, headers=headers, timeout=120
            )
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except Exception as err:
            raise EndpointError(str(err)) from err


def _pgm_bytes(pixels: np.ndarray) -> bytes:
    return f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n".encode() + pixels.tobytes()


def run_agent(agent: Agent, items: Sequence[McqaItem]) -> Metrics:
    """Score one agent; endpoint failures count as unparseable, never abort."""
    if not items:
        raise ValueError("run_agent needs at least one item")
    correct = 0
    unparseable = 0
    for item in items:
        try:
            response = agent(item)
        except EndpointError:
            unparseable += 1
            continue
        letter = extract_answer(response, item)
        if letter is None:
            unparseable += 1
        elif letter == item.gold:
            correct += 1
    baseline = 1.0 / items[0].n_objects
    return Metrics(n=len(items), correct=correct, unparseable=unparseable, baseline=baseline)


def derive_seed(master_seed: int, *context: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), *[int(c) for c in context]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


AgentFactory = Callable[[Mapping[str, Episode]], Agent]


def sweep(
    base_spec: EpisodeSpec,
    n_swaps_axis: Sequence[int],
    n_objects_axis: Sequence[int],
    episodes_per_cell: int,
    agent_factories: Mapping[str, AgentFactory],
    master_seed: int,
) -> list[SweepCell]:
    """Fresh seeded episodes per cell; deterministic in master_seed."""
    if not n_swaps_axis or not n_objects_axis:
        raise ValueError("sweep axes must be non-empty")
    cells = []
    for n_objects in sorted(n_objects_axis):
        for n_swaps in sorted(n_swaps_axis):
            episodes = {}
            items = []
            for i in range(episodes_per_cell):
                seed = derive_seed(master_seed, n_objects, n_swaps, i)
                spec = replace(
                    base_spec,
                    n_objects=n_objects,
                    n_swaps=n_swaps,
                    seed=seed,
                    layout=SlotLayout.default(n_objects),
                )
                episode = build_episode(spec)
                # seed collisions would silently shrink the cell
                assert episode.episode_id not in episodes
                episodes[episode.episode_id] = episode
                items.append(make_mcqa(episode))
            metrics = {
                name: run_agent(factory(episodes), items)
                for name, factory in agent_factories.items()
            }
            cells.append(
                SweepCell(
                    n_objects=n_objects,
                    n_swaps=n_swaps,
                    episodes=episodes_per_cell,
                    metrics=metrics,
                )
            )
    return cells


REPORT_COLUMNS = [
    "n_objects",
    "n_swaps",
    "agent",
    "n",
    "correct",
    "unparseable",
    "accuracy",
    "baseline",
]


def report_rows(cells: Sequence[SweepCell]) -> list[dict]:
    rows = []
    for cell in cells:
        for agent_name in sorted(cell.metrics):
            m = cell.metrics[agent_name]
            rows.append(
                {
                    "n_objects": cell.n_objects,
                    "n_swaps": cell.n_swaps,
                    "agent": agent_name,
                    "n": m.n,
                    "correct": m.correct,
                    "unparseable": m.unparseable,
                    "accuracy": m.accuracy,
                    "baseline": m.baseline,
                }
            )
    return rows


def report_csv(cells: Sequence[SweepCell]) -> str:
    lines = [",".join(REPORT_COLUMNS)]
    for row in report_rows(cells):
        lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in REPORT_COLUMNS))
    return "\n".join(lines) + "\n"


def report_json(cells: Sequence[SweepCell]) -> str:
    return json.dumps(report_rows(cells), sort_keys=True, separators=(",", ":")) + "\n"
