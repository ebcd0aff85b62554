"""Procedural shell-game tracking workbench.

Generates cups/cards shuffle episodes with exact ground truth, rasterizes
them into grayscale frame sequences, recovers the shuffle permutation from
pixels alone, compiles symmetric-group generator words into equivalent
videos, synthesizes masked trajectory chain-of-thought training data, and
scores answering agents under a multiple-choice protocol.
"""

from .perms import GeneratorWord, Permutation, compose, eval_word, fold
from .scene import (
    ContinuityReport,
    Episode,
    EpisodeSpec,
    SlotLayout,
    SwapEvent,
    build_episode,
    sample_positions,
    schedule_swaps,
    terminal_slot,
    validate_continuity,
)
from .raster import (
    Frame,
    FrameSequence,
    TemplateSet,
    TrackerConfig,
    TrackResult,
    localize,
    match_adjacent,
    rasterize,
    track,
    track_episode,
)
from .wordgadget import GadgetParams, compile_word
from .sgcot import SgcotSample, TrackString, derive_answer, parse_tracks, synthesize_sample
from .evalkit import McqaItem, Metrics, SweepCell, extract_answer, make_mcqa, run_agent, sweep

__all__ = [
    "GeneratorWord",
    "Permutation",
    "compose",
    "eval_word",
    "fold",
    "ContinuityReport",
    "Episode",
    "EpisodeSpec",
    "SlotLayout",
    "SwapEvent",
    "build_episode",
    "sample_positions",
    "schedule_swaps",
    "terminal_slot",
    "validate_continuity",
    "Frame",
    "FrameSequence",
    "TemplateSet",
    "TrackerConfig",
    "TrackResult",
    "localize",
    "match_adjacent",
    "rasterize",
    "track",
    "track_episode",
    "GadgetParams",
    "compile_word",
    "SgcotSample",
    "TrackString",
    "derive_answer",
    "parse_tracks",
    "synthesize_sample",
    "McqaItem",
    "Metrics",
    "SweepCell",
    "extract_answer",
    "make_mcqa",
    "run_agent",
    "sweep",
]
