"""Trajectory chain-of-thought wire format: serialization, parsing, binning,
loss masks, and plausibility flags."""
import json

import pytest
from hypothesis import given, strategies as st

from shelltrack.errors import EmptyTrack, ParseError
from shelltrack.scene import EpisodeSpec, SlotLayout, build_episode, terminal_slot
from shelltrack.sgcot import (
    SgcotSample,
    TrackString,
    derive_answer,
    flag_jumps,
    parse_tracks,
    serialize_tracks,
    synthesize_sample,
    target_track,
)

SEED7 = build_episode(EpisodeSpec("cups", 3, 5, seed=7))
N3 = SlotLayout.default(3)


def test_serialize_known_track():
    track = TrackString(
        entries=((0.0, 1, 745.0, 512.0), (0.5, 1, 745.0, 512.0)),
        label="the Queen of Hearts",
    )
    assert serialize_tracks(track) == (
        '<tracks coords="0.0 1 745 512;0.5 1 745 512">the Queen of Hearts</tracks>'
    )


def test_parse_round_trip_exact():
    text = (
        '<tracks coords="0.0 1 250 500;0.5 1 250 450;12.0 1 505 528">'
        "the cup that contains the ball</tracks>"
    )
    track = parse_tracks(text)
    assert len(track.entries) == 3
    assert track.entries[-1] == (12.0, 1, 505.0, 528.0)
    assert track.label == "the cup that contains the ball"
    assert serialize_tracks(track) == text


def test_parse_tolerates_one_space_after_semicolon():
    text = '<tracks coords="0.0 1 745 512; 0.5 1 745 512">x</tracks>'
    assert len(parse_tracks(text).entries) == 2


def test_parse_ignores_trailing_answer():
    text = '<tracks coords="0.0 1 250 500">x</tracks> Answer: left.'
    assert parse_tracks(text).label == "x"


@pytest.mark.parametrize(
    "text,reason",
    [
        ("tracks 0.0 1 1 1", "missing tracks opening"),
        ('<tracks coords="0.0 1 250">x</tracks>', "entry has 3 fields"),
        ('<tracks coords="0.0 1 250 500 9">x</tracks>', "entry has 5 fields"),
        ('<tracks coords="a 1 250 500">x</tracks>', "non-numeric"),
        ('<tracks coords="0.0 1 1250 500">x</tracks>', "outside 0-1000"),
        ('<tracks coords="1.0 1 250 500;0.5 1 250 500">x</tracks>', "decrease"),
        ('<tracks coords="0.0 1 250 500', "unterminated coords"),
        ('<tracks coords="0.0 1 250 500">x', "unterminated tracks"),
    ],
)
def test_parse_errors(text, reason):
    with pytest.raises(ParseError) as err:
        parse_tracks(text)
    assert reason in err.value.reason


def test_parse_error_offset_points_at_bad_entry():
    text = '<tracks coords="0.0 1 250 500;0.5 1 250">x</tracks>'
    with pytest.raises(ParseError) as err:
        parse_tracks(text)
    assert text[err.value.offset :].startswith("0.5 1 250")


coords = st.integers(min_value=0, max_value=1000)
entry_times = st.lists(
    st.integers(min_value=0, max_value=240), min_size=1, max_size=30
).map(sorted)


@given(entry_times, st.data())
def test_serialize_parse_round_trip_property(times, data):
    entries = tuple(
        (t * 0.5, 1, float(data.draw(coords)), float(data.draw(coords))) for t in times
    )
    track = TrackString(entries=entries, label="the cup that contains the ball")
    assert parse_tracks(serialize_tracks(track)) == track


def _track_at(x):
    return TrackString(entries=((0.0, 1, float(x), 500.0),), label="x")


def test_three_slot_bins():
    assert derive_answer(_track_at(247), N3) == "Left"
    assert derive_answer(_track_at(505), N3) == "Middle"
    assert derive_answer(_track_at(332), N3) == "Left"
    assert derive_answer(_track_at(333), N3) == "Middle"
    assert derive_answer(_track_at(667), N3) == "Right"
    assert derive_answer(_track_at(1000), N3) == "Right"


def test_other_slot_counts_use_nearest_anchor():
    n2 = SlotLayout.default(2)
    assert derive_answer(_track_at(499), n2) == "Left"
    assert derive_answer(_track_at(501), n2) == "Right"
    n4 = SlotLayout.default(4)
    assert derive_answer(_track_at(420), n4) == "Position 2 (from left)"


def test_empty_track_rejected():
    with pytest.raises(EmptyTrack):
        derive_answer(TrackString(entries=(), label="x"), N3)


def test_target_track_shape():
    track = target_track(SEED7)
    assert len(track.entries) == 25  # 12 s at 0.5 s spacing, inclusive
    assert track.entries[0][0] == 0.0
    assert track.entries[-1][0] == 12.0
    assert all(e[1] == 1 for e in track.entries)
    assert track.entries[0][2:] == (750.0, 500.0)  # cue slot 3 anchor


def test_synthesized_sample_layout():
    sample = synthesize_sample(SEED7)
    assert sample.prompt == (
        "Track the cup that contains the ball and answer "
        "which cup contains the ball at the end of the video?"
    )
    assert sample.response.startswith('<tracks coords="0.0 1 750 500;')
    assert sample.response.endswith("</tracks> Answer: middle.")
    (start, end) = sample.loss_spans[0]
    assert sample.response[start:end] == "Answer: middle."
    assert "<tracks" not in sample.response[start:end]
    assert sample.meta["answer_label"] == "middle"
    assert sample.meta["episode_id"] == "cups-n3-s5-seed7"


def test_cards_sample_uses_card_phrasing():
    episode = build_episode(EpisodeSpec("cards", 3, 2, seed=3))
    sample = synthesize_sample(episode)
    assert sample.prompt == (
        "Track the Queen of Hearts and answer "
        "where is the Queen of Hearts at the end of the video?"
    )
    assert "the Queen of Hearts</tracks>" in sample.response


def test_sample_answer_matches_simulation():
    for seed in range(20):
        episode = build_episode(EpisodeSpec("cups", 3, 5, seed=seed))
        sample = synthesize_sample(episode)
        want = episode.layout.label(terminal_slot(episode)).lower()
        assert sample.meta["answer_label"] == want
        track = parse_tracks(sample.response)
        assert derive_answer(track, episode.layout).lower() == want


def test_jsonl_round_trip():
    sample = synthesize_sample(SEED7)
    line = sample.to_jsonl_line()
    assert SgcotSample.from_json(json.loads(line)) == sample


def test_flag_jumps():
    smooth = target_track(SEED7)
    assert flag_jumps(smooth) == []
    broken = TrackString(
        entries=((0.0, 1, 292.0, 500.0), (0.5, 1, 765.0, 500.0)),
        label="x",
    )
    assert flag_jumps(broken) == [1]
    assert flag_jumps(broken, bound=500.0) == []
