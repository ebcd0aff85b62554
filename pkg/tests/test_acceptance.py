"""Release gate: seven end-to-end criteria, one test each.

These run the full pipeline at production sizes, so this module dominates
suite runtime (several minutes).  Each test prints a PASS/FAIL line via the
reporter in conftest.py.
"""
import time

import numpy as np

from shelltrack.cli import run
from shelltrack.errors import AmbiguousCandidate, NoCandidate
from shelltrack.evalkit import (
    OracleAgent,
    RandomAgent,
    make_mcqa,
    run_agent,
    sweep,
)
from shelltrack.perms import GeneratorWord, Permutation, eval_word, fold
from shelltrack.raster import (
    TemplateSet,
    TrackerConfig,
    default_d_max,
    rasterize,
    track,
    track_episode,
)
from shelltrack.scene import EpisodeSpec, build_episode, terminal_slot, validate_continuity
from shelltrack.sgcot import (
    TrackString,
    derive_answer,
    parse_tracks,
    serialize_tracks,
    synthesize_sample,
    target_track,
)
from shelltrack.wordgadget import compile_word

GRID = [
    (n, s) for n in (2, 3, 4) for s in (0, 1, 2, 5, 8, 16)
]  # 18 standard cells


def _grid_specs(count):
    cells = len(GRID)
    for i in range(count):
        n, s = GRID[i % cells]
        yield EpisodeSpec("cups" if i % 2 == 0 else "cards", n, s, seed=i)


def test_c1_tracker_recovers_every_episode():
    # 1000 episodes across the standard grid, rasterized at 8 FPS and
    # 500x500, must all track back to the manifest permutation in < 5 min.
    started = time.monotonic()
    matched = 0
    for spec in _grid_specs(1000):
        episode = build_episode(spec)
        result = track_episode(episode, 8.0, 500, 500)
        assert result.pi == episode.pi, episode.episode_id
        matched += 1
    elapsed = time.monotonic() - started
    assert matched == 1000
    assert elapsed < 300.0, f"tracking 1000 episodes took {elapsed:.0f}s"


def test_c2_word_videos_round_trip():
    # 500 random generator words (length <= 200) compile to videos whose
    # tracked permutation equals the word's algebraic value.
    rng = np.random.Generator(np.random.PCG64(2024))
    words = [GeneratorWord.from_text("121212")]  # braid word, must be identity
    while len(words) < 500:
        length = int(rng.integers(0, 201))
        words.append(GeneratorWord(tuple(int(v) for v in rng.integers(1, 5, length))))
    assert eval_word(words[0], 5).is_identity
    for word in words:
        want = eval_word(word, 5)
        got = track_episode(compile_word(word), 10.0, 250, 250)
        assert got.pi == want, word.to_text()[:40]


def test_c3_frame_rate_audit_and_aliasing():
    # every standard episode is trackable at the declared 1 FPS minimum rate
    for spec in _grid_specs(180):
        episode = build_episode(spec)
        assert validate_continuity(episode, 1.0).min_rate_ok, episode.episode_id
        assert validate_continuity(episode, 8.0).ok, episode.episode_id
    # quartering below the minimum rate aliases swaps away: at 0.25 FPS at
    # least 95% of 5-swap episodes must make the tracker refuse
    failures = 0
    total = 100
    for seed in range(total):
        episode = build_episode(EpisodeSpec("cups", 3, 5, seed=seed))
        seq = rasterize(episode, 0.25, 250, 250, check_continuity=False)
        report = validate_continuity(episode, 0.25)
        cfg = TrackerConfig(d_max=default_d_max(report, 250, 250), k=3)
        try:
            track(seq, TemplateSet.scaled("cups", 250), cfg)
        except (NoCandidate, AmbiguousCandidate):
            failures += 1
    assert failures >= 95, f"only {failures}/{total} undersampled episodes failed"


def test_c4_fold_strategies_are_equivalent():
    rng = np.random.Generator(np.random.PCG64(4))
    for _ in range(10_000):
        length = int(rng.integers(0, 65))
        perms = [
            Permutation(5, tuple(int(v) + 1 for v in rng.permutation(5)))
            for _ in range(length)
        ]
        assert fold(perms, "sequential", k=5) == fold(perms, "balanced", k=5)


def test_c5_training_samples_are_faithful():
    # 300 samples: byte-exact serialization, answers that match simulation
    checked = 0
    for spec in _grid_specs(300):
        episode = build_episode(spec)
        sample = synthesize_sample(episode)
        body = sample.response[: sample.loss_spans[0][0] - 1]
        track_str = parse_tracks(sample.response)
        assert serialize_tracks(track_str) == body
        assert derive_answer(track_str, episode.layout).lower() == (
            episode.layout.label(terminal_slot(episode)).lower()
        )
        (start, end) = sample.loss_spans[0]
        assert sample.response[start:end] == f"Answer: {sample.meta['answer_label']}."
        checked += 1
    assert checked == 300
    # a 12-second episode serializes to 25 half-second entries
    twelve = build_episode(EpisodeSpec("cups", 3, 5, seed=7))
    assert twelve.duration_s == 12.0
    assert len(target_track(twelve).entries) == 25
    # terminal-x binning for three slots
    from shelltrack.scene import SlotLayout

    n3 = SlotLayout.default(3)
    at = lambda x: TrackString(entries=((0.0, 1, float(x), 500.0),), label="x")
    assert derive_answer(at(247), n3) == "Left"
    assert derive_answer(at(505), n3) == "Middle"


def test_c6_baselines_are_calibrated():
    # random agent converges to 1/N within +-0.03 at 3000 items per N
    for n in (2, 3, 4):
        items = []
        for i in range(3000):
            episode = build_episode(EpisodeSpec("cups", n, i % 6, seed=10_000 + i))
            items.append(make_mcqa(episode))
        metrics = run_agent(RandomAgent(seed=n), items)
        assert abs(metrics.accuracy - 1.0 / n) <= 0.03, (n, metrics.accuracy)
    # the oracle is perfect in every cell of a swap/object sweep
    cells = sweep(
        EpisodeSpec("cups", 3, 0, seed=0),
        n_swaps_axis=[0, 1, 2, 5],
        n_objects_axis=[2, 3, 4],
        episodes_per_cell=5,
        agent_factories={
            "oracle": lambda eps: OracleAgent(eps, fps=8.0, width=500, height=500)
        },
        master_seed=6,
    )
    assert len(cells) == 12
    for cell in cells:
        assert cell.metrics["oracle"].accuracy == 1.0, (cell.n_objects, cell.n_swaps)


def _tree_bytes(root, skip=("config.json",)):
    files = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name not in skip:
            files[str(path.relative_to(root))] = path.read_bytes()
    return files


def test_c7_equal_seeds_give_identical_artifacts(tmp_path):
    gen = ["generate", "--count", "2", "--swaps", "3", "--seed", "9",
           "--fps", "8", "--size", "250"]
    assert run(gen + ["--out", str(tmp_path / "gen_a")]) == 0
    assert run(gen + ["--out", str(tmp_path / "gen_b")]) == 0
    a = _tree_bytes(tmp_path / "gen_a")
    assert a and a == _tree_bytes(tmp_path / "gen_b")

    sg = ["sgcot", "--count", "5", "--swaps", "5", "--seed", "9"]
    assert run(sg + ["--out", str(tmp_path / "sg_a")]) == 0
    assert run(sg + ["--out", str(tmp_path / "sg_b")]) == 0
    a = _tree_bytes(tmp_path / "sg_a")
    assert a and a == _tree_bytes(tmp_path / "sg_b")

    sw = ["sweep", "--swaps-axis", "0,1", "--objects-axis", "3", "--per-cell", "2",
          "--agents", "oracle,random", "--size", "500", "--seed", "9"]
    assert run(sw + ["--out", str(tmp_path / "sw_a")]) == 0
    assert run(sw + ["--out", str(tmp_path / "sw_b")]) == 0
    a = _tree_bytes(tmp_path / "sw_a")
    assert a and a == _tree_bytes(tmp_path / "sw_b")
