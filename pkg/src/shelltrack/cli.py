"""Single `shelltrack` executable: generation, word compilation, tracking,
continuity audits, training-data synthesis, and evaluation as subcommands.

stdout carries machine-readable results only; progress goes to stderr.
Exit codes: 0 success, 1 domain error (error JSON on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import evalkit, sgcot, store
from .errors import ShelltrackError
from .evalkit import EndpointAgent, OracleAgent, RandomAgent, derive_seed
from .perms import GeneratorWord
from .raster import TemplateSet, TrackerConfig, _odd, default_d_max, track
from .scene import (
    Episode,
    EpisodeSpec,
    build_episode,
    episode_from_manifest,
    manifest_json,
    validate_continuity,
)
from .wordgadget import GadgetParams, compile_word


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_config(out_dir: Path, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    resolved = {k: (str(v) if isinstance(v, Path) else v) for k, v in resolved.items()}
    store.atomic_write_json(Path(out_dir) / "config.json", resolved)


def _episode_spec(args: argparse.Namespace, seed: int) -> EpisodeSpec:
    return EpisodeSpec(
        game=args.game,
        n_objects=args.objects,
        n_swaps=args.swaps,
        seed=seed,
        reveal_s=args.reveal_s,
        swap_s=args.swap_s,
    )


def _episode_seeds(args: argparse.Namespace) -> list[int]:
    if args.count == 1:
        return [args.seed]
    return [derive_seed(args.seed, i) for i in range(args.count)]


def _generate_one(payload) -> str:
    spec_json, out_dir, fps, size = payload
    episode = build_episode(EpisodeSpec.from_json(spec_json))
    dest = Path(out_dir) / episode.episode_id
    store.write_episode_dir(episode, dest, fps, size, size)
    return episode.episode_id


def cmd_generate(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config(out_dir, args)
    payloads = [
        (_episode_spec(args, seed).to_json(), str(out_dir), args.fps, args.size)
        for seed in _episode_seeds(args)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            ids = list(pool.map(_generate_one, payloads))
    else:
        ids = [_generate_one(p) for p in payloads]
    for episode_id in ids:
        _log(f"wrote {out_dir / episode_id}")
    print(json.dumps({"episodes": ids}, sort_keys=True))
    return 0


def cmd_compile_word(args: argparse.Namespace) -> int:
    params = GadgetParams(
        L=args.spacing, h=args.offset, d=args.step_bound, steps_per_segment=args.steps, k=args.k
    )
    episode = compile_word(GeneratorWord.from_text(args.word), params)
    out_dir = Path(args.out)
    dest = out_dir / f"word-{args.word or 'empty'}"
    if args.template_side is not None:
        side = args.template_side
    else:
        # word glyphs are calibrated at 21 px on the 1000-px raster; scale down
        side = _odd(21 * (args.size - 1) / 1000.0)
    templates = TemplateSet.for_game("cups", container_side=side, ball_side=3)
    store.write_episode_dir(episode, dest, args.fps, args.size, args.size, templates)
    _write_config(out_dir, args)
    _log(f"wrote {dest}")
    print(json.dumps({"episode_dir": str(dest), "pi": episode.pi.to_json()}, sort_keys=True))
    return 0


def cmd_track(args: argparse.Namespace) -> int:
    episode_dir = Path(args.episode_dir)
    seq, templates = store.read_frame_sequence(episode_dir)
    manifest = store.read_manifest(episode_dir)
    k = manifest["spec"]["n_objects"]
    if args.d_max is not None:
        d_max = args.d_max
    else:
        episode = episode_from_manifest(manifest)
        report = validate_continuity(episode, seq.fps)
        d_max = default_d_max(report, seq.frames[0].width, seq.frames[0].height)
    result = track(seq, templates, TrackerConfig(d_max=d_max, k=k), strategy=args.strategy)
    print(
        json.dumps(
            {
                "pi": result.pi.to_json(),
                "is_identity": result.is_identity,
                "per_frame_errors": [],
            },
            sort_keys=True,
        )
    )
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    path = Path(args.episode_dir)
    manifest = store.read_manifest(path)
    episode = episode_from_manifest(manifest)
    report = validate_continuity(episode, args.fps)
    print(json.dumps(report.to_json(), sort_keys=True))
    return 0


def _build_episodes(args: argparse.Namespace) -> list[Episode]:
    return [build_episode(_episode_spec(args, seed)) for seed in _episode_seeds(args)]


def cmd_sgcot(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config(out_dir, args)
    lines = [
        sgcot.synthesize_sample(episode).to_jsonl_line() for episode in _build_episodes(args)
    ]
    store.atomic_write_bytes(out_dir / "sgcot.jsonl", ("\n".join(lines) + "\n").encode())
    _log(f"wrote {out_dir / 'sgcot.jsonl'} ({len(lines)} samples)")
    return 0


def cmd_mcqa(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config(out_dir, args)
    episodes = _build_episodes(args)
    lines = [json.dumps(evalkit.make_mcqa(e).to_json(), sort_keys=True) for e in episodes]
    store.atomic_write_bytes(out_dir / "mcqa.jsonl", ("\n".join(lines) + "\n").encode())
    manifests = [manifest_json(e) for e in episodes]
    store.atomic_write_json(out_dir / "episodes.json", manifests)
    _log(f"wrote {out_dir / 'mcqa.jsonl'} ({len(lines)} items)")
    return 0


def _make_agent(args: argparse.Namespace, episodes: dict) -> evalkit.Agent:
    if args.agent == "random":
        return RandomAgent(args.seed)
    if args.agent == "oracle":
        return OracleAgent(episodes, fps=args.fps, width=args.size, height=args.size)
    config = json.loads(Path(args.endpoint_config).read_text())
    return EndpointAgent(config, episodes)


def cmd_eval(args: argparse.Namespace) -> int:
    items_dir = Path(args.items)
    items = [
        evalkit.McqaItem.from_json(json.loads(line))
        for line in (items_dir / "mcqa.jsonl").read_text().splitlines()
        if line.strip()
    ]
    manifests = json.loads((items_dir / "episodes.json").read_text())
    episodes = {}
    for manifest in manifests:
        episode = episode_from_manifest(manifest)
        episodes[episode.episode_id] = episode
    metrics = evalkit.run_agent(_make_agent(args, episodes), items)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config(out_dir, args)
    result = {"agent": args.agent, **metrics.to_json()}
    store.atomic_write_json(out_dir / "report.json", result)
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    base = EpisodeSpec(
        game=args.game, n_objects=3, n_swaps=0, seed=0, reveal_s=args.reveal_s, swap_s=args.swap_s
    )
    factories = {}
    for name in args.agents.split(","):
        name = name.strip()
        if name == "random":
            factories[name] = lambda eps, s=args.seed: RandomAgent(s)
        elif name == "oracle":
            factories[name] = lambda eps: OracleAgent(eps, fps=args.fps, width=args.size, height=args.size)
        else:
            raise ShelltrackError(f"sweep supports oracle/random agents, got {name!r}")
    cells = evalkit.sweep(
        base,
        n_swaps_axis=[int(v) for v in args.swaps_axis.split(",")],
        n_objects_axis=[int(v) for v in args.objects_axis.split(",")],
        episodes_per_cell=args.per_cell,
        agent_factories=factories,
        master_seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_config(out_dir, args)
    store.atomic_write_bytes(out_dir / "report.csv", evalkit.report_csv(cells).encode())
    store.atomic_write_bytes(out_dir / "report.json", evalkit.report_json(cells).encode())
    print(evalkit.report_json(cells), end="")
    return 0


def _add_episode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--game", choices=["cups", "cards"], default="cups")
    p.add_argument("--objects", type=int, default=3)
    p.add_argument("--slots", type=int, default=None, help="must equal --objects if given")
    p.add_argument("--swaps", type=int, default=5)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reveal-s", dest="reveal_s", type=float, default=2.0)
    p.add_argument("--swap-s", dest="swap_s", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shelltrack")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("generate", help="generate episodes with frames and manifests")
    _add_episode_flags(p)
    p.add_argument("--fps", type=float, default=8.0)
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compile-word", help="compile a generator word into an episode")
    p.add_argument("--word", required=True, help="digits over {1,2,3,4}, e.g. 12121")
    p.add_argument("--spacing", type=float, default=120.0)
    p.add_argument("--offset", type=float, default=40.0)
    p.add_argument("--step-bound", dest="step_bound", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=6)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--template-side", dest="template_side", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile_word)

    p = sub.add_parser("track", help="recover the permutation from a frame directory")
    p.add_argument("episode_dir")
    p.add_argument("--d-max", dest="d_max", type=int, default=None)
    p.add_argument("--strategy", choices=["sequential", "balanced"], default="sequential")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("audit", help="continuity report for an episode at a frame rate")
    p.add_argument("episode_dir")
    p.add_argument("--fps", type=float, required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sgcot", help="synthesize masked chain-of-thought samples")
    _add_episode_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sgcot)

    p = sub.add_parser("mcqa", help="emit MCQA items plus episode manifests")
    _add_episode_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mcqa)

    p = sub.add_parser("eval", help="score an agent on MCQA items")
    p.add_argument("--items", required=True, help="directory holding mcqa.jsonl + episodes.json")
    p.add_argument("--agent", choices=["oracle", "random", "endpoint"], required=True)
    p.add_argument("--endpoint-config", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fps", type=float, default=8.0)
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="swap-count / object-count accuracy sweeps")
    p.add_argument("--game", choices=["cups", "cards"], default="cups")
    p.add_argument("--swaps-axis", dest="swaps_axis", default="0,1,2,5")
    p.add_argument("--objects-axis", dest="objects_axis", default="3")
    p.add_argument("--per-cell", dest="per_cell", type=int, default=10)
    p.add_argument("--agents", default="oracle,random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reveal-s", dest="reveal_s", type=float, default=2.0)
    p.add_argument("--swap-s", dest="swap_s", type=float, default=2.0)
    p.add_argument("--fps", type=float, default=8.0)
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "slots", None) is not None and args.slots != args.objects:
        parser.error(f"--slots {args.slots} conflicts with --objects {args.objects}")
    if getattr(args, "agent", None) == "endpoint" and not args.endpoint_config:
        parser.error("--agent endpoint needs --endpoint-config")
    try:
        return args.func(args)
    except ShelltrackError as err:
        print(
            json.dumps({"error": type(err).__name__, "message": str(err)}, sort_keys=True),
            file=sys.stderr,
        )
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
