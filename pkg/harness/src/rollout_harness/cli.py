"""Command-line front end for the harness.

Two subcommands: ``anchors`` writes a greedy anchor pool (manifest + binary
payload), ``rollouts`` writes stochastic rollout records as JSON Lines. Both
read a config file and a JSONL question file and run against the offline
mock backend; a real model runtime plugs in behind the same interface.
Errors exit nonzero with ``error: <Code>: <detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from rirs.errors import RirsError

from .anchors import dump_anchor_pool
from .backend import MockBackend
from .config import Instance, load_config
from .errors import HarnessError, InvalidConfig
from .rollouts import dump_rollouts


def _read_instances(path: Path) -> list[Instance]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidConfig(f"cannot read questions file {path}: {exc}") from exc
    instances = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise InvalidConfig(f"questions line {lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or not obj.get("instance_id") or not obj.get("question"):
            raise InvalidConfig(
                f"questions line {lineno}: need instance_id and question fields"
            )
        instances.append(Instance(instance_id=obj["instance_id"], question=obj["question"]))
    if not instances:
        raise InvalidConfig(f"questions file {path} holds no instances")
    return instances


def _refuse_overwrite(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise InvalidConfig(f"output {path} exists; pass --force to overwrite")


def _make_backend(args) -> MockBackend:
    return MockBackend(
        model_id=args.model_id,
        layer_count=args.layer_count,
        hidden_dim=args.hidden_dim,
        embed_dim=args.embed_dim,
    )


def _cmd_anchors(args) -> int:
    config = load_config(args.config)
    instances = _read_instances(Path(args.questions))
    manifest_path = Path(args.out)
    _refuse_overwrite(manifest_path, args.force)
    backend = _make_backend(args)
    manifest, extractions = dump_anchor_pool(
        instances, config, backend, manifest_path, pool_id=args.pool_id
    )
    truncated = sum(e.truncated for e in extractions)
    print(
        f"wrote pool {manifest.pool_id} with {manifest.instance_count} instances "
        f"({manifest.layer_count} layer rows, {truncated} truncated) to {manifest_path}"
    )
    return 0


def _cmd_rollouts(args) -> int:
    config = load_config(args.config)
    instances = _read_instances(Path(args.questions))
    out_path = Path(args.out)
    _refuse_overwrite(out_path, args.force)
    backend = _make_backend(args)
    collections = dump_rollouts(instances, config, backend, out_path)
    failures = sum(len(c.failures) for c in collections)
    print(
        f"wrote {len(collections)} rollout records ({failures} failed samples) "
        f"to {out_path}"
    )
    return 0


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model-id", default="mock-causal-4l", help="backend model identifier")
    parser.add_argument("--layer-count", type=int, default=4, help="transformer layers in the mock")
    parser.add_argument("--hidden-dim", type=int, default=16, help="hidden-state width")
    parser.add_argument("--embed-dim", type=int, default=8, help="sentence-embedding width")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rollout-harness",
        description="Produce anchor pools and rollout records with the offline mock backend.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_anchors = sub.add_parser("anchors", help="greedy anchor dump in the pool format")
    p_anchors.add_argument("--config", required=True, help="YAML or JSON harness config")
    p_anchors.add_argument("--questions", required=True, help="JSONL with instance_id/question")
    p_anchors.add_argument("--out", required=True, help="manifest path (payload lands beside it)")
    p_anchors.add_argument("--pool-id", default="anchor-pool")
    p_anchors.add_argument("--force", action="store_true", help="overwrite existing output")
    _add_backend_flags(p_anchors)
    p_anchors.set_defaults(func=_cmd_anchors)

    p_rollouts = sub.add_parser("rollouts", help="stochastic rollout records as JSONL")
    p_rollouts.add_argument("--config", required=True, help="YAML or JSON harness config")
    p_rollouts.add_argument("--questions", required=True, help="JSONL with instance_id/question")
    p_rollouts.add_argument("--out", required=True, help="rollout JSONL path")
    p_rollouts.add_argument("--force", action="store_true", help="overwrite existing output")
    _add_backend_flags(p_rollouts)
    p_rollouts.set_defaults(func=_cmd_rollouts)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HarnessError, RirsError) as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
