"""Command-line pipeline.

Subcommands:
  select        stage 1 only: pivot selection + greedy k-center retention
  decide        stage 2 only: cross-modal ratio probes + drop decision
  pipeline      both stages plus the FLOPs savings report
  flops         stage-ratio cost model with named presets
  verify-lemma  Monte Carlo covariance check of the orthogonality lemma
  oracle-check  greedy k-center vs. brute-force oracle over random instances

Exit codes: 0 success, 2 usage error, 3 data validation error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .costmodel import MODEL_PRESETS, preset_configs, stage_ratio_report
from .errors import EngineError, InternalInvariant
from .kcenter import greedy_kcenter, oracle_greedy
from .layout import CompressionPlan, layer_schedule, resolve_k
from .manifest import ManifestData, load_manifest
from .pivot import cls_attention, select_pivot
from .relevance import decide_drop_layer, decoding_attention_report
from .report import build_run_report, canonical_json, report_to_csv
from .theory import LemmaTrial, covariance_experiment

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _add_common_flags(p: argparse.ArgumentParser, with_plan: bool = True) -> None:
    p.add_argument("--manifest", required=True, help="path to the manifest JSON")
    if with_plan:
        group = p.add_mutually_exclusive_group()
        group.add_argument("--ratio", type=float, help="fraction of visual tokens to retain")
        group.add_argument("--k", type=int, help="absolute number of tokens to retain")
    p.add_argument("--tau", type=float, default=None,
                   help="cross-modal ratio threshold (default 0.03 or manifest value)")
    p.add_argument("--schedule", default=None,
                   help="'default' (fractional depths from the manifest layer count) "
                        "or a comma-separated list of layer indices")
    p.add_argument("--seed", type=int, default=0, help="seed echoed into the report")
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _parse_schedule(spec: str, plan: CompressionPlan) -> tuple[int, ...]:
    if spec == "default":
        if plan.num_layers is None:
            raise EngineError("--schedule default requires num_layers in the manifest plan")
        return tuple(layer_schedule(plan.num_layers))
    try:
        return tuple(int(x) for x in spec.split(","))
    except ValueError:
        raise EngineError(f"--schedule: cannot parse {spec!r}") from None


def _effective_plan(md: ManifestData, args) -> CompressionPlan:
    plan = md.plan
    updates: dict = {}
    if getattr(args, "ratio", None) is not None:
        updates["retain_ratio"] = args.ratio
        updates["retain_k"] = None
    if getattr(args, "k", None) is not None:
        updates["retain_k"] = args.k
        updates["retain_ratio"] = None
    if args.tau is not None:
        updates["tau"] = args.tau
    if args.schedule is not None:
        updates["schedule"] = _parse_schedule(args.schedule, plan)
    return replace(plan, **updates) if updates else plan


def _run_stage1(md: ManifestData, plan: CompressionPlan):
    if not md.has_stage1_inputs():
        raise EngineError("stage 1 requires cls_vector, wq and wk entries in the manifest")
    attn = cls_attention(md.cls_vector, md.visual_embeddings, md.wq, md.wk, md.layout)
    pivot = select_pivot(attn, md.layout)
    k = resolve_k(plan, md.layout.visual_len)
    return greedy_kcenter(md.visual_embeddings, pivot, k)


def _run_stage2(md: ManifestData, plan: CompressionPlan):
    schedule = plan.resolved_schedule()
    return decide_drop_layer(md.trace, md.layout, schedule, plan.tau)


def _emit(report: dict, args) -> None:
    text = canonical_json(report) if args.report == "json" else report_to_csv(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plan_echo(plan: CompressionPlan) -> dict:
    return plan.to_dict()


def cmd_select(args) -> int:
    md = load_manifest(args.manifest)
    plan = _effective_plan(md, args)
    retention = _run_stage1(md, plan)
    report = build_run_report(
        command="select", seed=args.seed,
        config={"manifest": str(md.path), "plan": _plan_echo(plan)},
        retention=retention)
    _emit(report, args)
    return EXIT_OK


def cmd_decide(args) -> int:
    md = load_manifest(args.manifest)
    plan = _effective_plan(md, args)
    decision = _run_stage2(md, plan)
    decode_report = decoding_attention_report(md.trace, md.layout) if md.decode_rows else None
    report = build_run_report(
        command="decide", seed=args.seed,
        config={"manifest": str(md.path), "plan": _plan_echo(plan)},
        decision=decision, decode_report=decode_report)
    _emit(report, args)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    md = load_manifest(args.manifest)
    plan = _effective_plan(md, args)
    retention = _run_stage1(md, plan)

    warnings: list[str] = []
    decision = None
    if md.has_stage2_inputs():
        decision = _run_stage2(md, plan)
    else:
        warnings.append("stage 2 skipped: manifest carries no attention_layer_k entries")

    layout = md.layout
    reduced = layout.system_len + len(retention) + layout.text_len
    enc_cfg, llm_cfg = preset_configs(args.preset, seq_len=layout.seq_len, out_len=args.decode_len)
    flops = stage_ratio_report(enc_cfg, llm_cfg, reduced_seq_len=reduced)

    decode_report = decoding_attention_report(md.trace, layout) if md.decode_rows else None
    report = build_run_report(
        command="pipeline", seed=args.seed,
        config={"manifest": str(md.path), "plan": _plan_echo(plan), "preset": args.preset,
                "decode_len": args.decode_len},
        retention=retention, decision=decision, flops=flops,
        decode_report=decode_report, warnings=warnings)
    _emit(report, args)
    return EXIT_OK


def cmd_flops(args) -> int:
    enc_cfg, llm_cfg = preset_configs(
        args.preset, seq_len=args.n, out_len=args.decode_len, encoder_seq_len=args.enc_n)
    reduced = args.reduced_n
    flops = stage_ratio_report(enc_cfg, llm_cfg, reduced_seq_len=reduced)
    report = build_run_report(
        command="flops", seed=args.seed,
        config={
            "preset": args.preset,
            "encoder": {"layers": enc_cfg.layers, "hidden": enc_cfg.hidden,
                        "ffn": enc_cfg.ffn, "seq_len": enc_cfg.seq_len},
            "llm": {"layers": llm_cfg.layers, "hidden": llm_cfg.hidden,
                    "ffn": llm_cfg.ffn, "seq_len": llm_cfg.seq_len, "out_len": llm_cfg.out_len},
        },
        flops=flops)
    _emit(report, args)
    return EXIT_OK


def cmd_verify_lemma(args) -> int:
    trial = LemmaTrial(
        n_visual=args.visual_n, n_text=args.text_m, ambient_dim=args.dim,
        visual_subdim=args.subspace, text_subdim=args.subspace,
        kernel=args.kernel, seed=args.seed)
    result = covariance_experiment(
        trial, args.trials,
        negative_control=args.negative_control,
        bootstrap_resamples=args.bootstrap)
    report = {"engine_version": __version__, "command": "verify-lemma", **result}
    _emit(report, args)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    start = time.monotonic()
    mismatches = 0
    for _ in range(args.instances):
        n = int(rng.integers(2, args.max_n + 1))
        d = int(rng.integers(2, args.max_d + 1))
        v = rng.standard_normal((n, d)).astype(np.float32)
        pivot = int(rng.integers(0, n))
        # k = n covers every smaller k: greedy selections are prefix-stable.
        fast = greedy_kcenter(v, pivot, n)
        slow = oracle_greedy(v, pivot, n)
        if fast.indices != slow.indices:
            mismatches += 1
    elapsed = time.monotonic() - start
    report = {
        "engine_version": __version__,
        "command": "oracle-check",
        "instances": args.instances,
        "max_n": args.max_n,
        "max_d": args.max_d,
        "seed": args.seed,
        "mismatches": mismatches,
        "elapsed_seconds": elapsed,
        "ok": mismatches == 0,
    }
    _emit(report, args)
    if mismatches:
        raise InternalInvariant(f"oracle-check: {mismatches} mismatching instances")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vtcomp",
        description="Two-stage visual-token compression engine")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="stage 1: diversity-driven token retention")
    _add_common_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("decide", help="stage 2: relevance-driven drop decision")
    _add_common_flags(p, with_plan=False)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("pipeline", help="both stages plus the FLOPs savings report")
    _add_common_flags(p)
    p.add_argument("--preset", default="llava-next-7b", choices=sorted(MODEL_PRESETS))
    p.add_argument("--decode-len", type=int, default=20)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("flops", help="stage-ratio cost model with presets")
    p.add_argument("--preset", default="llava-next-7b", choices=sorted(MODEL_PRESETS))
    p.add_argument("--n", type=int, default=None, help="LLM input length")
    p.add_argument("--decode-len", type=int, default=None, help="LLM output length")
    p.add_argument("--enc-n", type=int, default=None, help="override encoder sequence length")
    p.add_argument("--reduced-n", type=int, default=None,
                   help="reduced LLM input length for the savings fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("verify-lemma", help="Monte Carlo covariance check")
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--visual-n", type=int, default=8)
    p.add_argument("--text-m", type=int, default=4)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--subspace", type=int, default=4)
    p.add_argument("--kernel", choices=("cosine", "shifted"), default="cosine")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--negative-control", action="store_true",
                   help="break orthogonality on purpose (shared basis + shared tokens)")
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify_lemma)

    p = sub.add_parser("oracle-check", help="greedy vs. brute-force oracle equivalence")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-n", type=int, default=64)
    p.add_argument("--max-d", type=int, default=16)
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EngineError as e:
        print(f"vtcomp {args.command}: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except InternalInvariant as e:
        print(f"vtcomp {args.command}: internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
