"""Canonical report serialization.

Reports must be byte-identical across identical runs, so JSON is emitted
by a fixed-order serializer of our own: keys keep insertion order, floats
print with 9 significant digits, and the file ends with a single newline.
CSV output carries one row per probed layer plus summary rows.
"""

from __future__ import annotations

import io
import json
from typing import Any

from . import __version__
from .costmodel import FlopsReport
from .kcenter import RetentionSet
from .relevance import PruneDecision


def _render(value: Any, out: list[str]) -> None:
    if isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format(value, ".9g"))
    elif value is None:
        out.append("null")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        out.append("{")
        for i, (k, v) in enumerate(value.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(":")
            _render(v, out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, v in enumerate(value):
            if i:
                out.append(",")
            _render(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(obj: Any) -> str:
    out: list[str] = []
    _render(obj, out)
    out.append("\n")
    return "".join(out)


def build_run_report(
    *,
    command: str,
    seed: int,
    config: dict,
    retention: RetentionSet | None = None,
    pivot: int | None = None,
    decision: PruneDecision | None = None,
    flops: FlopsReport | None = None,
    decode_report: list[dict] | None = None,
    warnings: list[str] | None = None,
) -> dict:
    """Assemble the run report dict in its canonical key order."""
    report: dict = {
        "engine_version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
    }
    if retention is not None:
        report["retention"] = {
            "k": len(retention.indices),
            "pivot": retention.indices[0],
            "indices": list(retention.indices),
            "trace": [{"index": i, "max_similarity": s} for i, s in retention.trace],
        }
    if pivot is not None and retention is None:
        report["pivot"] = pivot
    if decision is not None:
        report["prune_decision"] = {
            "drop_layer": decision.drop_layer,
            "tau": decision.tau,
            "probed": [
                {"layer": layer, "text_to_visual": tv, "visual_to_text": vt}
                for layer, tv, vt in decision.probed
            ],
        }
    if flops is not None:
        report["flops"] = flops.to_dict()
    if decode_report is not None:
        report["decoding_attention"] = decode_report
    if warnings:
        report["warnings"] = list(warnings)
    return report


def report_to_csv(report: dict) -> str:
    """Flat CSV rendering: probe rows first, then summary key/value rows."""
    buf = io.StringIO()
    buf.write("section,key,value_1,value_2\n")

    def fmt(v: Any) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return format(v, ".9g")
        if v is None:
            return ""
        return str(v)

    decision = report.get("prune_decision")
    if decision:
        for probe in decision["probed"]:
            buf.write(f"probe,layer_{probe['layer']},{fmt(probe['text_to_visual'])},"
                      f"{fmt(probe['visual_to_text'])}\n")
        buf.write(f"summary,drop_layer,{fmt(decision['drop_layer'])},\n")
        buf.write(f"summary,tau,{fmt(decision['tau'])},\n")
    retention = report.get("retention")
    if retention:
        buf.write(f"summary,k,{retention['k']},\n")
        buf.write(f"summary,pivot,{retention['pivot']},\n")
        buf.write("summary,indices,\"" + " ".join(str(i) for i in retention["indices"]) + "\",\n")
    flops = report.get("flops")
    if flops:
        for key, value in flops.items():
            buf.write(f"summary,flops_{key},{fmt(value)},\n")
    for entry in report.get("decoding_attention", []) or []:
        buf.write(f"decode,layer_{entry['layer']},{fmt(entry['to_system'])},"
                  f"{fmt(entry['to_visual'])}\n")
    buf.write(f"summary,engine_version,{report['engine_version']},\n")
    buf.write(f"summary,seed,{report['seed']},\n")
    return buf.getvalue()
