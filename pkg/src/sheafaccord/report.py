"""Report assembly and rendering.

Reports are built once as plain dicts; the JSON and text renderings are both
produced from that dict so they cannot drift apart.
"""
from __future__ import annotations

import json

from .analysis import Coalition, ConflictWitness, ReconciliationReport, Verdict
from .lattice import INF, IntervalType, Value
from .theory import Box

DEGREE_NOTE = "non-canonical diagnostic: 1 - largest coalition / theories"


def value_json(v: Value) -> dict:
    if v.payload is None:
        payload = None
    elif isinstance(v.type, IntervalType):
        lo, hi = v.payload
        payload = [lo, None if hi == INF else hi]
    else:
        payload = v.payload
    return {"type": v.type.name, "payload": payload}


def value_text(d: dict) -> str:
    p = d["payload"]
    if p is None:
        return "⊥"
    if isinstance(p, list):
        return f"[{p[0]},{'inf' if p[1] is None else p[1]}]"
    return str(p)


def box_json(b: Box, show_truth: bool) -> list:
    return [value_json(v) for v in (b.slots if show_truth else b.generator)]


def witness_json(w: ConflictWitness) -> dict:
    return {
        "theories": list(w.theories),
        "slot": w.slot_name,
        "values": [value_json(v) for v in w.values],
        "overlap": [{"slot": n, "value": value_json(v)} for n, v in w.overlap],
    }


def coalition_json(c: Coalition, show_truth: bool) -> dict:
    return {"members": list(c.members), "sections": [box_json(b, show_truth) for b in c.sections]}


def check_report(corpus, verdict: Verdict, show_truth: bool) -> dict:
    preds = []
    for p in verdict.predicates:
        preds.append(
            {
                "name": p.predicate,
                "verdict": p.status.label,
                "theories": list(p.theories),
                "sections": [box_json(b, show_truth) for b in p.sections],
                "witnesses": [witness_json(w) for w in p.witnesses],
                "degree": str(p.degree),
                "coalitions": [coalition_json(c, show_truth) for c in p.coalitions],
            }
        )
    return {
        "command": "check",
        "corpus": list(corpus.sources),
        "mode": verdict.mode,
        "verdict": verdict.status.label,
        "degree_note": DEGREE_NOTE,
        "predicates": preds,
    }


def reconcile_report(corpus, rec: ReconciliationReport, show_truth: bool) -> dict:
    return {
        "command": "reconcile",
        "corpus": list(corpus.sources),
        "mode": rec.mode,
        "degree_note": DEGREE_NOTE,
        "predicates": [
            {
                "name": p.predicate,
                "dominant": [box_json(b, show_truth) for b in p.dominant],
                "coalitions": [coalition_json(c, show_truth) for c in p.coalitions],
                "degree": str(p.degree),
            }
            for p in rec.predicates
        ],
    }


def sections_report(corpus, mode: str, nodes, per_predicate, show_truth: bool) -> dict:
    return {
        "command": "sections",
        "corpus": list(corpus.sources),
        "mode": mode,
        "nodes": list(nodes),
        "predicates": [
            {
                "name": pred,
                "sections": [box_json(b, show_truth) for b in secs],
                "note": "" if secs else "no section",
            }
            for pred, secs in per_predicate
        ],
    }


def verify_report(corpus, results) -> dict:
    sheaves = []
    for spec, check, sections in results:
        sheaves.append(
            {
                "name": spec.name,
                "ok": check.ok,
                "violations": [
                    {
                        "triple": list(v.triple),
                        "element": v.element,
                        "direct": v.direct,
                        "composed": v.composed,
                    }
                    for v in check.violations
                ],
                "global_sections": [[[n, e] for n, e in s.assignment] for s in sections],
            }
        )
    return {"command": "verify-sheaf", "corpus": list(corpus.sources), "sheaves": sheaves}


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def _tuple_text(pred: str, values: list) -> str:
    return f"{pred}({', '.join(value_text(v) for v in values)})"


def _coalition_lines(pred, coalitions, indent="  ") -> list[str]:
    lines = []
    for c in coalitions:
        secs = "; ".join(_tuple_text(pred, s) for s in c["sections"]) or "(none)"
        lines.append(f"{indent}coalition {{{','.join(c['members'])}}}: {secs}")
    return lines


def _witness_text(w: dict) -> str:
    clash = " vs ".join(value_text(v) for v in w["values"])
    where = ", ".join(f"{o['slot']}={value_text(o['value'])}" for o in w["overlap"])
    s = f"{{{','.join(w['theories'])}}} {w['slot']}: {clash}"
    return s + (f" (on {where})" if where else "")


def _oracle_text(o: dict) -> str:
    state = "consistent" if o["consistent"] else "inconsistent"
    return f"{state}, {'agrees' if o['agrees'] else 'DISAGREES'} with the sheaf verdict"


def render_text(report: dict) -> str:
    cmd = report["command"]
    lines = []
    if "corpus" in report:
        lines.append(f"corpus: {', '.join(report['corpus'])}")
    if "mode" in report:
        lines.append(f"mode: {report['mode']}")
    if cmd == "check":
        for p in report["predicates"]:
            name = p["name"]
            lines.append(f"predicate {name}: {p['verdict'].upper()}")
            lines.append(f"  theories: {', '.join(p['theories'])}")
            for s in p["sections"]:
                lines.append(f"  section: {_tuple_text(name, s)}")
            for w in p["witnesses"]:
                lines.append(f"  witness: {_witness_text(w)}")
            if p["verdict"] == "contradiction":
                lines.extend(_coalition_lines(name, p["coalitions"]))
            lines.append(f"  degree: {p['degree']}")
            if "oracle" in p:
                lines.append(f"  oracle: {_oracle_text(p['oracle'])}")
        lines.append(f"degree note: {report['degree_note']}")
        lines.append(f"verdict: {report['verdict'].upper()}")
    elif cmd == "reconcile":
        for p in report["predicates"]:
            name = p["name"]
            lines.append(f"predicate {name}:")
            for s in p["dominant"]:
                lines.append(f"  dominant: {_tuple_text(name, s)}")
            lines.extend(_coalition_lines(name, p["coalitions"]))
            lines.append(f"  degree: {p['degree']}")
            if "oracle" in p:
                lines.append(f"  oracle: {_oracle_text(p['oracle'])}")
        lines.append(f"degree note: {report['degree_note']}")
    elif cmd == "sections":
        lines.append(f"nodes: {{{','.join(report['nodes'])}}}")
        for p in report["predicates"]:
            name = p["name"]
            lines.append(f"predicate {name}:")
            for s in p["sections"]:
                lines.append(f"  section: {_tuple_text(name, s)}")
            if p["note"]:
                lines.append(f"  {p['note']}")
        if not report["predicates"]:
            lines.append("no shared predicate: no section")
    elif cmd == "verify-sheaf":
        for s in report["sheaves"]:
            lines.append(f"generic_sheaf {s['name']}: {'ok' if s['ok'] else 'NOT A SHEAF'}")
            for v in s["violations"]:
                x, y, z = v["triple"]
                lines.append(
                    f"  violation ({x},{y},{z}) at {v['element']}: "
                    f"R[{x}<={z}] gives {v['direct']}, R[{y}<={z}].R[{x}<={y}] gives {v['composed']}"
                )
            for sec in s["global_sections"]:
                lines.append("  global section: " + ", ".join(f"{n}={e}" for n, e in sec))
    return "\n".join(lines) + "\n"
