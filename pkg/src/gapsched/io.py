"""JSON (de)serialization for DAGs, platforms and schedules.

Rationals are written as JSON integers when whole and as ``"p/q"`` strings
otherwise; readers also accept plain floats. Unknown keys are rejected.
Field reference: SCHEMA.md.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema

from .heft import CycleWindow, ScheduleEntry
from .periodic import Failure, HyperSchedule
from .platform import EventQueue, Platform, VmDescriptor
from .workload import DagSpec, EdgeSpec, QualityVersion, TaskInstance, TaskSpec


class SchemaError(ValueError):
    """Input document does not parse or does not match its schema."""

    def __init__(self, source: str, where: str, message: str):
        self.source = source
        self.where = where
        super().__init__(f"{source}: {where}: {message}")


_RATIONAL = {
    "oneOf": [
        {"type": "number", "minimum": 0},
        {"type": "string", "pattern": r"^\s*\d+(\s*/\s*[1-9]\d*)?\s*$"},
    ]
}
_TICK = {"type": "integer", "minimum": 0}
_POS = {"type": "integer", "minimum": 1}
_ID = {"type": "string", "minLength": 1}


def _obj(props: dict, required: Sequence[str]) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


DAG_SCHEMA = _obj(
    {
        "dag_id": _ID,
        "period": _POS,
        "release": _TICK,
        "tasks": {
            "type": "array",
            "items": _obj(
                {
                    "id": _ID,
                    "rewards": {"type": "array", "items": _RATIONAL, "minItems": 1},
                    "exec_time": {
                        "type": "object",
                        "additionalProperties": {"type": "array", "items": _POS, "minItems": 1},
                    },
                },
                ["id", "rewards", "exec_time"],
            ),
        },
        "edges": {
            "type": "array",
            "items": _obj({"src": _ID, "dst": _ID, "data_volume": _RATIONAL}, ["src", "dst"]),
        },
    },
    ["dag_id", "period", "tasks"],
)

PLATFORM_SCHEMA = _obj(
    {
        "background_period": _POS,
        "vms": {"type": "array", "minItems": 1, "items": _obj({"id": _ID, "host": {"type": "string"}}, ["id"])},
        "links": {
            "type": "array",
            "items": _obj({"a": _ID, "b": _ID, "bandwidth": _RATIONAL}, ["a", "b", "bandwidth"]),
        },
        "idle": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {"type": "array", "items": [_TICK, _POS], "minItems": 2, "maxItems": 2},
            },
        },
    },
    ["background_period", "vms", "links", "idle"],
)

_ENTRY = _obj(
    {
        "instance_id": _ID,
        "dag_id": _ID,
        "task_id": _ID,
        "cycle": _TICK,
        "vm": _ID,
        "level": _POS,
        "start": _TICK,
        "finish": _TICK,
    },
    ["instance_id", "dag_id", "task_id", "cycle", "vm", "level", "start", "finish"],
)

SCHEDULE_SCHEMA = _obj(
    {
        "hyperperiod": _POS,
        "horizon": _POS,
        "repetition_factor": _POS,
        "entries": {"type": "array", "items": _ENTRY},
        "base_entries": {"type": "array", "items": _ENTRY},
        "windows": {
            "type": "array",
            "items": _obj({"dag_id": _ID, "cycle": _TICK, "start": _TICK, "end": _TICK}, ["dag_id", "cycle", "start", "end"]),
        },
        "last_end": {"type": "object", "additionalProperties": _TICK},
        "failures": {
            "type": "array",
            "items": _obj({"dag_id": _ID, "cycle": _TICK, "reason": {"type": "string"}}, ["dag_id", "cycle", "reason"]),
        },
    },
    ["hyperperiod", "horizon", "entries", "windows", "failures"],
)


def rational_out(x: Fraction) -> Any:
    x = Fraction(x)
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def rational_in(x: Any) -> Fraction:
    if isinstance(x, str):
        return Fraction(x.replace(" ", ""))
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _check(doc: Any, schema: dict, source: str) -> None:
    err = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(schema).iter_errors(doc))
    if err is not None:
        where = "$" + "".join(f"[{p!r}]" if isinstance(p, str) else f"[{p}]" for p in err.absolute_path)
        raise SchemaError(source, where, err.message)


def load_json(path: str | Path) -> Any:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), f"line {exc.lineno} column {exc.colno}", exc.msg) from None


def dump_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# DAG ------------------------------------------------------------------------

def dag_to_dict(dag: DagSpec) -> dict:
    return {
        "dag_id": dag.dag_id,
        "period": dag.period,
        "release": dag.release,
        "tasks": [
            {
                "id": t.task_id,
                "rewards": [rational_out(v.reward) for v in t.versions],
                "exec_time": {vm: list(ts) for vm, ts in t.exec_time.items()},
            }
            for t in dag.tasks
        ],
        "edges": [{"src": e.src, "dst": e.dst, "data_volume": rational_out(e.data_volume)} for e in dag.edges],
    }


def dag_from_dict(doc: Any, source: str = "<dag>") -> DagSpec:
    _check(doc, DAG_SCHEMA, source)
    tasks = tuple(
        TaskSpec(
            t["id"],
            {vm: tuple(ts) for vm, ts in t["exec_time"].items()},
            tuple(QualityVersion(i + 1, rational_in(r)) for i, r in enumerate(t["rewards"])),
        )
        for t in doc["tasks"]
    )
    edges = tuple(EdgeSpec(e["src"], e["dst"], rational_in(e.get("data_volume", 0))) for e in doc.get("edges", []))
    return DagSpec(doc["dag_id"], tasks, edges, doc["period"], doc.get("release", 0))


# Platform -------------------------------------------------------------------

def platform_to_dict(platform: Platform) -> dict:
    return {
        "background_period": platform.background_period,
        "vms": [{"id": vm.vm_id, "host": vm.host_id} for vm in platform.vms],
        "links": [
            {"a": a, "b": b, "bandwidth": rational_out(bw)} for (a, b), bw in sorted(platform.bandwidth.items())
        ],
        "idle": {vm: [list(p) for p in platform.queues[vm].pairs()] for vm in platform.vm_ids},
    }


def platform_from_dict(doc: Any, source: str = "<platform>") -> Platform:
    _check(doc, PLATFORM_SCHEMA, source)
    vms = tuple(VmDescriptor(v["id"], v.get("host", "")) for v in doc["vms"])
    idle = doc["idle"]
    for vm in idle:
        if vm not in {v.vm_id for v in vms}:
            raise SchemaError(source, f"$['idle'][{vm!r}]", "idle pattern for an unknown VM")
    try:
        return Platform(
            vms=vms,
            bandwidth={(l["a"], l["b"]): rational_in(l["bandwidth"]) for l in doc["links"]},
            queues={v.vm_id: EventQueue.from_pairs(v.vm_id, idle.get(v.vm_id, [])) for v in vms},
            background_period=doc["background_period"],
        )
    except ValueError as exc:
        raise SchemaError(source, "$", str(exc)) from None


# Schedule -------------------------------------------------------------------

def _entry_out(e: ScheduleEntry) -> dict:
    return {
        "instance_id": e.instance.instance_id,
        "dag_id": e.instance.dag_id,
        "task_id": e.instance.source_task,
        "cycle": e.instance.cycle_index,
        "vm": e.vm,
        "level": e.level,
        "start": e.start,
        "finish": e.finish,
    }


def _entry_in(d: dict) -> ScheduleEntry:
    inst = TaskInstance(d["instance_id"], d["task_id"], d["dag_id"], d["cycle"])
    return ScheduleEntry(inst, d["vm"], d["level"], d["start"], d["finish"])


def schedule_to_dict(hs: HyperSchedule) -> dict:
    return {
        "hyperperiod": hs.hyperperiod,
        "horizon": hs.horizon,
        "repetition_factor": hs.repetition_factor,
        "entries": [_entry_out(e) for e in hs.entries],
        "base_entries": [_entry_out(e) for e in hs.base_entries],
        "windows": [
            {"dag_id": d, "cycle": k, "start": w.start, "end": w.end} for (d, k), w in sorted(hs.windows.items())
        ],
        "last_end": dict(sorted(hs.per_dag_last_end.items())),
        "failures": [{"dag_id": f.dag_id, "cycle": f.cycle_index, "reason": f.reason} for f in hs.failures],
    }


def schedule_from_dict(doc: Any, source: str = "<schedule>") -> HyperSchedule:
    _check(doc, SCHEDULE_SCHEMA, source)
    return HyperSchedule(
        hyperperiod=doc["hyperperiod"],
        horizon=doc["horizon"],
        entries=tuple(_entry_in(d) for d in doc["entries"]),
        windows={(w["dag_id"], w["cycle"]): CycleWindow(w["start"], w["end"]) for w in doc["windows"]},
        per_dag_last_end=dict(doc.get("last_end", {})),
        failures=tuple(Failure(f["dag_id"], f["cycle"], f["reason"]) for f in doc["failures"]),
        base_entries=tuple(_entry_in(d) for d in doc.get("base_entries", [])),
        repetition_factor=doc.get("repetition_factor", 1),
    )


def read_dag(path: str | Path) -> DagSpec:
    return dag_from_dict(load_json(path), str(path))


def read_platform(path: str | Path) -> Platform:
    return platform_from_dict(load_json(path), str(path))


def read_schedule(path: str | Path) -> HyperSchedule:
    return schedule_from_dict(load_json(path), str(path))


GANTT_COLUMNS = ["vm", "start", "finish", "dag", "task", "level", "origin"]


def gantt_rows(hs: HyperSchedule, platform: Platform) -> list[list]:
    """Background busy intervals and scheduled entries over ``[0, horizon)``."""
    rows = []
    for vm, queue in platform.tiled_queues(hs.horizon).items():
        cursor = 0
        for s, d in queue.pairs():
            if s > cursor:
                rows.append([vm, cursor, s, "", "", "", "background"])
            cursor = s + d
        if cursor < hs.horizon:
            rows.append([vm, cursor, hs.horizon, "", "", "", "background"])
    for e in hs.entries:
        rows.append([e.vm, e.start, e.finish, e.instance.dag_id, e.instance.source_task, e.level, "scheduled"])
    order = {vm: i for i, vm in enumerate(platform.vm_ids)}
    rows.sort(key=lambda r: (order.get(r[0], len(order)), r[1], r[6]))
    return rows


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
