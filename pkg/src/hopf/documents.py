"""Canonical JSON documents for every domain type.

One envelope shape wraps all payloads.  Serialization is canonical: sorted
keys, no whitespace, floats printed with 17 significant digits, one
trailing newline; saving the same value twice is byte-identical.  Decoding
validates eagerly and reports the offending field by path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable

from .core import (
    Agent,
    AxisMismatch,
    DecPomdp,
    DetPomdp,
    DocumentError,
    DomainError,
    FiniteSet,
    InvariantViolation,
    PartySlot,
    PartySpace,
    PreconditionError,
    ProcessFunction1,
    ProcessFunctionN,
    TableFunction,
    Trajectory,
    UfpStatus,
    UfpWitness1,
    UfpWitnessN,
)
from .search import ScoredStrategy, SearchCounts, SearchReport, StrategyShape
from .verify import CombOrder

FORMAT_VERSION = "1"
KINDS = (
    "pomdp",
    "dec_pomdp",
    "agent",
    "process_function_1",
    "process_function_n",
    "search_report",
    "trajectory",
)

_CONSTRUCTION_ERRORS = (
    InvariantViolation,
    AxisMismatch,
    DomainError,
    PreconditionError,
    ValueError,
    TypeError,
)


@dataclass(frozen=True)
class DocumentEnvelope:
    """A typed document: version tag, payload kind, and the in-memory
    payload object."""

    kind: str
    payload: Any
    format_version: str = FORMAT_VERSION

    def __post_init__(self) -> None:
        if self.format_version != FORMAT_VERSION:
            raise DocumentError(
                f"format_version: unknown version {self.format_version!r}"
            )
        if self.kind not in KINDS:
            raise DocumentError(f"kind: unknown document kind {self.kind!r}")


# ---------------------------------------------------------------------------
# canonical writer
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    """17-significant-digit decimal form, always with an explicit fraction
    or exponent so the value reads back as a float."""
    if not math.isfinite(x):
        raise DocumentError(f"cannot serialize non-finite float {x!r}")
    text = format(float(x), ".17g")
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def _write_canonical(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_float(value))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _write_canonical(item, out)
        out.append("]")
    elif isinstance(value, dict):
        out.append("{")
        for i, key in enumerate(sorted(value)):
            if not isinstance(key, str):
                raise DocumentError(f"non-string object key {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _write_canonical(value[key], out)
        out.append("}")
    else:
        raise DocumentError(f"cannot serialize value of type {type(value).__name__}")


def canonical_text(jsonable: Any) -> str:
    out: list[str] = []
    _write_canonical(jsonable, out)
    out.append("\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# encoders: domain objects -> jsonable payloads
# ---------------------------------------------------------------------------


def _enc_fs(fs: FiniteSet) -> dict:
    return {"size": fs.size, "labels": None if fs.labels is None else list(fs.labels)}


def _enc_entries(table: TableFunction) -> list[int]:
    return [component for entry in table.entries for component in entry]


def _enc_pomdp(env: DetPomdp) -> dict:
    return {
        "states": _enc_fs(env.states),
        "actions": _enc_fs(env.actions),
        "observations": _enc_fs(env.observations),
        "transition": _enc_entries(env.transition),
        "observation": _enc_entries(env.observation),
        "rewards": [float(r) for r in env.rewards],
    }


def _enc_dec_pomdp(env: DecPomdp) -> dict:
    return {
        "parties": [
            {
                "states": _enc_fs(p.states),
                "actions": _enc_fs(p.actions),
                "observations": _enc_fs(p.observations),
            }
            for p in env.parties
        ],
        "transition": _enc_entries(env.transition),
        "observation": _enc_entries(env.observation),
        "rewards": [float(r) for r in env.rewards],
        "factored_obs": None
        if env.factored_obs is None
        else [_enc_entries(t) for t in env.factored_obs],
    }


def _enc_agent(agent: Agent) -> dict:
    return {
        "memory": _enc_fs(agent.memory),
        "actions": _enc_fs(agent.actions),
        "observations": _enc_fs(agent.observations),
        "policy": _enc_entries(agent.policy),
        "update": _enc_entries(agent.update),
    }


def _enc_witness_1(w: UfpWitness1 | None) -> dict | None:
    if w is None:
        return None
    return {"p": w.p, "f": list(w.f), "solutions": list(w.solutions)}


def _enc_witness_n(w: UfpWitnessN | None) -> dict | None:
    if w is None:
        return None
    return {
        "p": w.p,
        "f": [list(f) for f in w.f],
        "solutions": [list(sol) for sol in w.solutions],
    }


def _enc_pf1(w: ProcessFunction1) -> dict:
    return {
        "past": _enc_fs(w.past),
        "obs": _enc_fs(w.obs),
        "future": _enc_fs(w.future),
        "act": _enc_fs(w.act),
        "table": _enc_entries(w.table),
        "status": w.status.value,
        "witness": _enc_witness_1(w.witness),
    }


def _enc_pfn(w: ProcessFunctionN) -> dict:
    return {
        "past": _enc_fs(w.past),
        "future": _enc_fs(w.future),
        "parties": [
            {"act": _enc_fs(slot.act), "obs": _enc_fs(slot.obs)} for slot in w.parties
        ],
        "table": _enc_entries(w.table),
        "status": w.status.value,
        "witness": _enc_witness_n(w.witness),
    }


def _enc_trajectory(t: Trajectory) -> dict:
    return {
        "memories": list(t.memories),
        "states": list(t.states),
        "rewards": [float(r) for r in t.rewards],
    }


def _enc_scored(s: ScoredStrategy) -> dict:
    return {
        "strategy": _enc_pfn(s.strategy),
        "value": float(s.value),
        "order": None if s.order is None else list(s.order.order),
    }


def _enc_report(r: SearchReport) -> dict:
    return {
        "shape": {
            "memory": r.shape.memory,
            "parties": [list(pair) for pair in r.shape.parties],
            "horizon": r.shape.horizon,
        },
        "environment_id": r.environment_id,
        "best_general": _enc_scored(r.best_general),
        "best_ordered": _enc_scored(r.best_ordered),
        "counts": {
            "total": r.counts.total,
            "valid": r.counts.valid,
            "ordered": r.counts.ordered,
        },
        "advantage": float(r.advantage),
        "gamma": float(r.gamma),
        "seed": r.seed,
        "budget": r.budget,
        "mode": r.mode,
    }


_ENCODERS: dict[str, Callable[[Any], dict]] = {
    "pomdp": _enc_pomdp,
    "dec_pomdp": _enc_dec_pomdp,
    "agent": _enc_agent,
    "process_function_1": _enc_pf1,
    "process_function_n": _enc_pfn,
    "search_report": _enc_report,
    "trajectory": _enc_trajectory,
}

_KIND_OF_TYPE: tuple[tuple[type, str], ...] = (
    (DetPomdp, "pomdp"),
    (DecPomdp, "dec_pomdp"),
    (Agent, "agent"),
    (ProcessFunction1, "process_function_1"),
    (ProcessFunctionN, "process_function_n"),
    (SearchReport, "search_report"),
    (Trajectory, "trajectory"),
)


def kind_of(obj: Any) -> str:
    for cls, kind in _KIND_OF_TYPE:
        if isinstance(obj, cls):
            return kind
    raise DocumentError(f"no document kind for objects of type {type(obj).__name__}")


def envelope_for(obj: Any) -> DocumentEnvelope:
    if isinstance(obj, DocumentEnvelope):
        return obj
    return DocumentEnvelope(kind=kind_of(obj), payload=obj)


def to_jsonable(doc: DocumentEnvelope) -> dict:
    encoder = _ENCODERS[doc.kind]
    return {
        "format_version": doc.format_version,
        "kind": doc.kind,
        "payload": encoder(doc.payload),
    }


def dumps_canonical(doc: DocumentEnvelope | Any) -> str:
    return canonical_text(to_jsonable(envelope_for(doc)))


def save(doc: DocumentEnvelope | Any, path) -> None:
    text = dumps_canonical(doc)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


# ---------------------------------------------------------------------------
# decoders: jsonable payloads -> domain objects
# ---------------------------------------------------------------------------


def _need(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise DocumentError(f"{path}: expected an object")
    if key not in obj:
        raise DocumentError(f"{path}.{key}: missing field")
    return obj[key]


def _as_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _as_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise DocumentError(f"{path}: expected an array")
    return value


def _as_int_list(value: Any, path: str) -> list[int]:
    return [_as_int(v, f"{path}[{i}]") for i, v in enumerate(_as_list(value, path))]


def _as_float_list(value: Any, path: str) -> list[float]:
    return [_as_float(v, f"{path}[{i}]") for i, v in enumerate(_as_list(value, path))]


def _dec_fs(value: Any, path: str) -> FiniteSet:
    size = _as_int(_need(value, "size", path), f"{path}.size")
    labels_raw = _need(value, "labels", path)
    labels = None
    if labels_raw is not None:
        items = _as_list(labels_raw, f"{path}.labels")
        labels = []
        for i, item in enumerate(items):
            if not isinstance(item, str):
                raise DocumentError(f"{path}.labels[{i}]: expected a string")
            labels.append(item)
        labels = tuple(labels)
    try:
        return FiniteSet(size, labels)
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_table(
    flat: Any,
    domain: tuple[FiniteSet, ...],
    codomain: tuple[FiniteSet, ...],
    path: str,
) -> TableFunction:
    values = _as_int_list(flat, path)
    width = len(codomain)
    rows = math.prod(s.size for s in domain)
    if len(values) != rows * width:
        raise DocumentError(
            f"{path}: flat table has {len(values)} integers, expected"
            f" {rows} rows x {width} components = {rows * width}"
        )
    entries = tuple(
        tuple(values[r * width : (r + 1) * width]) for r in range(rows)
    )
    try:
        return TableFunction(domain, codomain, entries)
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_pomdp(payload: Any, path: str) -> DetPomdp:
    states = _dec_fs(_need(payload, "states", path), f"{path}.states")
    actions = _dec_fs(_need(payload, "actions", path), f"{path}.actions")
    observations = _dec_fs(
        _need(payload, "observations", path), f"{path}.observations"
    )
    transition = _dec_table(
        _need(payload, "transition", path), (states, actions), (states,),
        f"{path}.transition",
    )
    observation = _dec_table(
        _need(payload, "observation", path), (states, actions), (observations,),
        f"{path}.observation",
    )
    rewards = _as_float_list(_need(payload, "rewards", path), f"{path}.rewards")
    try:
        return DetPomdp(
            states=states,
            actions=actions,
            observations=observations,
            transition=transition,
            observation=observation,
            rewards=tuple(rewards),
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_dec_pomdp(payload: Any, path: str) -> DecPomdp:
    parties_raw = _as_list(_need(payload, "parties", path), f"{path}.parties")
    parties = []
    for i, p in enumerate(parties_raw):
        ppath = f"{path}.parties[{i}]"
        parties.append(
            PartySpace(
                states=_dec_fs(_need(p, "states", ppath), f"{ppath}.states"),
                actions=_dec_fs(_need(p, "actions", ppath), f"{ppath}.actions"),
                observations=_dec_fs(
                    _need(p, "observations", ppath), f"{ppath}.observations"
                ),
            )
        )
    if not parties:
        raise DocumentError(f"{path}.parties: need at least one party")
    n_s = math.prod(p.states.size for p in parties)
    n_a = math.prod(p.actions.size for p in parties)
    n_o = math.prod(p.observations.size for p in parties)
    states, actions, observations = FiniteSet(n_s), FiniteSet(n_a), FiniteSet(n_o)
    transition = _dec_table(
        _need(payload, "transition", path), (states, actions), (states,),
        f"{path}.transition",
    )
    observation = _dec_table(
        _need(payload, "observation", path), (states, actions), (observations,),
        f"{path}.observation",
    )
    rewards = _as_float_list(_need(payload, "rewards", path), f"{path}.rewards")
    factored_raw = _need(payload, "factored_obs", path)
    factored = None
    if factored_raw is not None:
        tables = _as_list(factored_raw, f"{path}.factored_obs")
        if len(tables) != len(parties):
            raise DocumentError(
                f"{path}.factored_obs: {len(tables)} tables for {len(parties)} parties"
            )
        factored = tuple(
            _dec_table(
                flat,
                (states, parties[i].actions),
                (parties[i].observations,),
                f"{path}.factored_obs[{i}]",
            )
            for i, flat in enumerate(tables)
        )
    try:
        return DecPomdp(
            parties=tuple(parties),
            transition=transition,
            observation=observation,
            rewards=tuple(rewards),
            factored_obs=factored,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_agent(payload: Any, path: str) -> Agent:
    memory = _dec_fs(_need(payload, "memory", path), f"{path}.memory")
    actions = _dec_fs(_need(payload, "actions", path), f"{path}.actions")
    observations = _dec_fs(
        _need(payload, "observations", path), f"{path}.observations"
    )
    policy = _dec_table(
        _need(payload, "policy", path), (memory,), (actions,), f"{path}.policy"
    )
    update = _dec_table(
        _need(payload, "update", path),
        (memory, actions, observations),
        (memory,),
        f"{path}.update",
    )
    try:
        return Agent(
            memory=memory,
            actions=actions,
            observations=observations,
            policy=policy,
            update=update,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_status(value: Any, path: str) -> UfpStatus:
    if not isinstance(value, str):
        raise DocumentError(f"{path}: expected a status string")
    for status in UfpStatus:
        if status.value == value:
            return status
    raise DocumentError(f"{path}: unknown status {value!r}")


def _dec_witness_1(value: Any, path: str) -> UfpWitness1 | None:
    if value is None:
        return None
    return UfpWitness1(
        p=_as_int(_need(value, "p", path), f"{path}.p"),
        f=tuple(_as_int_list(_need(value, "f", path), f"{path}.f")),
        solutions=tuple(
            _as_int_list(_need(value, "solutions", path), f"{path}.solutions")
        ),
    )


def _dec_witness_n(value: Any, path: str) -> UfpWitnessN | None:
    if value is None:
        return None
    f_raw = _as_list(_need(value, "f", path), f"{path}.f")
    sol_raw = _as_list(_need(value, "solutions", path), f"{path}.solutions")
    return UfpWitnessN(
        p=_as_int(_need(value, "p", path), f"{path}.p"),
        f=tuple(
            tuple(_as_int_list(item, f"{path}.f[{i}]")) for i, item in enumerate(f_raw)
        ),
        solutions=tuple(
            tuple(_as_int_list(item, f"{path}.solutions[{i}]"))
            for i, item in enumerate(sol_raw)
        ),
    )


def _dec_pf1(payload: Any, path: str) -> ProcessFunction1:
    past = _dec_fs(_need(payload, "past", path), f"{path}.past")
    obs = _dec_fs(_need(payload, "obs", path), f"{path}.obs")
    future = _dec_fs(_need(payload, "future", path), f"{path}.future")
    act = _dec_fs(_need(payload, "act", path), f"{path}.act")
    table = _dec_table(
        _need(payload, "table", path), (past, obs), (future, act), f"{path}.table"
    )
    status = _dec_status(_need(payload, "status", path), f"{path}.status")
    witness = _dec_witness_1(_need(payload, "witness", path), f"{path}.witness")
    try:
        return ProcessFunction1(
            past=past,
            obs=obs,
            future=future,
            act=act,
            table=table,
            status=status,
            witness=witness,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_pfn(payload: Any, path: str) -> ProcessFunctionN:
    past = _dec_fs(_need(payload, "past", path), f"{path}.past")
    future = _dec_fs(_need(payload, "future", path), f"{path}.future")
    parties_raw = _as_list(_need(payload, "parties", path), f"{path}.parties")
    parties = tuple(
        PartySlot(
            act=_dec_fs(_need(p, "act", f"{path}.parties[{i}]"), f"{path}.parties[{i}].act"),
            obs=_dec_fs(_need(p, "obs", f"{path}.parties[{i}]"), f"{path}.parties[{i}].obs"),
        )
        for i, p in enumerate(parties_raw)
    )
    if not parties:
        raise DocumentError(f"{path}.parties: need at least one party")
    table = _dec_table(
        _need(payload, "table", path),
        (past, *(slot.obs for slot in parties)),
        (future, *(slot.act for slot in parties)),
        f"{path}.table",
    )
    status = _dec_status(_need(payload, "status", path), f"{path}.status")
    witness = _dec_witness_n(_need(payload, "witness", path), f"{path}.witness")
    try:
        return ProcessFunctionN(
            past=past,
            future=future,
            parties=parties,
            table=table,
            status=status,
            witness=witness,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_trajectory(payload: Any, path: str) -> Trajectory:
    memories = _as_int_list(_need(payload, "memories", path), f"{path}.memories")
    states = _as_int_list(_need(payload, "states", path), f"{path}.states")
    rewards = _as_float_list(_need(payload, "rewards", path), f"{path}.rewards")
    try:
        return Trajectory(
            memories=tuple(memories), states=tuple(states), rewards=tuple(rewards)
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


def _dec_scored(payload: Any, path: str) -> ScoredStrategy:
    strategy = _dec_pfn(_need(payload, "strategy", path), f"{path}.strategy")
    value = _as_float(_need(payload, "value", path), f"{path}.value")
    order_raw = _need(payload, "order", path)
    order = None
    if order_raw is not None:
        try:
            order = CombOrder(tuple(_as_int_list(order_raw, f"{path}.order")))
        except _CONSTRUCTION_ERRORS as exc:
            raise DocumentError(f"{path}.order: {exc}") from exc
    return ScoredStrategy(strategy=strategy, value=value, order=order)


def _dec_report(payload: Any, path: str) -> SearchReport:
    shape_raw = _need(payload, "shape", path)
    spath = f"{path}.shape"
    parties_raw = _as_list(_need(shape_raw, "parties", spath), f"{spath}.parties")
    pairs = []
    for i, pair in enumerate(parties_raw):
        values = _as_int_list(pair, f"{spath}.parties[{i}]")
        if len(values) != 2:
            raise DocumentError(
                f"{spath}.parties[{i}]: expected [actions, observations]"
            )
        pairs.append((values[0], values[1]))
    horizon_raw = _need(shape_raw, "horizon", spath)
    horizon = None if horizon_raw is None else _as_int(horizon_raw, f"{spath}.horizon")
    try:
        shape = StrategyShape(
            memory=_as_int(_need(shape_raw, "memory", spath), f"{spath}.memory"),
            parties=tuple(pairs),
            horizon=horizon,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{spath}: {exc}") from exc
    counts_raw = _need(payload, "counts", path)
    cpath = f"{path}.counts"
    try:
        counts = SearchCounts(
            total=_as_int(_need(counts_raw, "total", cpath), f"{cpath}.total"),
            valid=_as_int(_need(counts_raw, "valid", cpath), f"{cpath}.valid"),
            ordered=_as_int(_need(counts_raw, "ordered", cpath), f"{cpath}.ordered"),
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{cpath}: {exc}") from exc
    environment_id = _need(payload, "environment_id", path)
    if not isinstance(environment_id, str):
        raise DocumentError(f"{path}.environment_id: expected a string")
    mode = _need(payload, "mode", path)
    if not isinstance(mode, str):
        raise DocumentError(f"{path}.mode: expected a string")
    try:
        return SearchReport(
            shape=shape,
            environment_id=environment_id,
            best_general=_dec_scored(
                _need(payload, "best_general", path), f"{path}.best_general"
            ),
            best_ordered=_dec_scored(
                _need(payload, "best_ordered", path), f"{path}.best_ordered"
            ),
            counts=counts,
            advantage=_as_float(_need(payload, "advantage", path), f"{path}.advantage"),
            gamma=_as_float(_need(payload, "gamma", path), f"{path}.gamma"),
            seed=_as_int(_need(payload, "seed", path), f"{path}.seed"),
            budget=_as_int(_need(payload, "budget", path), f"{path}.budget"),
            mode=mode,
        )
    except _CONSTRUCTION_ERRORS as exc:
        raise DocumentError(f"{path}: {exc}") from exc


_DECODERS: dict[str, Callable[[Any, str], Any]] = {
    "pomdp": _dec_pomdp,
    "dec_pomdp": _dec_dec_pomdp,
    "agent": _dec_agent,
    "process_function_1": _dec_pf1,
    "process_function_n": _dec_pfn,
    "search_report": _dec_report,
    "trajectory": _dec_trajectory,
}


def from_jsonable(obj: Any) -> DocumentEnvelope:
    version = _need(obj, "format_version", "document")
    if version != FORMAT_VERSION:
        raise DocumentError(
            f"document.format_version: unknown version {version!r}"
        )
    kind = _need(obj, "kind", "document")
    if kind not in KINDS:
        raise DocumentError(f"document.kind: unknown document kind {kind!r}")
    payload = _need(obj, "payload", "document")
    decoded = _DECODERS[kind](payload, "payload")
    return DocumentEnvelope(kind=kind, payload=decoded)


def loads(text: str) -> DocumentEnvelope:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"document: not valid JSON ({exc})") from exc
    return from_jsonable(raw)


def load(path) -> DocumentEnvelope:
    with open(path, "r", encoding="utf-8") as handle:
        return loads(handle.read())
