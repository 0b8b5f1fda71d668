"""Trace documents: a stable JSON representation of label sequences,
plus replay.

A trace is the configuration it was produced under and the flat, ordered
list of atomic action labels leading from the initial state to the state
of interest. Replaying the labels through the transition relation
reproduces that state exactly; replay fails loudly if the labels do not
correspond to enabled transitions.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .cluster import (
    ActionLabel,
    Client,
    Crash,
    GlobalState,
    Recv,
    Send,
    Timeout,
    enabled_transitions,
    initial_state,
)
from .network import (
    AppendEntriesRequest,
    AppendEntriesResponse,
    NetMessage,
    Payload,
    RequestVoteRequest,
    RequestVoteResponse,
    Rpc,
)
from .types import Config, Entry, InjectedBug, NetworkModel


class ReplayError(ValueError):
    """A label sequence does not correspond to enabled transitions."""


def config_to_json(cfg: Config) -> dict:
    return {
        "servers": cfg.max_server_id,
        "max_term": cfg.max_term,
        "max_clients": cfg.max_client_interactions,
        "network": cfg.network_model.value,
        "inject_bug": cfg.injected_bug.value,
    }


def config_from_json(doc: dict) -> Config:
    return Config(
        max_server_id=doc["servers"],
        max_term=doc["max_term"],
        max_client_interactions=doc["max_clients"],
        network_model=NetworkModel(doc["network"]),
        injected_bug=InjectedBug(doc["inject_bug"]),
    )


def _rpc_to_json(rpc: Rpc) -> dict:
    if isinstance(rpc, RequestVoteRequest):
        return {
            "rpc": "RequestVoteRequest",
            "lastLogTerm": rpc.last_log_term,
            "lastLogIndex": rpc.last_log_index,
        }
    if isinstance(rpc, RequestVoteResponse):
        return {"rpc": "RequestVoteResponse", "voteGranted": rpc.vote_granted}
    if isinstance(rpc, AppendEntriesRequest):
        return {
            "rpc": "AppendEntriesRequest",
            "prevLogIndex": rpc.prev_log_index,
            "prevLogTerm": rpc.prev_log_term,
            "entries": [{"term": e.term} for e in rpc.entries],
            "commitIndex": rpc.commit_index,
        }
    return {"rpc": "AppendEntriesResponse", "success": rpc.success, "matchIndex": rpc.match_index}


def _rpc_from_json(doc: dict) -> Rpc:
    tag = doc["rpc"]
    if tag == "RequestVoteRequest":
        return RequestVoteRequest(doc["lastLogTerm"], doc["lastLogIndex"])
    if tag == "RequestVoteResponse":
        return RequestVoteResponse(doc["voteGranted"])
    if tag == "AppendEntriesRequest":
        return AppendEntriesRequest(
            doc["prevLogIndex"],
            doc["prevLogTerm"],
            tuple(Entry(e["term"]) for e in doc["entries"]),
            doc["commitIndex"],
        )
    if tag == "AppendEntriesResponse":
        return AppendEntriesResponse(doc["success"], doc["matchIndex"])
    raise ReplayError(f"unknown rpc tag {tag!r}")


def _payload_to_json(payload: Payload) -> dict:
    doc = {"term": payload.term}
    doc.update(_rpc_to_json(payload.rpc))
    return doc


def _payload_from_json(doc: dict) -> Payload:
    return Payload(doc["term"], _rpc_from_json(doc))


def label_to_json(label: ActionLabel) -> dict:
    if isinstance(label, Timeout):
        return {"action": "Timeout", "server": label.server, "kind": label.kind}
    if isinstance(label, Send):
        m = label.message
        return {
            "action": "Send",
            "from": m.sender,
            "to": m.dest,
            "payload": _payload_to_json(m.payload),
            "lost": label.lost,
        }
    if isinstance(label, Recv):
        m = label.message
        return {
            "action": "Recv",
            "from": m.sender,
            "to": m.dest,
            "payload": _payload_to_json(m.payload),
            "duplicated": label.duplicated,
        }
    if isinstance(label, Client):
        return {"action": "Client", "server": label.server}
    return {"action": "Crash", "server": label.server}


def label_from_json(doc: dict) -> ActionLabel:
    action = doc["action"]
    if action == "Timeout":
        return Timeout(doc["server"], doc["kind"])
    if action == "Send":
        return Send(
            NetMessage(doc["from"], doc["to"], _payload_from_json(doc["payload"])),
            doc["lost"],
        )
    if action == "Recv":
        return Recv(
            NetMessage(doc["from"], doc["to"], _payload_from_json(doc["payload"])),
            doc["duplicated"],
        )
    if action == "Client":
        return Client(doc["server"])
    if action == "Crash":
        return Crash(doc["server"])
    raise ReplayError(f"unknown action {action!r}")


def trace_to_json(cfg: Config, labels: Iterable[ActionLabel]) -> dict:
    return {"config": config_to_json(cfg), "steps": [label_to_json(l) for l in labels]}


def trace_from_json(doc: dict) -> tuple[Config, tuple[ActionLabel, ...]]:
    cfg = config_from_json(doc["config"])
    return cfg, tuple(label_from_json(step) for step in doc["steps"])


def replay(cfg: Config, labels: Sequence[ActionLabel]) -> GlobalState:
    """Drive the transition relation with a flat label sequence.

    At each state, exactly one enabled transition's label sequence must
    match the next labels; label sequences of sibling transitions never
    prefix each other, so the match is unambiguous.
    """
    state = initial_state(cfg)
    pos = 0
    while pos < len(labels):
        for transition in enabled_transitions(state, cfg):
            width = len(transition.labels)
            if tuple(labels[pos : pos + width]) == transition.labels:
                state = transition.target
                pos += width
                break
        else:
            raise ReplayError(f"no enabled transition matches trace at step {pos}")
    return state


def format_rpc(rpc: Rpc) -> str:
    if isinstance(rpc, RequestVoteRequest):
        return f"RequestVoteRequest(lastLogTerm={rpc.last_log_term},lastLogIndex={rpc.last_log_index})"
    if isinstance(rpc, RequestVoteResponse):
        return f"RequestVoteResponse(granted={rpc.vote_granted})"
    if isinstance(rpc, AppendEntriesRequest):
        entries = ",".join(str(e.term) for e in rpc.entries)
        return (
            f"AppendEntriesRequest(prev={rpc.prev_log_index},prevTerm={rpc.prev_log_term},"
            f"entries=[{entries}],commit={rpc.commit_index})"
        )
    return f"AppendEntriesResponse(success={rpc.success},matchIndex={rpc.match_index})"


def format_label(label: ActionLabel) -> str:
    if isinstance(label, Timeout):
        return f"Timeout({label.server},{label.kind})"
    if isinstance(label, Send):
        m = label.message
        suffix = ",lost" if label.lost else ""
        return f"Send({m.sender}->{m.dest},t{m.payload.term} {format_rpc(m.payload.rpc)}{suffix})"
    if isinstance(label, Recv):
        m = label.message
        suffix = ",dup" if label.duplicated else ""
        return f"Recv({m.sender}->{m.dest},t{m.payload.term} {format_rpc(m.payload.rpc)}{suffix})"
    if isinstance(label, Client):
        return f"Client({label.server})"
    return f"Crash({label.server})"
