"""Pluggable network models over a shared message-set representation.

In-flight traffic is a mathematical SET of addressed messages, not a
multiset: storing a message that is already present is a no-op. That is
exactly what keeps the state space finite under duplication, because a
duplicate is modelled by delivering a message without removing it from
the set, never by a second stored copy.

The unreliable model may drop a message at send time (loss) and may keep
a delivered message in the set (duplication); any stored message may be
delivered at any moment (reordering). The reliable model stores and
removes unconditionally, so only reordering remains, and every behavior
it exhibits is also a behavior of the unreliable model.

Loss happens at send time only; a stored message is never spontaneously
dropped. Messages addressed to crashed servers simply stay in the set:
they are inert and bounded, so no cleanup rule is needed.
"""

from __future__ import annotations

from typing import NamedTuple, Union

from .types import Entry, Log, NetworkModel, ServerId, Term


class RequestVoteRequest(NamedTuple):
    last_log_term: Term
    last_log_index: int


class RequestVoteResponse(NamedTuple):
    vote_granted: bool


class AppendEntriesRequest(NamedTuple):
    prev_log_index: int
    prev_log_term: Term
    entries: Log  # zero entries (heartbeat) or exactly one
    commit_index: int


class AppendEntriesResponse(NamedTuple):
    success: bool
    match_index: int


Rpc = Union[
    RequestVoteRequest,
    RequestVoteResponse,
    AppendEntriesRequest,
    AppendEntriesResponse,
]


class Payload(NamedTuple):
    """Sender's current term plus the RPC body."""

    term: Term
    rpc: Rpc


class NetMessage(NamedTuple):
    """An addressed message. Servers never send to themselves."""

    sender: ServerId
    dest: ServerId
    payload: Payload


class NetState(NamedTuple):
    """The set of in-flight messages plus the delivery discipline."""

    in_flight: frozenset[NetMessage]
    model: NetworkModel


def empty_net(model: NetworkModel) -> NetState:
    return NetState(frozenset(), model)


_RPC_TAGS: dict[type, int] = {
    RequestVoteRequest: 0,
    RequestVoteResponse: 1,
    AppendEntriesRequest: 2,
    AppendEntriesResponse: 3,
}


def rpc_sort_key(rpc: Rpc) -> tuple:
    """A total order over RPC values, usable across variants."""
    if isinstance(rpc, RequestVoteRequest):
        fields = (rpc.last_log_term, rpc.last_log_index)
    elif isinstance(rpc, RequestVoteResponse):
        fields = (int(rpc.vote_granted),)
    elif isinstance(rpc, AppendEntriesRequest):
        fields = (
            rpc.prev_log_index,
            rpc.prev_log_term,
            tuple(e.term for e in rpc.entries),
            rpc.commit_index,
        )
    else:
        fields = (int(rpc.success), rpc.match_index)
    return (_RPC_TAGS[type(rpc)], fields)


def message_sort_key(msg: NetMessage) -> tuple:
    """Canonical total order over messages, used wherever a deterministic
    enumeration of a message set is required."""
    return (msg.sender, msg.dest, msg.payload.term, rpc_sort_key(msg.payload.rpc))


def send_choices(net: NetState, msg: NetMessage) -> list[tuple[bool, NetState]]:
    """All (lost, successor-net) alternatives for pushing one message.

    Unreliable nets may store the message or lose it; reliable nets always
    store. When the message is already in flight the two branches collapse
    into the single "stored" outcome (set idempotence).
    """
    stored = NetState(net.in_flight | {msg}, net.model)
    if net.model is NetworkModel.RELIABLE or msg in net.in_flight:
        return [(False, stored)]
    return [(False, stored), (True, net)]


def send_outcomes(net: NetState, msg: NetMessage) -> list[NetState]:
    """The set of possible successor nets after sending msg, in
    deterministic order (stored first)."""
    if msg.sender == msg.dest:
        raise ValueError("servers never send messages to themselves")
    return [successor for _, successor in send_choices(net, msg)]


def deliver_choices(net: NetState, dest: ServerId) -> list[tuple[NetMessage, bool, NetState]]:
    """All (message, duplicated, successor-net) delivery alternatives for
    messages addressed to dest, in canonical message order.

    Consuming the message removes it from the set; the unreliable model
    additionally offers keeping it in flight, which models duplication.
    """
    out: list[tuple[NetMessage, bool, NetState]] = []
    pending = sorted((m for m in net.in_flight if m.dest == dest), key=message_sort_key)
    for msg in pending:
        out.append((msg, False, NetState(net.in_flight - {msg}, net.model)))
        if net.model is NetworkModel.UNRELIABLE:
            out.append((msg, True, net))
    return out


def deliver_outcomes(net: NetState, dest: ServerId) -> list[tuple[NetMessage, NetState]]:
    """The set of (delivered message, successor net) pairs for dest."""
    return [(msg, successor) for msg, _, successor in deliver_choices(net, dest)]
