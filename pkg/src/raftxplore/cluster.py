"""Global states and the labelled transition relation over them.

A GlobalState composes every server record with the network set, the
remaining client-interaction budget and the set of crashed servers. The
transition relation is the executable analogue of running all servers,
the network and the client in parallel.

Atomicity: one server step (a timeout broadcast, or a receive plus its
reply) is ONE transition. The per-message loss alternatives inside a
step multiply into sibling transitions, but half-broadcast intermediate
states are never exposed on their own. The exception is crashing, which
may preempt a step at any point between its visible actions: for every
cut of the outbound sequence a crash-after-prefix successor is emitted.
Concretely, a broadcast of n messages can crash after 1..n-1 sends, and
a receive can additionally crash after consuming the message but before
sending its reply. Cutting after the final send is not emitted because
it reaches exactly the state obtained by crashing in the successor.

Broadcast send order is fixed (ascending server ID) and deliberately
not explored: what matters is that receive order stays free, and the
network's buffering already delivers in every possible order.

Transitions carry the full atomic label sequence of the step, so a
trace is replayable label by label. Timeouts are surfaced as explicit
labels purely to make traces readable; they add label information, not
states.
"""

from __future__ import annotations

from typing import NamedTuple, Union

from .network import NetMessage, NetState, deliver_choices, empty_net, send_choices
from .server import ServerRecord, ServerStep, client_request, init_server, receive, timeout_election, timeout_heartbeat
from .types import Config, Role, ServerId

ELECTION = "Election"
HEARTBEAT = "Heartbeat"


class Timeout(NamedTuple):
    server: ServerId
    kind: str  # ELECTION or HEARTBEAT


class Send(NamedTuple):
    message: NetMessage
    lost: bool


class Recv(NamedTuple):
    message: NetMessage
    duplicated: bool


class Client(NamedTuple):
    server: ServerId  # the leader taking the interaction


class Crash(NamedTuple):
    server: ServerId


ActionLabel = Union[Timeout, Send, Recv, Client, Crash]


class GlobalState(NamedTuple):
    """The unit of exploration. servers is positional: slot i-1 holds
    server i. Crashed servers keep their last record but never act."""

    servers: tuple[ServerRecord, ...]
    net: NetState
    client_budget: int
    crashed: frozenset[ServerId]


class Transition(NamedTuple):
    """One labelled edge: the atomic label sequence of a single composite
    step, and the state it leads to."""

    labels: tuple[ActionLabel, ...]
    target: GlobalState


def initial_state(cfg: Config) -> GlobalState:
    return GlobalState(
        servers=tuple(init_server(i, cfg) for i in cfg.server_ids),
        net=empty_net(cfg.network_model),
        client_budget=cfg.max_client_interactions,
        crashed=frozenset(),
    )


def _expand_sends(
    net: NetState, outbound: tuple[NetMessage, ...]
) -> list[tuple[tuple[Send, ...], NetState]]:
    """Every (Send-label sequence, final net) alternative for pushing the
    outbound messages in order through the network's send choices."""
    branches: list[tuple[tuple[Send, ...], NetState]] = [((), net)]
    for msg in outbound:
        branches = [
            (labels + (Send(msg, lost),), successor)
            for labels, current in branches
            for lost, successor in send_choices(current, msg)
        ]
    return branches


def _step_transitions(
    g: GlobalState,
    server_id: ServerId,
    head: tuple[ActionLabel, ...],
    step: ServerStep,
    net: NetState,
    first_cut: int,
) -> list[Transition]:
    """Expand one server step into transitions: all loss combinations of
    the full outbound sequence, then the crash preemptions after each cut
    point from first_cut (messages already sent) up to len(outbound)-1."""
    servers = g.servers[: server_id - 1] + (step.record,) + g.servers[server_id:]
    budget = g.client_budget - 1 if step.client_event else g.client_budget
    out = [
        Transition(head + labels, GlobalState(servers, final_net, budget, g.crashed))
        for labels, final_net in _expand_sends(net, step.outbound)
    ]
    if step.outbound:
        crashed = g.crashed | {server_id}
        crash = (Crash(server_id),)
        for cut in range(first_cut, len(step.outbound)):
            out.extend(
                Transition(head + labels + crash, GlobalState(servers, cut_net, budget, crashed))
                for labels, cut_net in _expand_sends(net, step.outbound[:cut])
            )
    return out


def enabled_transitions(g: GlobalState, cfg: Config) -> list[Transition]:
    """Every transition enabled in g, in a fixed deterministic order.

    Per live server, ascending by ID: its timeout step (election for
    non-leaders when the term bound allows, heartbeat for leaders), a
    client interaction for leaders while budget remains, one receive per
    delivery alternative of each message addressed to it, and finally a
    plain crash. Crashed servers contribute nothing; messages addressed
    to them stay in flight untouched.
    """
    out: list[Transition] = []
    for i in cfg.server_ids:
        if i in g.crashed:
            continue
        s = g.servers[i - 1]
        if s.role is Role.LEADER:
            step = timeout_heartbeat(s, cfg)
            out += _step_transitions(g, i, (Timeout(i, HEARTBEAT),), step, g.net, 1)
            if g.client_budget > 0:
                step = client_request(s)
                out += _step_transitions(g, i, (Client(i),), step, g.net, 1)
        else:
            step = timeout_election(s, cfg)
            if step is not None:
                out += _step_transitions(g, i, (Timeout(i, ELECTION),), step, g.net, 1)
        for msg, duplicated, net in deliver_choices(g.net, i):
            step = receive(s, msg.sender, msg.payload, cfg)
            out += _step_transitions(g, i, (Recv(msg, duplicated),), step, net, 0)
        out.append(
            Transition((Crash(i),), GlobalState(g.servers, g.net, g.client_budget, g.crashed | {i}))
        )
    return out
