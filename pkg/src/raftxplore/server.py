"""The pure Raft server state machine.

Every operation maps one immutable ServerRecord (plus an input) to a
ServerStep: the successor record, the messages to hand to the network,
and whether the step consumed a client interaction. Nothing here does
I/O or touches shared state, so the exploration layer may call these
functions from any number of threads.

Conventions carried throughout:

* Operations that are simply not available in the current role/term
  return ``None`` ("disabled") rather than raising.
* A received message whose term is below the receiver's current term is
  dropped outright: no state change, no reply. Replying to stale
  requests would only shrink the window in which a sender holds an
  outdated term, at the price of a larger state space.
* On seeing a higher term a server adopts it, falls back to follower,
  and clears both its vote and any vote tally it was accumulating.
* A candidate votes for itself locally instead of sending itself a vote
  request, and the vote counts toward the quorum immediately, so a
  single-server cluster elects itself in one step.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .network import (
    AppendEntriesRequest,
    AppendEntriesResponse,
    NetMessage,
    Payload,
    RequestVoteRequest,
    RequestVoteResponse,
)
from .types import NIL, Config, Entry, InjectedBug, Log, Role, ServerId, Term, last_term, majority


class ModelAssertionError(AssertionError):
    """A structural assumption of the model was broken.

    Raised instead of silently mis-handling, so that an exploration halts
    with a diagnostic: hitting this means the model itself is corrupted,
    not that the protocol violated a checked invariant.
    """


class ServerRecord(NamedTuple):
    """One server's complete state.

    next_index and match_index are stored positionally: slot j-1 belongs
    to server j. A server's own slots are kept at their reset values and
    never read.
    """

    id: ServerId
    role: Role
    current_term: Term
    voted_for: ServerId  # NIL while unvoted in the current term
    log: Log
    commit_index: int
    votes_granted: frozenset[ServerId]
    next_index: tuple[int, ...]
    match_index: tuple[int, ...]


class ServerStep(NamedTuple):
    """Result bundle of one server operation."""

    record: ServerRecord
    outbound: tuple[NetMessage, ...] = ()
    client_event: bool = False


def init_server(server_id: ServerId, cfg: Config) -> ServerRecord:
    """The canonical initial state: a follower at term 0 with an empty log."""
    if not 1 <= server_id <= cfg.max_server_id:
        raise ValueError(f"server id {server_id} out of range 1..{cfg.max_server_id}")
    n = cfg.max_server_id
    return ServerRecord(
        id=server_id,
        role=Role.FOLLOWER,
        current_term=0,
        voted_for=NIL,
        log=(),
        commit_index=0,
        votes_granted=frozenset(),
        next_index=(1,) * n,
        match_index=(0,) * n,
    )


def _peers(s: ServerRecord, cfg: Config) -> list[ServerId]:
    return [j for j in cfg.server_ids if j != s.id]


def _become_leader(s: ServerRecord, cfg: Config) -> ServerRecord:
    n = cfg.max_server_id
    return s._replace(
        role=Role.LEADER,
        next_index=(len(s.log) + 1,) * n,
        match_index=(0,) * n,
    )


def timeout_election(s: ServerRecord, cfg: Config) -> Optional[ServerStep]:
    """Election timeout: start a new term as candidate.

    Disabled (None) once current_term has reached the term bound; the
    bound only stops the server from triggering further elections, it
    keeps handling messages within the final term. The self-vote is
    tallied immediately, so in a single-server cluster the candidate
    becomes leader within this same step and sends nothing.
    """
    if s.role is Role.LEADER:
        raise ValueError("leaders do not run election timeouts")
    if s.current_term >= cfg.max_term:
        return None
    term = s.current_term + 1
    record = s._replace(
        role=Role.CANDIDATE,
        current_term=term,
        voted_for=s.id,
        votes_granted=frozenset((s.id,)),
    )
    if len(record.votes_granted) >= majority(cfg.max_server_id):
        return ServerStep(_become_leader(record, cfg))
    request = Payload(term, RequestVoteRequest(last_term(s.log), len(s.log)))
    outbound = tuple(NetMessage(s.id, j, request) for j in _peers(s, cfg))
    return ServerStep(record, outbound)


def timeout_heartbeat(s: ServerRecord, cfg: Config) -> Optional[ServerStep]:
    """Leader timeout: broadcast AppendEntries to every peer, in ascending
    ID order.

    Each request carries at most one entry (the one at next_index[j], if
    the log reaches that far) and a commit index capped at the last index
    the request covers. The leader's own record does not change.
    """
    if s.role is not Role.LEADER:
        return None
    outbound = []
    for j in _peers(s, cfg):
        nxt = s.next_index[j - 1]
        prev = nxt - 1
        prev_term = s.log[prev - 1].term if prev >= 1 else 0
        last = min(len(s.log), nxt)
        rpc = AppendEntriesRequest(prev, prev_term, s.log[nxt - 1 : last], min(s.commit_index, last))
        outbound.append(NetMessage(s.id, j, Payload(s.current_term, rpc)))
    return ServerStep(s, tuple(outbound))


def _update_term(s: ServerRecord, term: Term) -> ServerRecord:
    # Adopting a higher term resets the vote and any stale vote tally.
    return s._replace(
        current_term=term,
        role=Role.FOLLOWER,
        voted_for=NIL,
        votes_granted=frozenset(),
    )


def receive(s: ServerRecord, sender: ServerId, payload: Payload, cfg: Config) -> ServerStep:
    """Full reception pipeline: stale drop, term adoption, RPC dispatch.

    Stale messages (payload term below ours) are consumed without any
    state change or reply. Otherwise the term is adopted if higher, after
    which the message term equals the current term, which is what every
    handler below assumes.
    """
    if payload.term < s.current_term:
        return ServerStep(s)
    if payload.term > s.current_term:
        s = _update_term(s, payload.term)
    rpc = payload.rpc
    if isinstance(rpc, RequestVoteRequest):
        return handle_request_vote_request(s, sender, rpc)
    if isinstance(rpc, RequestVoteResponse):
        return handle_request_vote_response(s, sender, rpc, cfg)
    if isinstance(rpc, AppendEntriesRequest):
        return handle_append_entries_request(s, sender, rpc, cfg)
    return handle_append_entries_response(s, sender, rpc, cfg)


def handle_request_vote_request(
    s: ServerRecord, sender: ServerId, rpc: RequestVoteRequest
) -> ServerStep:
    """Grant the vote if the candidate's log is at least as up to date as
    ours and we have not voted for anyone else this term. Always replies."""
    log_ok = rpc.last_log_term > last_term(s.log) or (
        rpc.last_log_term == last_term(s.log) and rpc.last_log_index >= len(s.log)
    )
    grant = log_ok and s.voted_for in (NIL, sender)
    record = s._replace(voted_for=sender) if grant else s
    reply = NetMessage(s.id, sender, Payload(s.current_term, RequestVoteResponse(grant)))
    return ServerStep(record, (reply,))


def handle_request_vote_response(
    s: ServerRecord, sender: ServerId, rpc: RequestVoteResponse, cfg: Config
) -> ServerStep:
    """Tally a granted vote; become leader on reaching a quorum.

    Ignored entirely unless we are still a candidate, so late or
    duplicated grants cannot re-initialize leader bookkeeping.
    """
    if s.role is not Role.CANDIDATE or not rpc.vote_granted:
        return ServerStep(s)
    record = s._replace(votes_granted=s.votes_granted | {sender})
    if len(record.votes_granted) >= majority(cfg.max_server_id):
        record = _become_leader(record, cfg)
    return ServerStep(record)


def handle_append_entries_request(
    s: ServerRecord, sender: ServerId, rpc: AppendEntriesRequest, cfg: Config
) -> ServerStep:
    """Consistency-check the request, then append/truncate as needed.

    A candidate steps down to follower on any request at its own term,
    because such a request proves the term's election was won by someone
    else (suppressed under the candidate-no-stepdown bug injection).

    On acceptance the commit index adopts the leader's claim but never
    regresses: a freshly elected leader may lag behind what a previous
    leader already told us was committed.

    An already-present entry leaves the log untouched and still replies
    success, which is what makes duplicated requests harmless.
    """
    if len(rpc.entries) > 1:
        raise ModelAssertionError(
            f"AppendEntries carries {len(rpc.entries)} entries; the model sends at most one"
        )
    if s.role is Role.CANDIDATE and cfg.injected_bug is not InjectedBug.CANDIDATE_NO_STEPDOWN:
        s = s._replace(role=Role.FOLLOWER)
    prev = rpc.prev_log_index
    log_ok = prev == 0 or (prev <= len(s.log) and s.log[prev - 1].term == rpc.prev_log_term)
    if not log_ok:
        reply = NetMessage(s.id, sender, Payload(s.current_term, AppendEntriesResponse(False, 0)))
        return ServerStep(s, (reply,))
    log = s.log
    if rpc.entries:
        if len(log) > prev and log[prev].term != rpc.entries[0].term:
            log = log[:prev]  # conflicting tail: drop it
        if len(log) == prev:
            log = log + rpc.entries
    record = s._replace(log=log, commit_index=max(s.commit_index, rpc.commit_index))
    reply = NetMessage(
        s.id,
        sender,
        Payload(s.current_term, AppendEntriesResponse(True, prev + len(rpc.entries))),
    )
    return ServerStep(record, (reply,))


def handle_append_entries_response(
    s: ServerRecord, sender: ServerId, rpc: AppendEntriesResponse, cfg: Config
) -> ServerStep:
    """Update follower progress, then try to advance the commit index.

    The quorum test runs against the match indexes as they were before
    this response was folded in, so an acknowledgement starts counting
    toward commitment from the next response onward. Under the
    matchindex-typo bug injection the test runs against the just-updated
    map instead, which lets the very acknowledgement that established a
    quorum also commit it. Only entries of the leader's own term are
    ever committed directly.

    Ignored entirely unless we are (still) the leader.
    """
    if s.role is not Role.LEADER:
        return ServerStep(s)
    k = sender - 1
    pre_match = s.match_index
    if rpc.success:
        next_index = _replaced(s.next_index, k, rpc.match_index + 1)
        match_index = _replaced(s.match_index, k, rpc.match_index)
    else:
        next_index = _replaced(s.next_index, k, max(s.next_index[k] - 1, 1))
        match_index = s.match_index
    agree_map = (
        match_index
        if cfg.injected_bug is InjectedBug.ADVANCE_COMMIT_MATCHINDEX_TYPO
        else pre_match
    )
    commit = s.commit_index
    quorum = majority(cfg.max_server_id)
    for n in range(len(s.log), s.commit_index, -1):
        if s.log[n - 1].term != s.current_term:
            continue
        agree = 1 + sum(
            1 for j in cfg.server_ids if j != s.id and agree_map[j - 1] >= n
        )
        if agree >= quorum:
            commit = n
            break
    record = s._replace(next_index=next_index, match_index=match_index, commit_index=commit)
    return ServerStep(record)


def client_request(s: ServerRecord) -> Optional[ServerStep]:
    """Accept one client interaction: append an entry stamped with the
    leader's current term. Replication happens at the next heartbeat."""
    if s.role is not Role.LEADER:
        return None
    record = s._replace(log=s.log + (Entry(s.current_term),))
    return ServerStep(record, (), True)


def _replaced(values: tuple[int, ...], index: int, value: int) -> tuple[int, ...]:
    if values[index] == value:
        return values
    return values[:index] + (value,) + values[index + 1 :]
