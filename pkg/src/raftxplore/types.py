"""Core domain types and helpers shared by every other module.

The model is bounded: a Config fixes the number of servers, the highest
term any server may reach, and how many client interactions the cluster
as a whole may consume. Those three bounds, together with the network
buffer being a set, are what keep the reachable state space finite.

Logs are 1-indexed everywhere index arithmetic appears: index 0 means
"before the log", so a consistency check against prevLogIndex == 0 is
vacuously true. All types here are immutable values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

#: The "no server" sentinel. Real server IDs start at 1.
NIL = 0

ServerId = int
Term = int


class NetworkModel(enum.Enum):
    """Which delivery discipline the message buffer follows."""

    UNRELIABLE = "unreliable"  # loss, duplication and reordering
    RELIABLE = "reliable"      # reordering only


class InjectedBug(enum.Enum):
    """Deliberate mutations of the server rules, for bug reproduction runs."""

    NONE = "none"
    CANDIDATE_NO_STEPDOWN = "candidate-no-stepdown"
    ADVANCE_COMMIT_MATCHINDEX_TYPO = "advance-commit-matchindex-typo"


class Role(enum.IntEnum):
    FOLLOWER = 0
    CANDIDATE = 1
    LEADER = 2


class Entry(NamedTuple):
    """A replicated log entry.

    Client commands are abstracted away, so an entry carries nothing but
    the term of the leader that created it.
    """

    term: Term


Log = tuple[Entry, ...]


@dataclass(frozen=True)
class Config:
    """Bounds and switches for one model instance.

    Server IDs range over 1..max_server_id. A server whose current term
    has reached max_term may no longer start elections, but it still
    handles messages within that term.
    """

    max_server_id: int = 3
    max_term: int = 2
    max_client_interactions: int = 1
    network_model: NetworkModel = NetworkModel.UNRELIABLE
    injected_bug: InjectedBug = InjectedBug.NONE

    def __post_init__(self) -> None:
        if self.max_server_id < 1:
            raise ValueError(f"max_server_id must be >= 1, got {self.max_server_id}")
        if self.max_term < 1:
            raise ValueError(f"max_term must be >= 1, got {self.max_term}")
        if self.max_client_interactions < 0:
            raise ValueError(
                f"max_client_interactions must be >= 0, got {self.max_client_interactions}"
            )

    @property
    def server_ids(self) -> range:
        return range(1, self.max_server_id + 1)


def majority(n: int) -> int:
    """Minimal quorum size among n servers: floor(n/2) + 1."""
    if n < 1:
        raise ValueError(f"cluster size must be >= 1, got {n}")
    return n // 2 + 1


def last_term(log: Log) -> Term:
    """Term of the final log entry, or 0 for an empty log."""
    return log[-1].term if log else 0
