"""Ballots, profiles, scoring, winner determination, and the election file format.

All arithmetic is exact (plain Python integers); every operation is a pure
function of its inputs and all value types are immutable.
"""

from __future__ import annotations

import enum
import functools
import itertools
import string
from dataclasses import dataclass, field


class ElectionFormatError(ValueError):
    """An election or instance file does not match the expected grammar."""


class BudgetExceededError(RuntimeError):
    """A brute-force search would exceed its configured work budget."""


class Protocol(enum.Enum):
    """The six supported voting protocols."""

    PLURALITY = "plurality"
    BORDA = "borda"
    COPELAND = "copeland"
    MAXIMIN = "maximin"
    STV = "stv"
    APPROVAL = "approval"

    @property
    def uses_rankings(self) -> bool:
        return self is not Protocol.APPROVAL


RANKING_PROTOCOLS = tuple(p for p in Protocol if p.uses_rankings)
SCORED_PROTOCOLS = tuple(p for p in Protocol if p is not Protocol.STV)


@dataclass(frozen=True)
class RankingBallot:
    """A complete preference order, most preferred candidate first.

    The order must be a permutation of 0..m-1; the candidate count is
    implied by its length.
    """

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(self.order)
        object.__setattr__(self, "order", order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"ballot is not a permutation of 0..{len(order) - 1}: {order!r}")

    @property
    def m(self) -> int:
        return len(self.order)

    def position(self, candidate: int) -> int:
        """Rank of a candidate, 0 for the most preferred."""
        return self.order.index(candidate)


@dataclass(frozen=True)
class ApprovalBallot:
    """The set of approved candidates; empty and full sets are legal."""

    approved: frozenset[int]

    def __post_init__(self):
        approved = frozenset(self.approved)
        object.__setattr__(self, "approved", approved)
        if any(not isinstance(c, int) or c < 0 for c in approved):
            raise ValueError(f"approval set must contain nonnegative candidate indices: {approved!r}")


Ballot = RankingBallot | ApprovalBallot


def ranking(*order: int) -> RankingBallot:
    """Shorthand constructor: ranking(2, 0, 1) ranks candidate 2 first."""
    return RankingBallot(tuple(order))


def approval(*candidates: int) -> ApprovalBallot:
    """Shorthand constructor: approval(0, 2) approves candidates 0 and 2."""
    return ApprovalBallot(frozenset(candidates))


def validate_ballot(protocol: Protocol, ballot: Ballot, m: int) -> None:
    """Raise ValueError unless the ballot is well-formed for (protocol, m)."""
    if protocol.uses_rankings:
        if not isinstance(ballot, RankingBallot):
            raise ValueError(f"{protocol.value} requires ranking ballots, got {type(ballot).__name__}")
        if ballot.m != m:
            raise ValueError(f"ballot ranks {ballot.m} candidates, election has {m}")
    else:
        if not isinstance(ballot, ApprovalBallot):
            raise ValueError(f"{protocol.value} requires approval ballots, got {type(ballot).__name__}")
        if any(c >= m for c in ballot.approved):
            raise ValueError(f"approval of candidate outside 0..{m - 1}: {sorted(ballot.approved)}")


def validate_ballots(protocol: Protocol, ballots, m: int) -> None:
    if m < 1:
        raise ValueError("an election needs at least one candidate")
    for ballot in ballots:
        validate_ballot(protocol, ballot, m)


@dataclass(frozen=True)
class ScoreVector:
    """Per-candidate integer scores under a specific protocol's point rule."""

    protocol: Protocol
    scores: tuple[int, ...]


@dataclass(frozen=True)
class StvRound:
    """One elimination round: remaining candidates' scores and the loser."""

    scores: tuple[tuple[int, int], ...]  # (candidate, top-choice count), ascending by candidate
    eliminated: int


@dataclass(frozen=True)
class ElectionOutcome:
    """Co-winner set plus the deterministic lowest-index tie-break winner."""

    winner_set: frozenset[int]
    tiebreak_winner: int
    stv_trace: tuple[StvRound, ...] | None = None

    def __post_init__(self):
        if not self.winner_set:
            raise ValueError("winner set must be nonempty")
        if self.tiebreak_winner not in self.winner_set:
            raise ValueError("tie-break winner must be a co-winner")


def default_candidate_names(m: int) -> tuple[str, ...]:
    """Single letters for small elections, c0, c1, ... otherwise."""
    if m <= 26:
        return tuple(string.ascii_lowercase[:m])
    return tuple(f"c{i}" for i in range(m))


@dataclass(frozen=True)
class PartialProfile:
    """Known ballots plus a count of still-unknown votes.

    The universal input to the decision problems: n = len(known) + unknown_count
    voters in total, of which only `known` have been elicited.
    """

    protocol: Protocol
    m: int
    known: tuple[Ballot, ...]
    unknown_count: int = 0
    candidate_names: tuple[str, ...] = None  # type: ignore[assignment]
    voter_ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "known", tuple(self.known))
        validate_ballots(self.protocol, self.known, self.m)
        if self.unknown_count < 0:
            raise ValueError("unknown vote count must be nonnegative")
        names = self.candidate_names
        if names is None:
            names = default_candidate_names(self.m)
        names = tuple(names)
        object.__setattr__(self, "candidate_names", names)
        _validate_names(names, self.m)
        if self.voter_ids is not None:
            object.__setattr__(self, "voter_ids", tuple(self.voter_ids))
            if len(self.voter_ids) != len(self.known):
                raise ValueError("voter ids must align with the known ballots")

    @property
    def n(self) -> int:
        return len(self.known) + self.unknown_count


def _validate_names(names: tuple[str, ...], m: int) -> None:
    if len(names) != m:
        raise ValueError(f"expected {m} candidate names, got {len(names)}")
    if len(set(names)) != len(names):
        raise ValueError("candidate names must be distinct")
    for name in names:
        if not name or any(ch.isspace() for ch in name) or "#" in name:
            raise ValueError(f"bad candidate name: {name!r}")


# ---------------------------------------------------------------------------
# Scoring and winner determination


def pairwise_tallies(ballots, m: int) -> list[list[int]]:
    """Matrix N with N[x][y] = number of ballots ranking x above y."""
    validate_ballots(Protocol.MAXIMIN, ballots, m)
    n_matrix = [[0] * m for _ in range(m)]
    for ballot in ballots:
        order = ballot.order
        for i, x in enumerate(order):
            row = n_matrix[x]
            for y in order[i + 1 :]:
                row[y] += 1
    return n_matrix


def _copeland_scores(n_matrix: list[list[int]], m: int) -> list[int]:
    scores = [0] * m
    for x in range(m):
        for y in range(x + 1, m):
            if n_matrix[x][y] > n_matrix[y][x]:
                scores[x] += 1
                scores[y] -= 1
            elif n_matrix[x][y] < n_matrix[y][x]:
                scores[x] -= 1
                scores[y] += 1
    return scores


def _maximin_scores(n_matrix: list[list[int]], m: int) -> list[int]:
    return [min((n_matrix[x][y] for y in range(m) if y != x), default=0) for x in range(m)]


def score(protocol: Protocol, ballots, m: int) -> ScoreVector:
    """Exact integer scores per the protocol's point rule (STV has none)."""
    if protocol is Protocol.STV:
        raise ValueError("STV has no single score vector; use stv_run")
    validate_ballots(protocol, ballots, m)
    scores = [0] * m
    if protocol is Protocol.PLURALITY:
        for ballot in ballots:
            scores[ballot.order[0]] += 1
    elif protocol is Protocol.BORDA:
        for ballot in ballots:
            for points, candidate in zip(range(m - 1, -1, -1), ballot.order):
                scores[candidate] += points
    elif protocol is Protocol.APPROVAL:
        for ballot in ballots:
            for candidate in ballot.approved:
                scores[candidate] += 1
    elif protocol is Protocol.COPELAND:
        scores = _copeland_scores(pairwise_tallies(ballots, m), m)
    elif protocol is Protocol.MAXIMIN:
        scores = _maximin_scores(pairwise_tallies(ballots, m), m)
    else:  # pragma: no cover - exhaustive over Protocol
        raise AssertionError(protocol)
    return ScoreVector(protocol, tuple(scores))


def stv_run(ballots, m: int) -> ElectionOutcome:
    """Run single transferable vote: eliminate one candidate per round.

    Each round scores a remaining candidate by the ballots ranking it highest
    among remaining candidates; the lowest-scored candidate drops out, ties
    eliminating the highest-index candidate. The survivor wins.
    """
    validate_ballots(Protocol.STV, ballots, m)
    remaining = list(range(m))
    rounds = []
    while len(remaining) > 1:
        remaining_set = set(remaining)
        counts = dict.fromkeys(remaining, 0)
        for ballot in ballots:
            for candidate in ballot.order:
                if candidate in remaining_set:
                    counts[candidate] += 1
                    break
        lowest = min(counts.values())
        eliminated = max(c for c in remaining if counts[c] == lowest)
        rounds.append(StvRound(tuple(sorted(counts.items())), eliminated))
        remaining.remove(eliminated)
    survivor = remaining[0]
    return ElectionOutcome(frozenset({survivor}), survivor, tuple(rounds))


def winner(protocol: Protocol, ballots, m: int) -> ElectionOutcome:
    """Winner determination: argmax co-winners plus the lowest-index winner."""
    if protocol is Protocol.STV:
        return stv_run(ballots, m)
    vector = score(protocol, ballots, m)
    best = max(vector.scores)
    winner_set = frozenset(c for c, s in enumerate(vector.scores) if s == best)
    return ElectionOutcome(winner_set, min(winner_set))


@functools.lru_cache(maxsize=None)
def all_rankings(m: int) -> tuple[RankingBallot, ...]:
    """All m! ranking ballots in lexicographic order."""
    return tuple(RankingBallot(p) for p in itertools.permutations(range(m)))


@functools.lru_cache(maxsize=None)
def all_approval_ballots(m: int) -> tuple[ApprovalBallot, ...]:
    """All 2^m approval ballots, ordered by bitmask (empty set first)."""
    return tuple(
        ApprovalBallot(frozenset(c for c in range(m) if mask >> c & 1))
        for mask in range(1 << m)
    )


def all_ballots(protocol: Protocol, m: int) -> tuple[Ballot, ...]:
    """The full ballot space for a protocol, in a fixed enumeration order."""
    if protocol.uses_rankings:
        return all_rankings(m)
    return all_approval_ballots(m)


# ---------------------------------------------------------------------------
# Election file format
#
# Line-oriented UTF-8 with '#' comments:
#   protocol: <plurality|borda|copeland|maximin|stv|approval>
#   candidates: <name> <name> ...
#   ranking: <name> ... <name>      (one per voter, a full permutation)
#   approval: <name> ...            (one per voter, possibly empty)
#   unknown: <t>                    (optional, final entry)


_PROTOCOLS_BY_NAME = {p.value: p for p in Protocol}


def parse_election(text: str) -> PartialProfile:
    """Parse the election file format; raises ElectionFormatError with a line number."""
    protocol: Protocol | None = None
    names: tuple[str, ...] | None = None
    index: dict[str, int] = {}
    ballots: list[Ballot] = []
    unknown: int | None = None

    def fail(lineno: int, message: str):
        raise ElectionFormatError(f"line {lineno}: {message}")

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep:
            fail(lineno, "expected '<key>: <values>'")
        tokens = rest.split()
        if protocol is None:
            if key != "protocol":
                fail(lineno, "the first entry must be 'protocol:'")
            if len(tokens) != 1 or tokens[0].lower() not in _PROTOCOLS_BY_NAME:
                fail(lineno, f"unknown protocol {rest.strip()!r}; expected one of "
                             f"{', '.join(sorted(_PROTOCOLS_BY_NAME))}")
            protocol = _PROTOCOLS_BY_NAME[tokens[0].lower()]
            continue
        if names is None:
            if key != "candidates":
                fail(lineno, "the second entry must be 'candidates:'")
            if not tokens:
                fail(lineno, "at least one candidate is required")
            if len(set(tokens)) != len(tokens):
                fail(lineno, "candidate names must be distinct")
            names = tuple(tokens)
            index = {name: i for i, name in enumerate(names)}
            continue
        if unknown is not None:
            fail(lineno, "'unknown:' must be the final entry")
        if key == "ranking":
            if not protocol.uses_rankings:
                fail(lineno, f"'ranking:' ballots are not valid for the {protocol.value} protocol")
            order = []
            for token in tokens:
                if token not in index:
                    fail(lineno, f"unknown candidate name {token!r}")
                order.append(index[token])
            if sorted(order) != list(range(len(names))):
                fail(lineno, "ranking must list every candidate exactly once")
            ballots.append(RankingBallot(tuple(order)))
        elif key == "approval":
            if protocol is not Protocol.APPROVAL:
                fail(lineno, f"'approval:' ballots are not valid for the {protocol.value} protocol")
            approved = set()
            for token in tokens:
                if token not in index:
                    fail(lineno, f"unknown candidate name {token!r}")
                if index[token] in approved:
                    fail(lineno, f"candidate {token!r} approved twice")
                approved.add(index[token])
            ballots.append(ApprovalBallot(frozenset(approved)))
        elif key == "unknown":
            if len(tokens) != 1 or not tokens[0].isdigit():
                fail(lineno, "'unknown:' takes a single nonnegative integer")
            unknown = int(tokens[0])
        else:
            fail(lineno, f"unknown entry {key!r}")

    if protocol is None:
        raise ElectionFormatError("missing 'protocol:' entry")
    if names is None:
        raise ElectionFormatError("missing 'candidates:' entry")
    return PartialProfile(protocol, len(names), tuple(ballots), unknown or 0, names)


def serialize_election(profile: PartialProfile) -> str:
    """Render a profile in the election file format; parse round-trips exactly."""
    lines = [
        f"protocol: {profile.protocol.value}",
        f"candidates: {' '.join(profile.candidate_names)}",
    ]
    names = profile.candidate_names
    for ballot in profile.known:
        if isinstance(ballot, RankingBallot):
            lines.append(f"ranking: {' '.join(names[c] for c in ballot.order)}")
        else:
            listed = " ".join(names[c] for c in sorted(ballot.approved))
            lines.append(f"approval: {listed}".rstrip())
    if profile.unknown_count:
        lines.append(f"unknown: {profile.unknown_count}")
    return "\n".join(lines) + "\n"
