"""Elicitation policies and solvers.

Covers the deciding-subset search under perfect suspicions, the polynomial
plurality elicitation order, whole-ballot and per-query elicitation
simulators, elicitation tree validity, and the nondivulging check for
per-query policies.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from . import termination
from .core import (
    ApprovalBallot,
    Ballot,
    BudgetExceededError,
    ElectionOutcome,
    PartialProfile,
    Protocol,
    RankingBallot,
    all_ballots,
    pairwise_tallies,
    validate_ballots,
    winner,
)

DEFAULT_BUDGET = termination.DEFAULT_BUDGET
DEFAULT_NODE_BUDGET = 10**6

#: Query marker used in whole-ballot elicitation transcripts.
BALLOT_QUERY = "ballot"


@dataclass(frozen=True)
class ElicitationInstance:
    """A perfectly predicted profile plus a query budget k.

    The question: is there a subset of at most k of the predicted votes whose
    elicitation alone already decides the election?
    """

    protocol: Protocol
    m: int
    predicted: tuple[Ballot, ...]
    k: int
    tagged_candidate: int | None = None
    candidate_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "predicted", tuple(self.predicted))
        validate_ballots(self.protocol, self.predicted, self.m)
        if not 0 <= self.k <= len(self.predicted):
            raise ValueError(f"k={self.k} outside 0..{len(self.predicted)}")
        if self.candidate_names is not None:
            object.__setattr__(self, "candidate_names", tuple(self.candidate_names))

    @property
    def n(self) -> int:
        return len(self.predicted)


@dataclass(frozen=True)
class ElicitationTranscript:
    """Ordered (voter, query, response) record of one simulated elicitation."""

    entries: tuple[tuple, ...]
    queries_used: int
    outcome: ElectionOutcome
    terminated_early: bool


# ---------------------------------------------------------------------------
# Incremental decidedness checks for the subset search
#
# Per-ballot score (or pairwise tally) contributions are additive, so a
# running total supports pushing and popping voters in O(m) or O(m^2).  The
# decided test then needs only the final scores of the fixed-completion
# winner and its best challenger, both available in closed form because the
# extremal completion gives every challenger a uniform per-ballot gain and
# the incumbent nothing.


def _argmax_low(values) -> int:
    best = max(values)
    return values.index(best)


def _beats(score_g: int, g: int, score_h: int, h: int) -> bool:
    # lowest index wins ties
    return score_g > score_h or (score_g == score_h and g < h)


class _SubsetDecider:
    """Decidedness checks over subsets of one predicted profile."""

    def __init__(self, protocol: Protocol, predicted: tuple[Ballot, ...], m: int,
                 budget: int = DEFAULT_BUDGET):
        self.protocol = protocol
        self.predicted = predicted
        self.m = m
        self.budget = budget
        self._members: list[int] = []
        if protocol is Protocol.STV:
            self._rows = None
        elif protocol in (Protocol.COPELAND, Protocol.MAXIMIN):
            self._rows = [pairwise_tallies([b], m) for b in predicted]
            self._tallies = [[0] * m for _ in range(m)]
        else:
            self._rows = [self._score_row(b) for b in predicted]
            self._totals = [0] * m

    def _score_row(self, ballot: Ballot) -> list[int]:
        m = self.m
        row = [0] * m
        if self.protocol is Protocol.PLURALITY:
            row[ballot.order[0]] = 1
        elif self.protocol is Protocol.BORDA:
            for i, c in enumerate(ballot.order):
                row[c] = m - 1 - i
        else:  # approval
            for c in ballot.approved:
                row[c] = 1
        return row

    def push(self, voter: int) -> None:
        self._members.append(voter)
        if self.protocol is Protocol.STV:
            return
        row = self._rows[voter]
        if self.protocol in (Protocol.COPELAND, Protocol.MAXIMIN):
            tallies = self._tallies
            for x in range(self.m):
                trow = tallies[x]
                rrow = row[x]
                for y in range(self.m):
                    trow[y] += rrow[y]
        else:
            totals = self._totals
            for x in range(self.m):
                totals[x] += row[x]

    def pop(self, voter: int) -> None:
        popped = self._members.pop()
        assert popped == voter
        if self.protocol is Protocol.STV:
            return
        row = self._rows[voter]
        if self.protocol in (Protocol.COPELAND, Protocol.MAXIMIN):
            tallies = self._tallies
            for x in range(self.m):
                trow = tallies[x]
                rrow = row[x]
                for y in range(self.m):
                    trow[y] -= rrow[y]
        else:
            totals = self._totals
            for x in range(self.m):
                totals[x] -= row[x]

    def decided(self, t: int) -> bool:
        """Does the current subset, with t votes unknown, decide the election?"""
        m = self.m
        if m == 1:
            return True
        protocol = self.protocol
        if protocol is Protocol.STV:
            known = tuple(self.predicted[v] for v in self._members)
            partial = PartialProfile(protocol, m, known, t)
            return termination.decided(partial, self.budget) is not None
        if protocol in (Protocol.COPELAND, Protocol.MAXIMIN):
            return self._decided_pairwise(t)
        totals = self._totals
        if protocol is Protocol.PLURALITY:
            fixed = list(totals)
            fixed[0] += t
            gain = t
        elif protocol is Protocol.BORDA:
            fixed = [totals[x] + t * (m - 1 - x) for x in range(m)]
            gain = t * (m - 1)
        else:  # approval: the fixed completion approves nobody
            fixed = totals
            gain = t
        w = _argmax_low(fixed)
        # best challenger: the extremal completion gives every challenger the
        # same gain and w nothing, so only the top-scored rival can matter
        best_g, best_score = -1, -1
        for g in range(m):
            if g != w and totals[g] > best_score:
                best_g, best_score = g, totals[g]
        if best_g < 0:
            return True
        return not _beats(best_score + gain, best_g, totals[w], w)

    def _decided_pairwise(self, t: int) -> bool:
        m = self.m
        tallies = self._tallies
        maximin = self.protocol is Protocol.MAXIMIN
        if maximin:
            fixed = [
                min(tallies[x][y] + (t if x < y else 0) for y in range(m) if y != x)
                for x in range(m)
            ]
        else:
            fixed = [0] * m
            for x in range(m):
                for y in range(x + 1, m):
                    diff = tallies[x][y] + t - tallies[y][x]
                    if diff > 0:
                        fixed[x] += 1
                        fixed[y] -= 1
                    elif diff < 0:
                        fixed[x] -= 1
                        fixed[y] += 1
        w = _argmax_low(fixed)
        if maximin:
            score_w = min(tallies[w][y] for y in range(m) if y != w)
        else:
            score_w = sum(
                1 if tallies[w][y] > tallies[y][w] + t else -1 if tallies[w][y] < tallies[y][w] + t else 0
                for y in range(m) if y != w
            )
        for g in range(m):
            if g == w:
                continue
            if maximin:
                score_g = min(tallies[g][y] + t for y in range(m) if y != g)
            else:
                score_g = sum(
                    1 if tallies[g][y] + t > tallies[y][g] else -1 if tallies[g][y] + t < tallies[y][g] else 0
                    for y in range(m) if y != g
                )
            if _beats(score_g, g, score_w, w):
                return False
        return True


def min_deciding_subset(inst: ElicitationInstance,
                        budget: int = DEFAULT_BUDGET) -> tuple[int, ...] | None:
    """Smallest subset of voters (size <= k) whose ballots decide the election.

    Returns the lexicographically least subset of the minimal size, or None
    if no subset within the budget k decides.  Decidedness is monotone in the
    subset, so the minimal size is found by binary search over sizes, each
    probe enumerating fixed-size subsets with incremental score updates.
    """
    n = inst.n
    k = min(inst.k, n)
    checker = _SubsetDecider(inst.protocol, inst.predicted, inst.m, budget)

    def first_deciding(size: int) -> tuple[int, ...] | None:
        result: tuple[int, ...] | None = None
        chosen: list[int] = []

        def rec(start: int) -> None:
            nonlocal result
            if len(chosen) == size:
                if checker.decided(n - size):
                    result = tuple(chosen)
                return
            last_start = n - (size - len(chosen))
            for v in range(start, last_start + 1):
                checker.push(v)
                chosen.append(v)
                rec(v + 1)
                chosen.pop()
                checker.pop(v)
                if result is not None:
                    return

        rec(0)
        return result

    best = first_deciding(k)
    if best is None:
        return None
    lo, hi = 0, k
    while lo < hi:
        mid = (lo + hi) // 2
        probe = first_deciding(mid)
        if probe is not None:
            best, hi = probe, mid
        else:
            lo = mid + 1
    return best


# ---------------------------------------------------------------------------
# Voter orderings and whole-ballot elicitation


def _first_choice(ballot: Ballot) -> int | None:
    if isinstance(ballot, RankingBallot):
        return ballot.order[0]
    return min(ballot.approved) if ballot.approved else None


def _supports(ballot: Ballot, winners: frozenset[int]) -> bool:
    if isinstance(ballot, RankingBallot):
        return ballot.order[0] in winners
    return bool(ballot.approved & winners)


def _grouped_order(predicted, m: int, winners: frozenset[int]) -> list[int]:
    """Supporters of `winners` first, the rest round-robin by first choice."""
    priority = [v for v, b in enumerate(predicted) if _supports(b, winners)]
    prioritized = set(priority)
    groups: dict[int | None, list[int]] = {}
    for v, ballot in enumerate(predicted):
        if v in prioritized:
            continue
        groups.setdefault(_first_choice(ballot), []).append(v)
    order = list(priority)
    cycle = sorted((c for c in groups if c is not None))
    while any(groups.get(c) for c in cycle):
        for c in cycle:
            if groups.get(c):
                order.append(groups[c].pop(0))
    order.extend(groups.get(None, []))
    return order


def plurality_elicit_order(inst: ElicitationInstance,
                           budget: int = DEFAULT_BUDGET) -> tuple[tuple[int, ...], int]:
    """Predicted winner's supporters first, then rivals round-robin.

    Returns (voter order, stop index): the first prefix of the order whose
    ballots alone decide the election.  The prefix is always a deciding
    subset.
    """
    if inst.protocol is not Protocol.PLURALITY:
        raise ValueError("the elicitation order shortcut applies to plurality only")
    w = winner(inst.protocol, inst.predicted, inst.m).tiebreak_winner
    order = _grouped_order(inst.predicted, inst.m, frozenset({w}))
    n = inst.n
    for stop in range(n + 1):
        known = tuple(inst.predicted[v] for v in order[:stop])
        if termination.decided(PartialProfile(inst.protocol, inst.m, known, n - stop), budget) is not None:
            return tuple(order), stop
    raise AssertionError("a full profile always decides")  # pragma: no cover


@dataclass
class CoarseState:
    """What a whole-ballot policy may look at when choosing the next voter."""

    protocol: Protocol
    m: int
    n: int
    predicted: tuple[Ballot, ...] | None
    responses: list[tuple[int, Ballot]] = field(default_factory=list)

    @property
    def asked(self) -> set[int]:
        return {v for v, _ in self.responses}


class FixedOrder:
    """Query voters in input order."""

    def next_voter(self, state: CoarseState) -> int:
        asked = state.asked
        return next(v for v in range(state.n) if v not in asked)


class RoundRobin:
    """Cycle over candidates in ascending index, one supporter each pass."""

    def next_voter(self, state: CoarseState) -> int:
        order = _grouped_order(state.predicted, state.m, frozenset())
        asked = state.asked
        return next(v for v in order if v not in asked)


class PredictedWinnerFirst:
    """Predicted co-winner supporters first, then rivals round-robin."""

    def next_voter(self, state: CoarseState) -> int:
        winners = winner(state.protocol, state.predicted, state.m).winner_set
        order = _grouped_order(state.predicted, state.m, winners)
        asked = state.asked
        return next(v for v in order if v not in asked)


class RandomOrder:
    """Seeded random voter order, fixed per policy instance."""

    def __init__(self, seed: int):
        self.seed = seed

    def next_voter(self, state: CoarseState) -> int:
        order = list(range(state.n))
        random.Random(self.seed).shuffle(order)
        asked = state.asked
        return next(v for v in order if v not in asked)


def simulate_coarse(policy, true_profile, predicted, protocol: Protocol, m: int,
                    budget: int = DEFAULT_BUDGET) -> ElicitationTranscript:
    """Elicit whole ballots in policy order until the outcome is decided.

    The policy sees the predicted ballots; responses come from the true
    profile, so the transcript's outcome always equals the full-profile
    winner even when every suspicion is wrong.
    """
    true_profile = tuple(true_profile)
    predicted = tuple(predicted) if predicted is not None else None
    validate_ballots(protocol, true_profile, m)
    n = len(true_profile)
    state = CoarseState(protocol, m, n, predicted)
    entries: list[tuple] = []
    elicited: list[Ballot] = []
    while True:
        partial = PartialProfile(protocol, m, tuple(elicited), n - len(elicited))
        if termination.decided(partial, budget) is not None:
            break
        v = policy.next_voter(state)
        if v in state.asked or not 0 <= v < n:
            raise ValueError(f"policy proposed an invalid or repeated voter: {v}")
        ballot = true_profile[v]
        state.responses.append((v, ballot))
        elicited.append(ballot)
        entries.append((v, BALLOT_QUERY, ballot))
    outcome = winner(protocol, true_profile, m)
    return ElicitationTranscript(tuple(entries), len(entries), outcome, len(entries) < n)


# ---------------------------------------------------------------------------
# Whole-ballot elicitation trees


@dataclass(frozen=True)
class CoarseTreeNode:
    """A whole-ballot elicitation tree node.

    Internal nodes carry the agent to query and one child per possible
    ballot; leaves may carry a claimed winning candidate.
    """

    agent: int | None = None
    children: tuple[tuple[Ballot, "CoarseTreeNode"], ...] | None = None
    outcome: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.agent is None

    def child_map(self) -> dict[Ballot, "CoarseTreeNode"]:
        return dict(self.children or ())


def validate_coarse_tree(tree: CoarseTreeNode, protocol: Protocol, m: int, n: int,
                         node_budget: int = DEFAULT_NODE_BUDGET,
                         budget: int = DEFAULT_BUDGET) -> bool:
    """Is the tree a valid whole-ballot elicitation tree for this election?

    Valid means: no agent repeats on a root-to-leaf path, every internal node
    has exactly one child per possible ballot of its agent, and the ballots
    accumulated along the path to each leaf decide the election (matching the
    leaf's claimed outcome when present).
    """
    space = set(all_ballots(protocol, m))
    visited = 0

    def walk(node: CoarseTreeNode, seen: frozenset[int], known: tuple[Ballot, ...]) -> bool:
        nonlocal visited
        visited += 1
        if visited > node_budget:
            raise BudgetExceededError(f"tree exceeds the node budget of {node_budget}")
        if node.is_leaf:
            w = termination.decided(PartialProfile(protocol, m, known, n - len(known)), budget)
            if w is None:
                return False
            return node.outcome is None or node.outcome == w
        if not 0 <= node.agent < n or node.agent in seen:
            return False
        child_map = node.child_map()
        if set(child_map) != space:
            return False
        seen = seen | {node.agent}
        return all(walk(child, seen, known + (ballot,)) for ballot, child in sorted(
            child_map.items(), key=lambda kv: str(kv[0])))

    return walk(tree, frozenset(), ())


# ---------------------------------------------------------------------------
# Per-query (fine) elicitation


@dataclass(frozen=True)
class ApproveCandidate:
    """Ask a voter whether it approves one candidate (approval elections)."""

    voter: int
    candidate: int


@dataclass(frozen=True)
class NextPreferred:
    """Ask a voter for its most preferred candidate not yet reported."""

    voter: int


FineQuery = ApproveCandidate | NextPreferred


class PartialInformation:
    """Partial ballot knowledge with conservative per-candidate score bounds.

    For approval elections knowledge is a tri-state per (voter, candidate)
    cell; for ranking protocols it is a known prefix of each voter's order.
    The winner-set test is sound for every protocol and exact for approval:
    score intervals may ignore joint constraints between a ballot's cells,
    which can only delay the determination, never fake it.
    """

    def __init__(self, protocol: Protocol, m: int, n: int):
        self.protocol = protocol
        self.m = m
        self.n = n
        if protocol is Protocol.APPROVAL:
            self.cells: list[dict[int, bool]] = [{} for _ in range(n)]
            self.prefixes = None
        else:
            self.cells = None
            self.prefixes: list[list[int]] = [[] for _ in range(n)]

    # -- updates

    def set_cell(self, voter: int, candidate: int, value: bool) -> None:
        if candidate in self.cells[voter]:
            raise ValueError(f"cell ({voter}, {candidate}) already resolved")
        self.cells[voter][candidate] = value

    def extend_prefix(self, voter: int, candidate: int) -> None:
        prefix = self.prefixes[voter]
        if candidate in prefix:
            raise ValueError(f"candidate {candidate} already reported by voter {voter}")
        prefix.append(candidate)
        if len(prefix) == self.m - 1:  # the last candidate is implied
            prefix.append(next(c for c in range(self.m) if c not in prefix))

    def set_full_ballot(self, voter: int, ballot: Ballot) -> None:
        if self.protocol is Protocol.APPROVAL:
            self.cells[voter] = {c: c in ballot.approved for c in range(self.m)}
        else:
            self.prefixes[voter] = list(ballot.order)

    # -- queries about the state

    def is_resolved(self, voter: int, candidate: int) -> bool:
        return candidate in self.cells[voter]

    def prefix_complete(self, voter: int) -> bool:
        return len(self.prefixes[voter]) >= self.m

    def all_known(self) -> bool:
        if self.protocol is Protocol.APPROVAL:
            return all(len(c) == self.m for c in self.cells)
        return all(self.prefix_complete(v) for v in range(self.n))

    # -- score intervals

    def score_intervals(self) -> tuple[list[int], list[int]]:
        protocol, m, n = self.protocol, self.m, self.n
        if protocol is Protocol.APPROVAL:
            low = [0] * m
            high = [0] * m
            for cell in self.cells:
                for c in range(m):
                    known = cell.get(c)
                    if known:
                        low[c] += 1
                        high[c] += 1
                    elif known is None:
                        high[c] += 1
            return low, high
        if protocol is Protocol.PLURALITY:
            low = [0] * m
            unknown = 0
            for prefix in self.prefixes:
                if prefix:
                    low[prefix[0]] += 1
                else:
                    unknown += 1
            return low, [low[c] + unknown for c in range(m)]
        if protocol is Protocol.BORDA:
            low = [0] * m
            high = [0] * m
            for prefix in self.prefixes:
                placed = set(prefix)
                for i, c in enumerate(prefix):
                    low[c] += m - 1 - i
                    high[c] += m - 1 - i
                cap = m - 1 - len(prefix)
                for c in range(m):
                    if c not in placed:
                        high[c] += cap
            return low, high
        if protocol in (Protocol.COPELAND, Protocol.MAXIMIN):
            return self._pairwise_intervals()
        raise ValueError("STV admits no per-candidate score intervals")

    def _pairwise_intervals(self) -> tuple[list[int], list[int]]:
        m, n = self.m, self.n
        sure = [[0] * m for _ in range(m)]  # sure[x][y]: ballots certainly ranking x above y
        for prefix in self.prefixes:
            placed = {c: i for i, c in enumerate(prefix)}
            for x in range(m):
                for y in range(m):
                    if x == y:
                        continue
                    if x in placed and (y not in placed or placed[x] < placed[y]):
                        sure[x][y] += 1
        if self.protocol is Protocol.MAXIMIN:
            low = [min((sure[x][y] for y in range(m) if y != x), default=0) for x in range(m)]
            high = [
                min((n - sure[y][x] for y in range(m) if y != x), default=0)
                for x in range(m)
            ]
            return low, high
        low = [0] * m
        high = [0] * m
        for x in range(m):
            for y in range(m):
                if x == y:
                    continue
                # the pair (x, y) contributes sign(2 * N[x][y] - n), monotone in N[x][y]
                lo_pair = 2 * sure[x][y]
                hi_pair = 2 * (n - sure[y][x])
                low[x] += 1 if lo_pair > n else (0 if lo_pair == n else -1)
                high[x] += 1 if hi_pair > n else (0 if hi_pair == n else -1)
        return low, high

    def determined_winner_set(self) -> frozenset[int] | None:
        """The co-winner set, if it is the same under every consistent completion."""
        m = self.m
        if m == 1:
            return frozenset({0})
        if self.protocol is Protocol.STV:
            if not self.all_known():
                return None
            ballots = tuple(RankingBallot(tuple(p)) for p in self.prefixes)
            return winner(Protocol.STV, ballots, m).winner_set
        low, high = self.score_intervals()
        return winner_set_if_determined(low, high)


def winner_set_if_determined(low, high) -> frozenset[int] | None:
    """Given sound per-candidate score bounds, the forced co-winner set.

    A candidate is surely a co-winner when its lower bound meets every
    rival's upper bound, surely a loser when its upper bound falls below some
    rival's lower bound; if anyone is neither, the set is not yet forced.
    """
    m = len(low)
    if m == 1:
        return frozenset({0})
    sure_in = []
    for x in range(m):
        others_high = max(high[y] for y in range(m) if y != x)
        others_low = max(low[y] for y in range(m) if y != x)
        if low[x] >= others_high:
            sure_in.append(x)
        elif high[x] >= others_low:
            return None
    return frozenset(sure_in)


class FixedOrderFine:
    """Response-independent query order: candidates ascending, voters interleaved."""

    def next_query(self, info: PartialInformation) -> FineQuery | None:
        if info.protocol is Protocol.APPROVAL:
            for candidate in range(info.m):
                for voter in range(info.n):
                    if not info.is_resolved(voter, candidate):
                        return ApproveCandidate(voter, candidate)
            return None
        for depth in range(info.m - 1):
            for voter in range(info.n):
                if len(info.prefixes[voter]) == depth:
                    return NextPreferred(voter)
        return None


class RandomFixedOrderFine:
    """A seeded random but response-independent query order."""

    def __init__(self, seed: int, protocol: Protocol, m: int, n: int):
        rng = random.Random(seed)
        if protocol is Protocol.APPROVAL:
            sequence = [
                ApproveCandidate(v, c) for v in range(n) for c in range(m)
            ]
            rng.shuffle(sequence)
        else:
            slots = [v for v in range(n) for _ in range(m - 1)]
            rng.shuffle(slots)
            sequence = [NextPreferred(v) for v in slots]
        self.sequence = tuple(sequence)

    def next_query(self, info: PartialInformation) -> FineQuery | None:
        for query in self.sequence:
            if isinstance(query, ApproveCandidate):
                if not info.is_resolved(query.voter, query.candidate):
                    return query
            elif not info.prefix_complete(query.voter):
                return query
        return None


def _fallback_query(info: PartialInformation) -> FineQuery | None:
    if info.protocol is Protocol.APPROVAL:
        for voter in range(info.n):
            for candidate in range(info.m):
                if not info.is_resolved(voter, candidate):
                    return ApproveCandidate(voter, candidate)
        return None
    for voter in range(info.n):
        if not info.prefix_complete(voter):
            return NextPreferred(voter)
    return None


def answer_query(query: FineQuery, ballot: Ballot, info: PartialInformation):
    """The truthful response to a query given the voter's actual ballot."""
    if isinstance(query, ApproveCandidate):
        return query.candidate in ballot.approved
    prefix = info.prefixes[query.voter]
    return ballot.order[len(prefix)]


def apply_response(query: FineQuery, response, info: PartialInformation) -> None:
    if isinstance(query, ApproveCandidate):
        info.set_cell(query.voter, query.candidate, bool(response))
    else:
        info.extend_prefix(query.voter, response)


def simulate_fine(policy, true_profile, protocol: Protocol, m: int) -> ElicitationTranscript:
    """Elicit per-candidate queries until the co-winner set is forced.

    Stopping uses the conservative score-interval test, so the simulation may
    ask more queries than information-theoretically necessary but never stops
    before the outcome is certain under every consistent completion.
    """
    true_profile = tuple(true_profile)
    validate_ballots(protocol, true_profile, m)
    n = len(true_profile)
    info = PartialInformation(protocol, m, n)
    entries: list[tuple] = []
    total = n * m if protocol is Protocol.APPROVAL else n * max(m - 1, 0)
    while True:
        if info.determined_winner_set() is not None:
            break
        query = policy.next_query(info) if policy is not None else None
        if query is None:
            query = _fallback_query(info)
        if query is None:
            raise AssertionError("a fully elicited profile is always determined")  # pragma: no cover
        response = answer_query(query, true_profile[query.voter], info)
        apply_response(query, response, info)
        entries.append((query.voter, query, response))
    outcome = winner(protocol, true_profile, m)
    return ElicitationTranscript(tuple(entries), len(entries), outcome, len(entries) < total)


# ---------------------------------------------------------------------------
# Fine elicitation trees and the nondivulging property


@dataclass(frozen=True)
class FineTreeNode:
    """A per-query elicitation tree node.

    Internal nodes carry the queried agent, the query, the agent's still
    consistent ballots, and one child per possible response; leaves carry the
    determined co-winner set.
    """

    agent: int | None = None
    query: object = None
    responses: tuple = ()
    children: tuple["FineTreeNode", ...] = ()
    consistent_votes: frozenset | None = None
    outcome: frozenset[int] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _consistent_ballots(info: PartialInformation, voter: int, m: int) -> frozenset:
    if info.protocol is Protocol.APPROVAL:
        cell = info.cells[voter]
        return frozenset(
            b for b in all_ballots(Protocol.APPROVAL, m)
            if all((c in b.approved) == val for c, val in cell.items())
        )
    prefix = tuple(info.prefixes[voter])
    return frozenset(
        b for b in all_ballots(info.protocol, m) if b.order[: len(prefix)] == prefix
    )


def fine_policy_tree(policy, protocol: Protocol, m: int, n: int,
                     node_budget: int = DEFAULT_NODE_BUDGET) -> FineTreeNode:
    """Materialize a per-query policy (with its stop rule) as an explicit tree."""
    count = 0

    def build(info: PartialInformation) -> FineTreeNode:
        nonlocal count
        count += 1
        if count > node_budget:
            raise BudgetExceededError(f"tree exceeds the node budget of {node_budget}")
        determined = info.determined_winner_set()
        if determined is not None:
            return FineTreeNode(outcome=determined)
        query = policy.next_query(info) if policy is not None else None
        if query is None:
            query = _fallback_query(info)
        if isinstance(query, ApproveCandidate):
            responses: tuple = (False, True)
        else:
            responses = tuple(
                c for c in range(m) if c not in info.prefixes[query.voter]
            )
        children = []
        for response in responses:
            branch = _copy_info(info)
            apply_response(query, response, branch)
            children.append(build(branch))
        return FineTreeNode(
            agent=query.voter,
            query=query,
            responses=responses,
            children=tuple(children),
            consistent_votes=_consistent_ballots(info, query.voter, m),
        )

    return build(PartialInformation(protocol, m, n))


def _copy_info(info: PartialInformation) -> PartialInformation:
    clone = PartialInformation(info.protocol, info.m, info.n)
    if info.protocol is Protocol.APPROVAL:
        clone.cells = [dict(cell) for cell in info.cells]
    else:
        clone.prefixes = [list(p) for p in info.prefixes]
    return clone


def is_nondivulging(tree: FineTreeNode, node_budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """Does each agent's next query depend only on its own previous responses?

    Checks every pair of tree paths: whenever an agent's own (query, response)
    history is identical on two paths, the next query addressed to it must be
    identical too.  Whether a next query arrives at all may still depend on
    other agents' responses.
    """
    next_query_by_history: dict[tuple, object] = {}
    count = 0

    def walk(node: FineTreeNode, histories: dict[int, tuple]) -> bool:
        nonlocal count
        count += 1
        if count > node_budget:
            raise BudgetExceededError(f"tree exceeds the node budget of {node_budget}")
        if node.is_leaf:
            return True
        key = (node.agent, histories.get(node.agent, ()))
        seen = next_query_by_history.get(key, _UNSEEN)
        if seen is _UNSEEN:
            next_query_by_history[key] = node.query
        elif seen != node.query:
            return False
        for response, child in zip(node.responses, node.children):
            branch = dict(histories)
            branch[node.agent] = histories.get(node.agent, ()) + ((node.query, response),)
            if not walk(child, branch):
                return False
        return True

    return walk(tree, {})


_UNSEEN = object()
