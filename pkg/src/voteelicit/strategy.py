"""Voting games under elicitation mechanisms, with exact-rational payoffs.

Agents have finite type spaces, a joint prior, and per-candidate utilities.
A mechanism determines what each agent observes before casting (or while
answering queries): nothing beyond its own type (full elicitation), how many
agents were elicited before it (position-observing whole-ballot
elicitation), or the sequence of queries addressed to it (per-query
elicitation).  Expected utilities are computed exactly over the prior with
uniform-random tie-breaking over co-winners, and the equilibrium check
enumerates every observation-contingent unilateral deviation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    ApprovalBallot,
    Ballot,
    BudgetExceededError,
    Protocol,
    all_ballots,
    validate_ballot,
    winner,
)
from .elicit import (
    ApproveCandidate,
    CoarseState,
    FineQuery,
    NextPreferred,
    PartialInformation,
    _fallback_query,
    apply_response,
)


@dataclass(frozen=True)
class FullElicitation:
    """Every agent casts its ballot knowing nothing but its own type."""


@dataclass(frozen=True)
class CoarsePositionObserving:
    """Whole-ballot elicitation where a queried agent sees how many agents
    were elicited before it."""

    policy: object  # next_voter(CoarseState) -> agent index


@dataclass(frozen=True)
class FineTreeMechanism:
    """Per-query elicitation where an agent sees the queries addressed to it
    and their order."""

    policy: object  # next_query(PartialInformation) -> FineQuery | None


Mechanism = FullElicitation | CoarsePositionObserving | FineTreeMechanism


@dataclass(frozen=True)
class VotingGame:
    """A finite game induced by an election and an elicitation mechanism.

    type_utilities[a][t][c] is agent a's utility for candidate c at its type
    t, as an exact rational; the prior is an explicit table over full type
    profiles summing to one.
    """

    agents: tuple[str, ...]
    type_utilities: tuple[tuple[tuple[Fraction, ...], ...], ...]
    prior: dict[tuple[int, ...], Fraction]
    protocol: Protocol
    m: int
    mechanism: Mechanism
    candidate_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        utilities = tuple(
            tuple(tuple(Fraction(u) for u in per_type) for per_type in per_agent)
            for per_agent in self.type_utilities
        )
        object.__setattr__(self, "type_utilities", utilities)
        if len(utilities) != len(self.agents):
            raise ValueError("one type space per agent is required")
        for per_agent in utilities:
            for per_type in per_agent:
                if len(per_type) != self.m:
                    raise ValueError("each type needs one utility per candidate")
        prior = {tuple(k): Fraction(p) for k, p in self.prior.items()}
        object.__setattr__(self, "prior", prior)
        if sum(prior.values()) != 1:
            raise ValueError("the prior must sum to exactly 1")
        for profile in prior:
            if len(profile) != len(self.agents) or any(
                not 0 <= t < len(utilities[a]) for a, t in enumerate(profile)
            ):
                raise ValueError(f"bad type profile in the prior: {profile}")

    def agent_index(self, name: str) -> int:
        return self.agents.index(name)


# ---------------------------------------------------------------------------
# Strategies


class TruthfulStrategy:
    """Approve exactly the candidates worth at least 1/2, at every observation."""

    def __init__(self, utilities, m: int):
        half = Fraction(1, 2)
        self._ballots = tuple(
            ApprovalBallot(frozenset(c for c in range(m) if per_type[c] >= half))
            for per_type in utilities
        )

    def ballot(self, type_index: int, observation) -> ApprovalBallot:
        return self._ballots[type_index]

    def respond(self, type_index: int, history, query: FineQuery):
        return query.candidate in self._ballots[type_index].approved


class ConstantBallotStrategy:
    """Cast one fixed ballot whatever the type or observation."""

    def __init__(self, ballot: Ballot):
        self._ballot = ballot

    def ballot(self, type_index: int, observation) -> Ballot:
        return self._ballot

    def respond(self, type_index: int, history, query: FineQuery):
        return query.candidate in self._ballot.approved


class OverrideStrategy:
    """A base strategy with selected (type, observation) entries replaced."""

    def __init__(self, base, ballots=None, responses=None):
        self.base = base
        self.ballots = dict(ballots or {})
        self.responses = dict(responses or {})

    def ballot(self, type_index: int, observation) -> Ballot:
        key = (type_index, observation)
        if key in self.ballots:
            return self.ballots[key]
        return self.base.ballot(type_index, observation)

    def respond(self, type_index: int, history, query: FineQuery):
        key = (type_index, history, query)
        if key in self.responses:
            return self.responses[key]
        return self.base.respond(type_index, history, query)


def truthful_strategy(game: VotingGame, agent: int) -> TruthfulStrategy:
    """The threshold strategy for one agent; approval elections only."""
    if game.protocol is not Protocol.APPROVAL:
        raise ValueError("the threshold notion of truth-telling applies to approval only")
    return TruthfulStrategy(game.type_utilities[agent], game.m)


def truthful_profile(game: VotingGame) -> dict[int, TruthfulStrategy]:
    return {a: truthful_strategy(game, a) for a in range(len(game.agents))}


# ---------------------------------------------------------------------------
# Mechanism execution


@dataclass(frozen=True)
class MechanismRun:
    """One play: the outcome lottery plus who observed what."""

    lottery: dict[int, Fraction]
    coarse_positions: dict[int, int]
    transcript: tuple


def outcome_distribution(protocol: Protocol, ballots, m: int) -> dict[int, Fraction]:
    """Uniform lottery over the co-winner set, as exact rationals."""
    out = winner(protocol, tuple(ballots), m)
    share = Fraction(1, len(out.winner_set))
    return {c: share for c in sorted(out.winner_set)}


def _lottery(winner_set: frozenset[int]) -> dict[int, Fraction]:
    share = Fraction(1, len(winner_set))
    return {c: share for c in sorted(winner_set)}


def run_mechanism(game: VotingGame, type_profile: tuple[int, ...], strategies) -> MechanismRun:
    """Play the game's mechanism once with every agent following its strategy.

    Elicitation stops as soon as the co-winner lottery is forced, so the
    outcome never depends on ballots that were never elicited.
    """
    mech = game.mechanism
    n = len(game.agents)
    if isinstance(mech, FullElicitation):
        ballots = tuple(strategies[a].ballot(type_profile[a], None) for a in range(n))
        for ballot in ballots:
            validate_ballot(game.protocol, ballot, game.m)
        return MechanismRun(outcome_distribution(game.protocol, ballots, game.m), {},
                            tuple(enumerate(ballots)))
    if isinstance(mech, CoarsePositionObserving):
        info = PartialInformation(game.protocol, game.m, n)
        state = CoarseState(game.protocol, game.m, n, None)
        positions: dict[int, int] = {}
        entries = []
        while True:
            determined = info.determined_winner_set()
            if determined is not None:
                break
            agent = mech.policy.next_voter(state)
            position = len(state.responses)
            ballot = strategies[agent].ballot(type_profile[agent], position)
            validate_ballot(game.protocol, ballot, game.m)
            positions[agent] = position
            state.responses.append((agent, ballot))
            info.set_full_ballot(agent, ballot)
            entries.append((agent, position, ballot))
        return MechanismRun(_lottery(determined), positions, tuple(entries))
    if isinstance(mech, FineTreeMechanism):
        info = PartialInformation(game.protocol, game.m, n)
        histories: dict[int, tuple] = {a: () for a in range(n)}
        entries = []
        while True:
            determined = info.determined_winner_set()
            if determined is not None:
                break
            query = mech.policy.next_query(info)
            if query is None:
                query = _fallback_query(info)
            history = histories[query.voter]
            response = strategies[query.voter].respond(type_profile[query.voter], history, query)
            apply_response(query, response, info)
            histories[query.voter] = history + ((query, response),)
            entries.append((query.voter, query, response))
        return MechanismRun(_lottery(determined), {}, tuple(entries))
    raise ValueError(f"unknown mechanism: {mech!r}")


def expected_utility(game: VotingGame, strategies, agent: int, type_index: int,
                     given: dict[int, int] | None = None) -> Fraction:
    """E[utility | own type], optionally further conditioned on other agents' types.

    Enumerates the prior's type profiles, plays the mechanism on each, and
    averages the lottery utilities with exact rational arithmetic.
    """
    total = Fraction(0)
    weight = Fraction(0)
    utilities = game.type_utilities[agent][type_index]
    for profile in sorted(game.prior):
        if profile[agent] != type_index:
            continue
        if given is not None and any(profile[a] != t for a, t in given.items()):
            continue
        p = game.prior[profile]
        if p == 0:
            continue
        run = run_mechanism(game, profile, strategies)
        total += p * sum(share * utilities[c] for c, share in run.lottery.items())
        weight += p
    if weight == 0:
        raise ValueError("the conditioning event has probability zero")
    return total / weight


# ---------------------------------------------------------------------------
# Equilibrium verification


@dataclass(frozen=True)
class BneCounterexample:
    """A profitable unilateral deviation: who, at which type and observation,
    switches to what, and the exact conditional utility gain."""

    agent: int
    type_index: int
    observation: object
    action: object
    gain: Fraction
    strategy: object = field(compare=False, default=None)


@dataclass(frozen=True)
class BneResult:
    is_equilibrium: bool
    counterexample: BneCounterexample | None = None


@dataclass(frozen=True)
class _Deviation:
    strategy: object
    observation: object
    action: object


def _approval_closeness(ballot: ApprovalBallot, reference: ApprovalBallot):
    mask = sum(1 << c for c in ballot.approved)
    ref = sum(1 << c for c in reference.approved)
    return (bin(mask ^ ref).count("1"), mask)


def _ballot_options(game: VotingGame, reference: Ballot) -> list[Ballot]:
    space = all_ballots(game.protocol, game.m)
    if game.protocol is Protocol.APPROVAL:
        return sorted(space, key=lambda b: _approval_closeness(b, reference))
    return list(space)


def _own_profiles(game: VotingGame, agent: int, type_index: int):
    return [p for p in sorted(game.prior)
            if p[agent] == type_index and game.prior[p] > 0]


def _full_deviations(game, strategies, agent, type_index):
    base = strategies[agent].ballot(type_index, None)
    for ballot in _ballot_options(game, base):
        if ballot == base:
            continue
        strategy = OverrideStrategy(strategies[agent], ballots={(type_index, None): ballot})
        yield _Deviation(strategy, None, ballot)


def _coarse_deviations(game, strategies, agent, type_index, budget):
    positions: set[int] = set()
    for profile in _own_profiles(game, agent, type_index):
        run = run_mechanism(game, profile, strategies)
        if agent in run.coarse_positions:
            positions.add(run.coarse_positions[agent])
    ordered = sorted(positions)
    if not ordered:
        return
    base = {obs: strategies[agent].ballot(type_index, obs) for obs in ordered}
    options = {obs: _ballot_options(game, base[obs]) for obs in ordered}
    if len(options[ordered[0]]) ** len(ordered) > budget:
        raise BudgetExceededError("the observation-contingent deviation space exceeds the budget")
    ranked = []
    for assignment in itertools.product(*(options[obs] for obs in ordered)):
        mapping = dict(zip(ordered, assignment))
        changed = [obs for obs in ordered if mapping[obs] != base[obs]]
        if not changed:
            continue
        key = (
            len(changed),
            tuple(changed),
            tuple(options[obs].index(mapping[obs]) for obs in changed),
        )
        ranked.append((key, mapping, changed[0]))
    ranked.sort(key=lambda item: item[0])
    for _, mapping, first in ranked:
        strategy = OverrideStrategy(
            strategies[agent],
            ballots={(type_index, obs): b for obs, b in mapping.items()},
        )
        yield _Deviation(strategy, first, mapping[first])


class _NodeMiss(Exception):
    def __init__(self, node):
        self.node = node


class _ProbeStrategy:
    """Responds from a partial table, flagging the first unmapped query node."""

    def __init__(self, table, type_index):
        self.table = table
        self.type_index = type_index

    def ballot(self, type_index, observation):  # pragma: no cover - fine games only
        raise AssertionError("probe strategies answer per-candidate queries only")

    def respond(self, type_index, history, query):
        node = (history, query)
        if node not in self.table:
            raise _NodeMiss(node)
        return self.table[node]


def _fine_deviations(game, strategies, agent, type_index, budget):
    profiles = _own_profiles(game, agent, type_index)
    base = strategies[agent]
    node_order: list = []
    complete: list[dict] = []

    def truthful_response(node):
        history, query = node
        return base.respond(type_index, history, query)

    def expand(partial: dict):
        if len(complete) > budget:
            raise BudgetExceededError("the response-contingent deviation space exceeds the budget")
        missing = None
        for profile in profiles:
            probe = _ProbeStrategy(partial, type_index)
            try:
                run_mechanism(game, profile, {**strategies, agent: probe})
            except _NodeMiss as miss:
                missing = miss.node
                break
        if missing is None:
            complete.append(partial)
            return
        if missing not in node_order:
            node_order.append(missing)
        honest = truthful_response(missing)
        for response in (honest, not honest):
            expand({**partial, missing: response})

    expand({})

    def flips(mapping):
        return tuple(sorted(
            node_order.index(node)
            for node, response in mapping.items()
            if response != truthful_response(node)
        ))

    ranked = sorted(
        ((flips(mapping), mapping) for mapping in complete if flips(mapping)),
        key=lambda item: (len(item[0]), item[0]),
    )
    for flip_indices, mapping in ranked:
        first = node_order[flip_indices[0]]
        strategy = OverrideStrategy(
            base,
            responses={(type_index, *node): r for node, r in mapping.items()},
        )
        yield _Deviation(strategy, first, mapping[first])


def _deviations(game, strategies, agent, type_index, budget):
    mech = game.mechanism
    if isinstance(mech, FullElicitation):
        yield from _full_deviations(game, strategies, agent, type_index)
    elif isinstance(mech, CoarsePositionObserving):
        yield from _coarse_deviations(game, strategies, agent, type_index, budget)
    elif isinstance(mech, FineTreeMechanism):
        yield from _fine_deviations(game, strategies, agent, type_index, budget)
    else:  # pragma: no cover
        raise ValueError(f"unknown mechanism: {mech!r}")


def is_bne(game: VotingGame, strategies, budget: int = 1_000_000) -> BneResult:
    """Is the strategy profile a Bayes-Nash equilibrium?

    For every agent and type, every observation-contingent deviation is
    enumerated exhaustively; the first strictly profitable one (fewest
    changed entries first, then earliest observation, then closest ballot)
    is returned as the counterexample.
    """
    for agent in range(len(game.agents)):
        for type_index in range(len(game.type_utilities[agent])):
            if not _own_profiles(game, agent, type_index):
                continue
            base = expected_utility(game, strategies, agent, type_index)
            for deviation in _deviations(game, strategies, agent, type_index, budget):
                utility = expected_utility(
                    game, {**strategies, agent: deviation.strategy}, agent, type_index
                )
                if utility > base:
                    return BneResult(False, BneCounterexample(
                        agent, type_index, deviation.observation, deviation.action,
                        utility - base, deviation.strategy,
                    ))
    return BneResult(True)


# ---------------------------------------------------------------------------
# The two worked example games


class Theorem7CoarsePolicy:
    """Ask i first; ask j if i approved exactly {c}, else k; then the rest.

    Average-case optimal for the theorem7 game's type distribution under
    truthful play.
    """

    def next_voter(self, state: CoarseState) -> int:
        if not state.responses:
            return 0
        if len(state.responses) == 1:
            return 1 if state.responses[0][1] == ApprovalBallot(frozenset({2})) else 2
        asked = state.asked
        return next(v for v in range(state.n) if v not in asked)


class Theorem9FinePolicy:
    """Ask i about a; branch to two scripted query blocks on the answer.

    Average-case optimal for the theorem9 game's type distribution under
    truthful play; the remaining cells fall to the canonical fallback order.
    """

    def next_query(self, info: PartialInformation) -> FineQuery | None:
        first = info.cells[0].get(0)
        if first is None:
            return ApproveCandidate(0, 0)
        if first is False:
            script = (ApproveCandidate(0, 1), ApproveCandidate(1, 1), ApproveCandidate(1, 2))
        else:
            script = (ApproveCandidate(1, 0), ApproveCandidate(0, 1),
                      ApproveCandidate(1, 1), ApproveCandidate(0, 2))
        for query in script:
            if not info.is_resolved(query.voter, query.candidate):
                return query
        return None


def theorem7_game() -> VotingGame:
    """Three-voter approval game whose position-observing elicitation invites
    a lie that full elicitation does not."""
    f = Fraction
    return VotingGame(
        agents=("i", "j", "k"),
        type_utilities=(
            ((f(0), f(0), f(1)), (f(1), f(0), f(0))),
            ((f(0), f(0), f(1)), (f(0), f(1), f(1))),
            ((f(1), f(1, 4), f(0)),),
        ),
        prior={(ti, tj, 0): f(1, 4) for ti in (0, 1) for tj in (0, 1)},
        protocol=Protocol.APPROVAL,
        m=3,
        mechanism=CoarsePositionObserving(Theorem7CoarsePolicy()),
        candidate_names=("a", "b", "c"),
    )


def theorem9_game() -> VotingGame:
    """Two-voter approval game whose per-query elicitation invites a lie that
    full elicitation does not, even though only own queries are revealed."""
    f = Fraction
    return VotingGame(
        agents=("i", "j"),
        type_utilities=(
            ((f(0), f(1), f(1)), (f(1), f(1), f(0))),
            ((f(1), f(3, 4), f(0)),),
        ),
        prior={(0, 0): f(1, 2), (1, 0): f(1, 2)},
        protocol=Protocol.APPROVAL,
        m=3,
        mechanism=FineTreeMechanism(Theorem9FinePolicy()),
        candidate_names=("a", "b", "c"),
    )
