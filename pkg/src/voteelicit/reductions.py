"""Hardness-reduction instance generators plus brute-force source oracles.

Three constructions map source problems to elicitation decision problems:
exact cover by 3-sets to approval deciding-subset search, exact cover to a
padded positional-scoring deciding-subset search, and the single-remaining-
vote manipulation problem to the prevention question for runoff elections.
The generated instances let the equivalences be validated empirically at
desk scale against the brute-force oracles below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import (
    BudgetExceededError,
    ElectionFormatError,
    PartialProfile,
    Protocol,
    RankingBallot,
    ApprovalBallot,
    all_rankings,
    stv_run,
    validate_ballots,
)
from .elicit import ElicitationInstance

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class ThreeCoverInstance:
    """A 3q-element universe and r subsets of size exactly 3.

    The question: do q of the subsets cover the whole universe?  Duplicate
    subsets are allowed; r > q is required by the generators but not here,
    so vacuous instances (q = 0) stay expressible.
    """

    universe_size: int
    q: int
    subsets: tuple[frozenset[int], ...]

    def __post_init__(self):
        subsets = tuple(frozenset(s) for s in self.subsets)
        object.__setattr__(self, "subsets", subsets)
        if self.universe_size != 3 * self.q or self.q < 0:
            raise ValueError("the universe must have exactly 3q elements")
        for s in subsets:
            if len(s) != 3:
                raise ValueError(f"every subset must have exactly 3 elements, got {sorted(s)}")
            if any(not 0 <= e < self.universe_size for e in s):
                raise ValueError(f"subset element outside the universe: {sorted(s)}")

    @property
    def r(self) -> int:
        return len(self.subsets)


@dataclass(frozen=True)
class EPInstance:
    """Known ranking ballots plus a distinguished candidate c.

    The question: can one additional vote make c the runoff winner?  The
    prevention-instance generator additionally requires some known vote to
    rank c first.
    """

    m: int
    votes: tuple[RankingBallot, ...]
    c: int
    candidate_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "votes", tuple(self.votes))
        validate_ballots(Protocol.STV, self.votes, self.m)
        if not 0 <= self.c < self.m:
            raise ValueError(f"target candidate {self.c} outside 0..{self.m - 1}")
        if self.candidate_names is not None:
            object.__setattr__(self, "candidate_names", tuple(self.candidate_names))

    def has_c_top_vote(self) -> bool:
        return any(v.order[0] == self.c for v in self.votes)


@dataclass(frozen=True)
class BordaReductionParams:
    """Closed-form sizes of the positional-scoring reduction for given (q, r)."""

    q: int
    r: int

    @property
    def padding_size(self) -> int:
        return 64 * self.r * self.r

    @property
    def g(self) -> int:
        return 8 * self.r - 4 * self.q - 4

    @property
    def l(self) -> int:
        return 64 * self.r * self.r + 3 * self.q

    @property
    def k(self) -> int:
        return self.g + self.q

    @property
    def n(self) -> int:
        return self.g + self.r

    @property
    def m(self) -> int:
        return 3 * self.q + 1 + self.padding_size


def _cover_names(q: int, padding: int = 0) -> tuple[str, ...]:
    names = [f"u{i + 1}" for i in range(3 * q)] + ["w"]
    names += [f"b{i + 1}" for i in range(padding)]
    return tuple(names)


def gen_approval_elicitation(tc: ThreeCoverInstance) -> ElicitationInstance:
    """Approval deciding-subset instance equivalent to the cover question.

    Candidates are the universe plus a tagged candidate w (index 3q).  Each
    subset yields one vote approving the subset plus w; r - 2q + 2 further
    votes approve only w, and the budget is k = r - q + 2.
    """
    q, r = tc.q, tc.r
    if r <= q:
        raise ValueError("the construction requires more subsets than the cover size")
    if r < 2 * q - 2:
        raise ValueError("the construction requires r >= 2q - 2; the w-only vote count "
                         "would be negative")
    w = tc.universe_size
    m = w + 1
    votes = [ApprovalBallot(frozenset(s) | {w}) for s in tc.subsets]
    votes.extend([ApprovalBallot(frozenset({w}))] * (r - 2 * q + 2))
    return ElicitationInstance(
        Protocol.APPROVAL, m, tuple(votes), k=r - q + 2,
        tagged_candidate=w, candidate_names=_cover_names(q),
    )


def gen_borda_elicitation(tc: ThreeCoverInstance) -> ElicitationInstance:
    """Positional-scoring deciding-subset instance equivalent to the cover question.

    Candidates are the universe (indices 0..3q-1), the tagged candidate w
    (index 3q), and 64r^2 padding candidates.  Each subset yields a vote
    (front padding half, universe minus the subset, back padding half, the
    subset, w); two mirrored blocks of (8r - 4q - 4) / 2 votes each rank w
    first with the universe wedged between padding runs, so their universe
    positions cancel pairwise.  The budget is k = g + q.
    """
    q, r = tc.q, tc.r
    if r <= q:
        raise ValueError("the construction requires more subsets than the cover size")
    params = BordaReductionParams(q, r)
    if params.g < 0:
        raise ValueError("the construction requires 8r - 4q - 4 >= 0")
    w = 3 * q
    m = params.m
    universe = list(range(3 * q))
    padding = list(range(3 * q + 1, m))
    half = params.padding_size // 2
    front, back = padding[:half], padding[half:]
    votes: list[RankingBallot] = []
    for subset in tc.subsets:
        inside = sorted(subset)
        outside = [u for u in universe if u not in subset]
        votes.append(RankingBallot((*front, *outside, *back, *inside, w)))
    eighth = params.padding_size // 8
    ascending = RankingBallot((w, *padding[:eighth], *universe, *padding[eighth:]))
    descending = RankingBallot((
        w, *reversed(padding[-eighth:]), *reversed(universe), *reversed(padding[:-eighth]),
    ))
    votes.extend([ascending] * (params.g // 2))
    votes.extend([descending] * (params.g // 2))
    return ElicitationInstance(
        Protocol.BORDA, m, tuple(votes), k=params.k,
        tagged_candidate=w, candidate_names=_cover_names(q, params.padding_size),
    )


def gen_stv_not_done(ep: EPInstance) -> tuple[PartialProfile, int]:
    """Runoff prevention instance with one unknown vote, equivalent to the
    single-vote manipulation question.

    A new candidate h is appended to every known vote in last place, except
    that the first vote ranking c first slots h directly behind c; one h-top
    vote per original vote is added.  Returns the partial profile (t = 1)
    and h: h can be prevented from winning exactly when the last vote of the
    source instance can make c win.
    """
    if not ep.has_c_top_vote():
        raise ValueError("the construction requires a known vote ranking the target first")
    h = ep.m
    m = ep.m + 1
    votes: list[RankingBallot] = []
    promoted = False
    for vote in ep.votes:
        if not promoted and vote.order[0] == ep.c:
            votes.append(RankingBallot((ep.c, h, *vote.order[1:])))
            promoted = True
        else:
            votes.append(RankingBallot((*vote.order, h)))
    others = tuple(c for c in range(ep.m))
    votes.extend([RankingBallot((h, *others))] * len(ep.votes))
    names = ep.candidate_names
    if names is None:
        names = tuple(f"c{i}" for i in range(ep.m))
    h_name = next(n for n in ("h", "hh", "h_") if n not in names)
    profile = PartialProfile(Protocol.STV, m, tuple(votes), unknown_count=1,
                             candidate_names=names + (h_name,))
    return profile, h


def solve_3cover(tc: ThreeCoverInstance, budget: int = DEFAULT_BUDGET) -> bool:
    """Exhaustive cover search; q size-3 subsets cover 3q elements only if disjoint."""
    if math.comb(tc.r, min(tc.q, tc.r)) > budget:
        raise BudgetExceededError(f"C({tc.r}, {tc.q}) cover combinations exceed the budget")
    if tc.q == 0:
        return True
    distinct = sorted(set(tc.subsets), key=sorted)

    def extend(start: int, covered: frozenset[int], picks: int) -> bool:
        if picks == tc.q:
            return len(covered) == tc.universe_size
        for i in range(start, len(distinct)):
            subset = distinct[i]
            if covered & subset:
                continue
            if extend(i + 1, covered | subset, picks + 1):
                return True
        return False

    return extend(0, frozenset(), 0)


def solve_effective_preference(ep: EPInstance, budget: int = DEFAULT_BUDGET) -> bool:
    """Can some final vote make c the runoff winner?  Exhaustive over all m! votes."""
    if math.factorial(ep.m) > budget:
        raise BudgetExceededError(f"{ep.m}! final votes exceed the budget of {budget}")
    for last in all_rankings(ep.m):
        if stv_run(ep.votes + (last,), ep.m).tiebreak_winner == ep.c:
            return True
    return False


# ---------------------------------------------------------------------------
# Instance file formats
#
# Cover instances:           EP instances:
#   universe: 6                protocol: stv
#   subset: 0 1 2              candidates: a b c
#   subset: 3 4 5              ranking: a b c
#                              target: a


def parse_3cover(text: str) -> ThreeCoverInstance:
    """Parse 'universe: 3q' followed by 'subset: i j k' lines."""
    universe: int | None = None
    subsets: list[frozenset[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        tokens = rest.split()
        if not sep:
            raise ElectionFormatError(f"line {lineno}: expected '<key>: <values>'")
        if universe is None:
            if key != "universe" or len(tokens) != 1 or not tokens[0].isdigit():
                raise ElectionFormatError(f"line {lineno}: expected 'universe: <3q>'")
            universe = int(tokens[0])
            if universe % 3:
                raise ElectionFormatError(f"line {lineno}: the universe size must be a multiple of 3")
        elif key == "subset":
            if len(tokens) != 3 or not all(t.isdigit() for t in tokens):
                raise ElectionFormatError(f"line {lineno}: expected 'subset: <i> <j> <k>'")
            elements = frozenset(int(t) for t in tokens)
            if len(elements) != 3 or any(e >= universe for e in elements):
                raise ElectionFormatError(f"line {lineno}: subset must name 3 distinct universe elements")
            subsets.append(elements)
        else:
            raise ElectionFormatError(f"line {lineno}: unknown entry {key!r}")
    if universe is None:
        raise ElectionFormatError("missing 'universe:' entry")
    return ThreeCoverInstance(universe, universe // 3, tuple(subsets))


def serialize_3cover(tc: ThreeCoverInstance) -> str:
    lines = [f"universe: {tc.universe_size}"]
    lines += [f"subset: {' '.join(str(e) for e in sorted(s))}" for s in tc.subsets]
    return "\n".join(lines) + "\n"


def parse_ep(text: str) -> EPInstance:
    """Parse a runoff election file with an extra 'target: <candidate>' line."""
    from .core import parse_election  # local import keeps module load cheap

    target_name: str | None = None
    kept: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line.startswith("target:"):
            tokens = line.partition(":")[2].split()
            if len(tokens) != 1:
                raise ElectionFormatError(f"line {lineno}: expected 'target: <candidate>'")
            if target_name is not None:
                raise ElectionFormatError(f"line {lineno}: duplicate 'target:' entry")
            target_name = tokens[0]
        else:
            kept.append(raw)
    if target_name is None:
        raise ElectionFormatError("missing 'target:' entry")
    profile = parse_election("\n".join(kept))
    if profile.protocol is not Protocol.STV:
        raise ElectionFormatError("manipulation instances must use the stv protocol")
    if profile.unknown_count:
        raise ElectionFormatError("manipulation instances list known votes only; drop 'unknown:'")
    if target_name not in profile.candidate_names:
        raise ElectionFormatError(f"unknown target candidate {target_name!r}")
    return EPInstance(profile.m, profile.known, profile.candidate_names.index(target_name),
                      profile.candidate_names)
