"""Deciding whether still-unknown votes can change who wins.

The central question: given known ballots, t unknown votes, and a candidate h,
can the t votes be cast so that h does not win?  For the four score-based
ranking protocols and Approval an extremal per-challenger completion answers
this exactly in polynomial time; STV requires exhaustive search over
completions, guarded by a work budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .core import (
    ApprovalBallot,
    Ballot,
    BudgetExceededError,
    PartialProfile,
    Protocol,
    RankingBallot,
    all_ballots,
    all_rankings,
    stv_run,
    winner,
)

DEFAULT_BUDGET = 10_000_000


@dataclass(frozen=True)
class PreventionResult:
    """Whether h's win can still be prevented, with a realizing completion.

    When preventable, replaying known + witness through winner determination
    yields a tie-break winner other than h; challenger is that winner.
    """

    preventable: bool
    witness: tuple[Ballot, ...] | None = None
    challenger: int | None = None


def _check_candidate(candidate: int, m: int, what: str) -> None:
    if not 0 <= candidate < m:
        raise ValueError(f"{what} {candidate} outside 0..{m - 1}")


def adversarial_completion(partial: PartialProfile, g: int, h: int) -> tuple[Ballot, ...]:
    """The t remaining ballots that most favor g over h.

    Rankings put g first, h last, and the rest in ascending index order;
    Approval ballots approve exactly {g}.  No other completion yields a larger
    final score for g or a smaller one for h, because per-ballot contributions
    to g's and h's scores (or pairwise tallies) are independent and extremal.
    """
    protocol = partial.protocol
    if protocol is Protocol.STV:
        raise ValueError("STV has no extremal completion; prevention needs exhaustive search")
    _check_candidate(g, partial.m, "challenger")
    _check_candidate(h, partial.m, "candidate")
    if g == h:
        raise ValueError("challenger and target candidate must differ")
    if protocol is Protocol.APPROVAL:
        ballot: Ballot = ApprovalBallot(frozenset({g}))
    else:
        middle = tuple(c for c in range(partial.m) if c != g and c != h)
        ballot = RankingBallot((g, *middle, h))
    return (ballot,) * partial.unknown_count


def _completion_count(space_size: int, t: int) -> int:
    # completions are multisets of t ballots: unknown voters are anonymous
    return math.comb(space_size + t - 1, t) if t else 1


def can_prevent_win(partial: PartialProfile, h: int, budget: int = DEFAULT_BUDGET) -> PreventionResult:
    """Can the unknown votes be cast so that h is not the tie-break winner?

    Exact for every protocol: each non-STV challenger is tested with its
    extremal completion; STV enumerates all multisets of completions within
    the budget (raising BudgetExceededError beyond it).
    """
    _check_candidate(h, partial.m, "candidate")
    if partial.protocol is Protocol.STV:
        return _prevent_stv(partial, h, budget)
    for g in range(partial.m):
        if g == h:
            continue
        completion = adversarial_completion(partial, g, h)
        outcome = winner(partial.protocol, partial.known + completion, partial.m)
        if outcome.tiebreak_winner != h:
            return PreventionResult(True, completion, outcome.tiebreak_winner)
    return PreventionResult(False)


def _prevent_stv(partial: PartialProfile, h: int, budget: int) -> PreventionResult:
    space = all_rankings(partial.m)
    count = _completion_count(len(space), partial.unknown_count)
    if count > budget:
        raise BudgetExceededError(
            f"STV prevention needs {count} completions, budget is {budget}; "
            "shrink m or the unknown count, or raise the budget"
        )
    for completion in itertools.combinations_with_replacement(space, partial.unknown_count):
        outcome = stv_run(partial.known + completion, partial.m)
        if outcome.tiebreak_winner != h:
            return PreventionResult(True, completion, outcome.tiebreak_winner)
    return PreventionResult(False)


def brute_force_prevent(partial: PartialProfile, h: int, budget: int = DEFAULT_BUDGET) -> PreventionResult:
    """Validation oracle: exhaustive enumeration of all completions."""
    _check_candidate(h, partial.m, "candidate")
    space = all_ballots(partial.protocol, partial.m)
    count = _completion_count(len(space), partial.unknown_count)
    if count > budget:
        raise BudgetExceededError(f"{count} completions exceed the budget of {budget}")
    for completion in itertools.combinations_with_replacement(space, partial.unknown_count):
        outcome = winner(partial.protocol, partial.known + completion, partial.m)
        if outcome.tiebreak_winner != h:
            return PreventionResult(True, completion, outcome.tiebreak_winner)
    return PreventionResult(False)


def _fixed_completion(partial: PartialProfile) -> tuple[Ballot, ...]:
    if partial.protocol is Protocol.APPROVAL:
        ballot: Ballot = ApprovalBallot(frozenset())
    else:
        ballot = RankingBallot(tuple(range(partial.m)))
    return (ballot,) * partial.unknown_count


def decided(partial: PartialProfile, budget: int = DEFAULT_BUDGET) -> int | None:
    """The candidate that wins under every completion, or None if undecided.

    Picks the winner w of one fixed completion, then confirms no completion
    can prevent w; if some can, no candidate wins universally.
    """
    fixed = _fixed_completion(partial)
    w = winner(partial.protocol, partial.known + fixed, partial.m).tiebreak_winner
    if partial.unknown_count == 0:
        return w
    if can_prevent_win(partial, w, budget).preventable:
        return None
    return w
