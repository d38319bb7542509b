"""Incentive-compatibility checks and the spanning preorder on distributions.

A two-option mechanism is incentive compatible (IC) under a distribution
exactly when three equivalent conditions hold:

  * the raw truth-telling inequalities, one per (type, report) pair;
  * every interim expectation E[x(report, .) | type] equals the ex-ante
    value E[x], for every type and every report;
  * agents are ex-ante indifferent between reports AND their type
    realizations are uninformative about their interim expectation.

``check_ic`` evaluates all three routes independently and insists they
agree.  The module also decides the spanning preorder (can every interim
belief under one distribution be written as a linear combination of
interim beliefs under another?) and classifies its extreme elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (JointDist, Mechanism, PreconditionError, expectation,
                   two_agent)
from .numerics import span_coefficients

ZERO = Fraction(0)


@dataclass
class Violation:
    """A profitable deviation: ``agent`` of type ``true_type`` gains ``gain``
    by reporting ``deviation`` instead."""

    agent: str
    true_type: object
    deviation: object
    gain: Fraction


@dataclass
class ICReport:
    """Verdict plus witnesses for an incentive-compatibility check.

    ``interim`` maps (agent, true type, report) to the interim expectation
    E[x(report, .) | true type].  ``gain_weighting`` records whether the
    violation gains are measured against conditional beliefs ("conditional")
    or against the joint distribution ("joint", as in the obedience view of
    the auxiliary game); the two scales differ by the positive factor
    pi_i(type), so the verdicts always coincide.
    """

    verdict: bool
    violations: list[Violation] = field(default_factory=list)
    interim: dict | None = None
    common_value: Fraction | None = None
    ex_ante_indifferent: bool | None = None
    uninformative: bool | None = None
    gain_weighting: str = "conditional"


def interim_table(x: Mechanism, dist: JointDist) -> dict:
    """All interim expectations E[x(report, .) | true type], both agents."""
    two_agent(dist.space)
    space = dist.space
    table: dict = {}
    for i, agent in enumerate(space.agents):
        cond = dist.conditional(i)
        for a, true_t in enumerate(space.types[i]):
            for b, rep_t in enumerate(space.types[i]):
                if i == 0:
                    val = sum(cond[a, s] * x.x[b, s]
                              for s in range(space.shape[1]))
                else:
                    val = sum(cond[a, s] * x.x[s, b]
                              for s in range(space.shape[0]))
                table[(agent, true_t, rep_t)] = val
    return table


def check_ic(x: Mechanism, dist: JointDist) -> ICReport:
    """Full IC check via raw inequalities, interim equalities and the
    indifference/uninformativeness split; the three must agree."""
    two_agent(dist.space)
    if x.space != dist.space:
        raise PreconditionError("mechanism and distribution type spaces differ")
    space = dist.space
    table = interim_table(x, dist)
    ev = expectation(dist, x.x)

    violations: list[Violation] = []
    for i, agent in enumerate(space.agents):
        for true_t in space.types[i]:
            truthful = table[(agent, true_t, true_t)]
            for rep_t in space.types[i]:
                if rep_t == true_t:
                    continue
                deviated = table[(agent, true_t, rep_t)]
                # Agent 0 wants the first option (high x); agent 1 the second.
                gain = deviated - truthful if i == 0 else truthful - deviated
                if gain > 0:
                    violations.append(Violation(agent, true_t, rep_t, gain))
    raw_ok = not violations

    equalities_ok = all(val == ev for val in table.values())

    # Ex-ante indifference: E[x(report, .)] identical across reports.
    marg = dist.marginals()
    ex_ante_ok = True
    for i in range(2):
        vals = []
        for b in range(space.shape[i]):
            if i == 0:
                vals.append(sum(marg[1][s] * x.x[b, s]
                                for s in range(space.shape[1])))
            else:
                vals.append(sum(marg[0][s] * x.x[s, b]
                                for s in range(space.shape[0])))
        if any(v != vals[0] for v in vals[1:]):
            ex_ante_ok = False
        if i == 0:
            ex_ante_l = vals
        else:
            ex_ante_r = vals

    uninformative_ok = True
    for i, agent in enumerate(space.agents):
        ex_ante = ex_ante_l if i == 0 else ex_ante_r
        for true_t in space.types[i]:
            for b, rep_t in enumerate(space.types[i]):
                if table[(agent, true_t, rep_t)] != ex_ante[b]:
                    uninformative_ok = False

    split_ok = ex_ante_ok and uninformative_ok
    assert raw_ok == equalities_ok == split_ok, "IC routes disagree (bug)"
    return ICReport(verdict=raw_ok, violations=violations, interim=table,
                    common_value=ev if raw_ok else None,
                    ex_ante_indifferent=ex_ante_ok,
                    uninformative=uninformative_ok)


def ic_polytope(dist: JointDist) -> list[list[Fraction]]:
    """Homogeneous equality rows characterizing the IC mechanisms.

    Each row r (over flat profile indices) encodes
    sum_{other} pi(other | type) * x(report, other) - E_pi[x] = 0.
    Duplicate and identically-zero rows are dropped; together with
    0 <= x <= 1 these rows cut out exactly the IC polytope.
    """
    two_agent(dist.space)
    space = dist.space
    n = space.n_profiles
    shape = space.shape
    pi_flat = [dist.p[np.unravel_index(k, shape)] for k in range(n)]
    rows: list[list[Fraction]] = []
    seen: set[tuple] = set()
    for i in range(2):
        cond = dist.conditional(i)
        for a in range(shape[i]):
            for b in range(shape[i]):
                row = [-p for p in pi_flat]
                for s in range(shape[1 - i]):
                    idx = (b, s) if i == 0 else (s, b)
                    flat = idx[0] * shape[1] + idx[1]
                    row[flat] += cond[a, s]
                key = tuple(row)
                if any(v != 0 for v in row) and key not in seen:
                    seen.add(key)
                    rows.append(row)
    return rows


@dataclass
class SpanningVerdict:
    """Outcome of a spanning test between two distributions.

    When ``spans`` holds, ``coefficients[(agent, t)]`` gives, for the
    belief that type t holds under the spanned distribution, the weight
    placed on each conditioning type's belief under the spanning one; the
    stored weights reproduce the target belief exactly.  Otherwise
    ``witnesses`` lists every (agent, type) whose belief is unreachable.
    """

    spans: bool
    coefficients: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)


def spans(pi: JointDist, pi_tilde: JointDist) -> SpanningVerdict:
    """Does ``pi`` span ``pi_tilde``?  Exact rank/solvability test.

    True iff for each agent every interim belief under ``pi_tilde`` is a
    linear combination of that agent's interim beliefs under ``pi``.
    """
    two_agent(pi.space)
    if pi.space != pi_tilde.space:
        raise PreconditionError("spanning requires a common type space")
    space = pi.space
    coefficients: dict = {}
    witnesses: list = []
    for i, agent in enumerate(space.agents):
        gens = [list(row) for row in pi.conditional(i)]
        cond_tilde = pi_tilde.conditional(i)
        for a, t in enumerate(space.types[i]):
            target = list(cond_tilde[a])
            coeffs = span_coefficients(target, gens)
            if coeffs is None:
                witnesses.append((agent, t))
            else:
                coefficients[(agent, t)] = {
                    tt: c for tt, c in zip(space.types[i], coeffs)}
    ok = not witnesses
    return SpanningVerdict(spans=ok,
                           coefficients=coefficients if ok else {},
                           witnesses=witnesses)


def classify_extremes(pi: JointDist) -> dict:
    """Place a distribution within the spanning preorder.

    Maximal elements are exactly the full-rank distributions (rank equal to
    the smaller type count: their beliefs span everything spanning them);
    minimal elements are exactly the independent distributions.
    """
    two_agent(pi.space)
    r = pi.matrix_rank()
    return {"maximal": r == min(pi.space.shape),
            "minimal": pi.is_independent()}
