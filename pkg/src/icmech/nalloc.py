"""Allocating one good among n agents with independent types.

Each agent wants the good; the principal's value from giving it to agent i
may depend on everybody's types.  A mechanism is IC exactly when each
agent's interim probability of receiving the good does not depend on his
report.  When the principal is unbiased (equal expected values across
agents), a profitable mechanism exists iff the values fail to be
"difference-additive": v_i - v_j does not split as u_i(type_i) -
u_j(type_j).  Free disposal reduces to the same analysis with an extra
dummy agent holding a singleton type and zero value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (JointDist, NoneCertificate, PreconditionError, SchemaError,
                   TypeSpace, load_json_dict, constant_array, dumps_canonical,
                   parse_rational_array, parse_type_space, product_dist,
                   to_nested_strings)
from .numerics import orthogonal_projection, span_coefficients

ZERO = Fraction(0)
ONE = Fraction(1)

DISPOSAL_AGENT = "disposal"


@dataclass
class AllocationInstance:
    """Independent-types allocation problem.

    ``values[i]`` is the principal's payoff tensor for allocating to agent
    i, indexed by full type profile.  ``dist`` is the product of the
    per-agent marginals (independence is part of the model here).
    """

    space: TypeSpace
    marginals: tuple[np.ndarray, ...]
    values: tuple[np.ndarray, ...]
    disposal: bool
    name: str | None = None
    seed: int | None = None
    dist: JointDist = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.marginals) != self.space.n_agents or \
                len(self.values) != self.space.n_agents:
            raise SchemaError("need one marginal and one value tensor per agent")
        for v in self.values:
            if v.shape != self.space.shape:
                raise SchemaError("value tensor shape mismatch")
        self.dist = product_dist(self.space, list(self.marginals))

    @classmethod
    def build(cls, agents, types, marginals, values, disposal,
              name=None, seed=None) -> "AllocationInstance":
        """Construct from plain nested data (labels, rational strings/ints)."""
        space = TypeSpace(tuple(agents), tuple(tuple(t) for t in types))
        margs = tuple(
            parse_rational_array(list(marginals[a]), (space.shape[i],), f"marginals[{a}]")
            for i, a in enumerate(space.agents))
        vals = tuple(
            parse_rational_array(values[a], space.shape, f"v[{a}]")
            for a in space.agents)
        return cls(space, margs, vals, bool(disposal), name=name, seed=seed)

    @property
    def n(self) -> int:
        return self.space.n_agents

    def expected_value(self, i: int) -> Fraction:
        total = ZERO
        for idx in np.ndindex(*self.space.shape):
            total += self.dist.p[idx] * self.values[i][idx]
        return total

    @property
    def expected_values(self) -> list[Fraction]:
        return [self.expected_value(i) for i in range(self.n)]

    @property
    def vbar(self) -> Fraction:
        return max(self.expected_values)

    @property
    def unbiased(self) -> bool:
        evs = self.expected_values
        return all(e == evs[0] for e in evs)


class AllocationMechanism:
    """Per-agent allocation probabilities: x_i >= 0 and the total over
    agents equals 1 (no disposal) or at most 1 (disposal), exactly."""

    def __init__(self, space: TypeSpace, parts, disposal: bool):
        parts = tuple(np.asarray(p, dtype=object) for p in parts)
        if len(parts) != space.n_agents:
            raise SchemaError("need one allocation tensor per agent")
        for p in parts:
            if p.shape != space.shape:
                raise SchemaError("allocation tensor shape mismatch")
            for v in p.reshape(-1):
                if not isinstance(v, Fraction) or v < 0:
                    raise SchemaError("allocation probabilities must be "
                                      "nonnegative rationals")
        for idx in np.ndindex(*space.shape):
            total = sum(p[idx] for p in parts)
            if disposal and total > 1:
                raise SchemaError("allocation probabilities exceed 1")
            if not disposal and total != 1:
                raise SchemaError("allocation probabilities must sum to "
                                  "exactly 1 at every profile")
        self.space = space
        self.x = parts
        self.disposal = disposal


@dataclass
class AllocationICReport:
    """Interim allocation probabilities per (agent, type) and the verdict
    that they are constant in the agent's own type."""

    verdict: bool
    interim: dict
    ex_ante: list[Fraction]
    violations: list = field(default_factory=list)


def _interim_prob(inst: AllocationInstance, part: np.ndarray,
                  agent: int, pos: int) -> Fraction:
    """E[x_i(t, others)] with agent ``agent`` fixed to type position ``pos``."""
    total = ZERO
    for idx in np.ndindex(*inst.space.shape):
        if idx[agent] != pos:
            continue
        weight = ONE
        for j, p in enumerate(idx):
            if j != agent:
                weight *= inst.marginals[j][p]
        total += weight * part[idx]
    return total


def check_ic_n(x: AllocationMechanism, inst: AllocationInstance) -> AllocationICReport:
    """IC test for allocation mechanisms: interim win probabilities must be
    report-independent for every agent.  Infeasible mechanisms are rejected."""
    if x.space != inst.space:
        raise PreconditionError("mechanism and instance type spaces differ")
    for idx in np.ndindex(*inst.space.shape):
        total = sum(p[idx] for p in x.x)
        if inst.disposal:
            if total > 1:
                raise PreconditionError("mechanism infeasible: total exceeds 1")
        elif total != 1:
            raise PreconditionError(
                "mechanism infeasible: the good must always be allocated")
    interim: dict = {}
    ex_ante: list[Fraction] = []
    violations = []
    verdict = True
    for i, agent in enumerate(inst.space.agents):
        vals = []
        for pos, label in enumerate(inst.space.types[i]):
            val = _interim_prob(inst, x.x[i], i, pos)
            interim[(agent, label)] = val
            vals.append(val)
        ex_ante.append(sum(inst.marginals[i][pos] * vals[pos]
                           for pos in range(len(vals))))
        for pos, label in enumerate(inst.space.types[i]):
            for pos2, label2 in enumerate(inst.space.types[i]):
                gain = vals[pos2] - vals[pos]
                if gain > 0:
                    verdict = False
                    violations.append((agent, label, label2, gain))
    return AllocationICReport(verdict=verdict, interim=interim,
                              ex_ante=ex_ante, violations=violations)


# ---------------------------------------------------------------------------
# Difference-additivity and the explicit construction
# ---------------------------------------------------------------------------

@dataclass
class DifferenceAdditiveReport:
    """Can the value differences v_i - v_n be split into per-type terms?

    ``holds`` iff the weighted differences pi * (v_i - v_n) lie in the
    subspace W of functions pi * (u_i(type_i) - u_n(type_n)); then ``u``
    realizes the split (pairwise splittings for all (i, j) follow).
    Otherwise ``residual`` is the nonzero component orthogonal to W.
    """

    holds: bool
    u: dict | None
    residual: np.ndarray | None
    tilde_v: np.ndarray
    projection: np.ndarray


def _w_generators(inst: AllocationInstance) -> tuple[list[list[Fraction]], list[tuple]]:
    """Generators of W, one per (agent j, type t), as flat vectors on
    {1..n-1} x profiles.  The reference agent's generators carry the minus
    sign so the stored coefficient is u_n(t) itself."""
    n = inst.n
    shape = inst.space.shape
    size = inst.space.n_profiles
    prob = inst.dist.p
    gens: list[list[Fraction]] = []
    keys: list[tuple] = []
    for j in range(n):
        for pos in range(shape[j]):
            g = [ZERO] * ((n - 1) * size)
            for flat, idx in enumerate(np.ndindex(*shape)):
                if idx[j] != pos:
                    continue
                if j < n - 1:
                    g[j * size + flat] = prob[idx]
                else:
                    for i in range(n - 1):
                        g[i * size + flat] = -prob[idx]
            gens.append(g)
            keys.append((inst.space.agents[j], inst.space.types[j][pos]))
    return gens, keys


def difference_additive(inst: AllocationInstance) -> DifferenceAdditiveReport:
    """Decide v_i(theta) - v_j(theta) = u_i(theta_i) - u_j(theta_j) by exact
    projection of the weighted differences onto W."""
    if inst.n < 2:
        raise PreconditionError("difference-additivity needs at least two agents")
    n = inst.n
    shape = inst.space.shape
    size = inst.space.n_profiles
    prob = inst.dist.p
    ref = inst.values[n - 1]
    tilde = np.empty((n - 1,) + shape, dtype=object)
    for i in range(n - 1):
        tilde[i] = prob * (inst.values[i] - ref)
    flat = [tilde[(i,) + idx] for i in range(n - 1)
            for idx in np.ndindex(*shape)]
    gens, keys = _w_generators(inst)
    proj, resid = orthogonal_projection(flat, gens)
    holds = all(v == 0 for v in resid)
    u = None
    residual = None
    projection = np.array(proj, dtype=object).reshape((n - 1,) + shape)
    if holds:
        coeffs = span_coefficients(flat, gens)
        assert coeffs is not None
        u = {}
        for (agent, label), c in zip(keys, coeffs):
            u.setdefault(agent, {})[label] = c
        _verify_split(inst, u)
    else:
        residual = np.array(resid, dtype=object).reshape((n - 1,) + shape)
    return DifferenceAdditiveReport(holds=holds, u=u, residual=residual,
                                    tilde_v=tilde, projection=projection)


def _verify_split(inst: AllocationInstance, u: dict) -> None:
    agents = inst.space.agents
    for i in range(inst.n):
        for j in range(inst.n):
            for idx, profile in zip(np.ndindex(*inst.space.shape),
                                    inst.space.profiles()):
                lhs = inst.values[i][idx] - inst.values[j][idx]
                rhs = u[agents[i]][profile[i]] - u[agents[j]][profile[j]]
                assert lhs == rhs


@dataclass
class NAllocReport:
    """A verified profitable allocation mechanism built from the projection
    residual, with its exact audit trail."""

    vbar: Fraction
    condition_holds: bool
    profitable: bool
    payoff: Fraction
    mechanism: AllocationMechanism
    alpha: Fraction
    residual: np.ndarray
    z: np.ndarray
    ic_report: AllocationICReport
    method: str = "residual-construction"
    witness: object = None


def construct_profitable_n(inst: AllocationInstance):
    """Profitable mechanism for an unbiased no-disposal instance, or a
    certificate that none exists.

    Raises PreconditionError for disposal instances (use ``with_disposal``)
    and for biased principals, whose case the iff does not cover: decide
    those with the direct LP instead (``analyze_allocation`` does).
    """
    if inst.disposal:
        raise PreconditionError("instance allows disposal; use with_disposal")
    rep = difference_additive(inst)
    if rep.holds:
        return NoneCertificate(
            reason="value differences split into per-type terms, so every IC "
                   "mechanism earns exactly what some constant allocation earns",
            method="difference-additive",
            details={"u": rep.u, "vbar": inst.vbar})
    if not inst.unbiased:
        raise PreconditionError(
            "construction requires an unbiased principal (equal expected "
            "values across agents); this instance is biased, so decide via "
            "the direct LP over the IC constraints")
    n = inst.n
    shape = inst.space.shape
    eps = rep.residual
    flat = [eps[(i,) + idx] for i in range(n - 1) for idx in np.ndindex(*shape)]
    emin = min(flat)
    assert emin < 0  # nonzero residual integrates to zero against pi
    z = eps - constant_array(eps.shape, emin)
    cap = max(sum(z[(i,) + idx] for i in range(n - 1))
              for idx in np.ndindex(*shape))
    assert cap > 0
    alpha = ONE / cap
    parts = [z[i] * alpha for i in range(n - 1)]
    last = constant_array(shape, 1)
    for p in parts:
        last = last - p
    parts.append(last)
    mech = AllocationMechanism(inst.space, parts, disposal=False)
    icr = check_ic_n(mech, inst)
    assert icr.verdict
    for i, agent in enumerate(inst.space.agents):
        expected = -alpha * emin if i < n - 1 else 1 + (n - 1) * alpha * emin
        for label in inst.space.types[i]:
            assert icr.interim[(agent, label)] == expected
    payoff = _direct_payoff(inst, mech)
    claimed = alpha * sum(v * v for v in flat) + inst.vbar
    assert payoff == claimed
    assert payoff > inst.vbar
    return NAllocReport(vbar=inst.vbar, condition_holds=False, profitable=True,
                        payoff=payoff, mechanism=mech, alpha=alpha,
                        residual=eps, z=z, ic_report=icr)


def _direct_payoff(inst: AllocationInstance, mech: AllocationMechanism) -> Fraction:
    total = ZERO
    for idx in np.ndindex(*inst.space.shape):
        p = inst.dist.p[idx]
        for i in range(inst.n):
            total += p * inst.values[i][idx] * mech.x[i][idx]
    return total


# ---------------------------------------------------------------------------
# Free disposal via the dummy-agent reduction
# ---------------------------------------------------------------------------

def add_disposal_agent(inst: AllocationInstance) -> AllocationInstance:
    """No-disposal counterpart: an extra last agent with a singleton type
    and identically zero value absorbs whatever the principal would burn."""
    if not inst.disposal:
        raise PreconditionError("instance already requires full allocation")
    if DISPOSAL_AGENT in inst.space.agents:
        raise PreconditionError(f"agent name {DISPOSAL_AGENT!r} is reserved")
    agents = inst.space.agents + (DISPOSAL_AGENT,)
    types = inst.space.types + ((0,),)
    space = TypeSpace(agents, types)
    margs = inst.marginals + (np.array([ONE], dtype=object),)
    vals = tuple(v.reshape(v.shape + (1,)) for v in inst.values)
    vals = vals + (constant_array(space.shape, 0),)
    return AllocationInstance(space, margs, vals, disposal=False,
                              name=inst.name, seed=inst.seed)


def non_constant_witnesses(inst: AllocationInstance) -> list[str]:
    """Agents whose value depends on somebody else's type."""
    out = []
    for i, agent in enumerate(inst.space.agents):
        v = inst.values[i]
        moved = np.moveaxis(v, i, 0)
        for own in range(inst.space.shape[i]):
            sl = np.atleast_1d(np.asarray(moved[own], dtype=object)).reshape(-1)
            if any(val != sl[0] for val in sl):
                out.append(agent)
                break
    return out


def with_disposal(inst: AllocationInstance):
    """Profitability analysis under free disposal.

    Runs the no-disposal pipeline on the dummy-agent extension; profitable
    iff some agent's value depends on the other agents' types (exact iff
    when the principal is unbiased with vbar = 0; otherwise only the
    necessity direction applies and construction is refused).
    """
    if not inst.disposal:
        raise PreconditionError("instance does not allow disposal")
    augmented = add_disposal_agent(inst)
    witnesses = non_constant_witnesses(inst)
    result = construct_profitable_n(augmented)
    # The dummy-agent condition is exactly "no agent's value moves with the
    # other agents' types".
    if isinstance(result, NoneCertificate):
        assert not witnesses
        return result
    # In the construction regime all expected values are 0, so beating the
    # dummy agent is the same as beating max(0, vbar).
    assert witnesses
    result.witness = witnesses[0]
    return result


def analyze_allocation(inst: AllocationInstance) -> dict:
    """One-stop profitability verdict with the decision rule labelled.

    Unbiased instances (vbar = 0 as well, for disposal) get the exact
    iff treatment; otherwise the condition is only necessary, and when it
    is violated the verdict comes from the direct LP over the IC
    constraints, labelled as outside the iff's regime.
    """
    from .oracle import solve_principal_alloc  # deferred: oracle imports this module

    base = add_disposal_agent(inst) if inst.disposal else inst
    rep = difference_additive(base)
    vbar = inst.vbar
    floor = max(ZERO, vbar) if inst.disposal else vbar
    if rep.holds:
        return {"profitable": False, "method": "difference-additive",
                "vbar": vbar, "u": rep.u, "exact_iff": True,
                "certificate": "no IC mechanism beats a constant allocation"}
    exact_regime = base.unbiased
    if exact_regime:
        report = with_disposal(inst) if inst.disposal else construct_profitable_n(inst)
        return {"profitable": True, "method": report.method, "vbar": vbar,
                "payoff": report.payoff, "report": report, "exact_iff": True}
    lp = solve_principal_alloc(inst)
    return {"profitable": lp.value > floor, "method": "ic-constraints-lp",
            "vbar": vbar, "payoff": lp.value, "report": lp,
            "exact_iff": False,
            "note": "biased principal with the splitting condition violated: "
                    "outside the iff regime, decided by the direct LP"}


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------

def load_allocation(source, *, drop_zero_types: bool = False) -> AllocationInstance:
    """Parse an allocation instance.

    Schema: {"agents": [...], "types": {agent: [labels]},
    "marginals": {agent: [...]} or "pi": full product tensor,
    "v": {agent: tensor}, "disposal": true|false}.
    """
    data = load_json_dict(source)
    space = parse_type_space(data)
    if "v" not in data or not isinstance(data["v"], dict):
        raise SchemaError("allocation instance requires 'v': {agent: tensor}")
    if "disposal" not in data or not isinstance(data["disposal"], bool):
        raise SchemaError("allocation instance requires boolean 'disposal'")
    if "marginals" in data:
        margs = []
        for i, a in enumerate(space.agents):
            if a not in data["marginals"]:
                raise SchemaError(f"'marginals' missing agent {a!r}")
            margs.append(parse_rational_array(data["marginals"][a],
                                              (space.shape[i],), f"marginals[{a}]"))
    elif "pi" in data:
        pi = parse_rational_array(data["pi"], space.shape, "pi")
        total = sum(pi[idx] for idx in np.ndindex(*space.shape))
        if total != 1:
            raise SchemaError("pi must sum to exactly 1")
        margs = []
        for i in range(space.n_agents):
            axes = tuple(a for a in range(space.n_agents) if a != i)
            margs.append(pi.sum(axis=axes) if axes else pi)
        check = product_dist(space, margs).p
        if not (check == pi).all():
            raise SchemaError("pi is not a product of its marginals; "
                              "this analysis assumes independent types")
    else:
        raise SchemaError("allocation instance requires 'marginals' or 'pi'")
    missing = [a for a in space.agents if a not in data["v"]]
    if missing:
        raise SchemaError(f"'v' missing entries for agents {missing}")
    vals = [parse_rational_array(data["v"][a], space.shape, f"v[{a}]")
            for a in space.agents]
    if drop_zero_types:
        keep = [[k for k in range(len(m)) if m[k] != 0] for m in margs]
        if any(len(k) < len(m) for k, m in zip(keep, margs)):
            slicer = np.ix_(*keep)
            space = TypeSpace(space.agents,
                              tuple(tuple(space.types[i][k] for k in keep[i])
                                    for i in range(space.n_agents)))
            margs = [m[k] for m, k in zip(margs, keep)]
            vals = [v[slicer] for v in vals]
    return AllocationInstance(space, tuple(margs), tuple(vals),
                              bool(data["disposal"]),
                              name=data.get("name"), seed=data.get("seed"))


def load_allocation_mechanism(source, inst: AllocationInstance) -> AllocationMechanism:
    """Parse {"x": {agent: tensor}} against an instance."""
    data = load_json_dict(source)
    if "x" not in data and isinstance(data.get("mechanism"), dict):
        data = data["mechanism"]
    if "x" not in data or not isinstance(data["x"], dict):
        raise SchemaError("allocation mechanism requires 'x': {agent: tensor}")
    missing = [a for a in inst.space.agents if a not in data["x"]]
    if missing:
        raise SchemaError(f"'x' missing entries for agents {missing}")
    parts = [parse_rational_array(data["x"][a], inst.space.shape, f"x[{a}]")
             for a in inst.space.agents]
    return AllocationMechanism(inst.space, parts, disposal=inst.disposal)


def allocation_to_dict(inst: AllocationInstance) -> dict:
    out = {
        "agents": list(inst.space.agents),
        "types": {a: list(t) for a, t in zip(inst.space.agents, inst.space.types)},
        "marginals": {a: to_nested_strings(m)
                      for a, m in zip(inst.space.agents, inst.marginals)},
        "v": {a: to_nested_strings(v)
              for a, v in zip(inst.space.agents, inst.values)},
        "disposal": inst.disposal,
    }
    if inst.name is not None:
        out["name"] = inst.name
    if inst.seed is not None:
        out["seed"] = inst.seed
    return out


def dump_allocation(inst: AllocationInstance) -> str:
    return dumps_canonical(allocation_to_dict(inst))
