"""Domain types for mechanism design without transfers on finite type spaces.

A problem instance is a finite type space, a joint type distribution with
strictly positive marginals, and the principal's payoff from the first
option relative to the second.  All probabilities and payoffs are exact
rationals (``fractions.Fraction``) end to end; the characterizations this
package checks are exact equalities, and tolerances would blur them.

Arrays are numpy object arrays holding Fractions, indexed by type profile
in row-major agent order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .numerics import frac, rank as matrix_rank_rows

ZERO = Fraction(0)
ONE = Fraction(1)


class SchemaError(ValueError):
    """An instance or mechanism file violates the JSON schema."""


class PreconditionError(ValueError):
    """An operation was invoked outside the regime where its result is defined."""


# ---------------------------------------------------------------------------
# Type space
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TypeSpace:
    """Ordered agents with ordered, distinct type labels per agent.

    Profiles are enumerated row-major in agent order, so profile indices
    are deterministic and match numpy's C order for arrays of shape
    ``self.shape``.
    """

    agents: tuple[str, ...]
    types: tuple[tuple, ...]

    def __post_init__(self):
        if len(self.agents) != len(self.types):
            raise SchemaError("one type list per agent required")
        if len(set(self.agents)) != len(self.agents):
            raise SchemaError("agent names must be distinct")
        for agent, labels in zip(self.agents, self.types):
            if len(labels) < 1:
                raise SchemaError(f"agent {agent!r} has no types")
            if len(set(labels)) != len(labels):
                raise SchemaError(f"agent {agent!r} has duplicate type labels")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(t) for t in self.types)

    @property
    def n_profiles(self) -> int:
        out = 1
        for k in self.shape:
            out *= k
        return out

    def profiles(self):
        """Iterate type profiles in row-major (C) order."""
        return itertools.product(*self.types)

    def position(self, agent_index: int, label) -> int:
        try:
            return self.types[agent_index].index(label)
        except ValueError:
            raise KeyError(f"unknown type {label!r} for agent "
                           f"{self.agents[agent_index]!r}") from None

    def index(self, profile) -> int:
        """Flat index of a profile under row-major enumeration."""
        idx = 0
        for ax, label in enumerate(profile):
            idx = idx * self.shape[ax] + self.position(ax, label)
        return idx

    def agent_index(self, agent: str) -> int:
        try:
            return self.agents.index(agent)
        except ValueError:
            raise KeyError(f"unknown agent {agent!r}") from None


def two_agent(space: TypeSpace) -> None:
    if space.n_agents != 2:
        raise PreconditionError("operation is defined for two-agent instances only")


# ---------------------------------------------------------------------------
# Rational arrays
# ---------------------------------------------------------------------------

def rational_array(nested, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Build an object array of Fractions from nested lists of ints/strings."""
    def build(node, depth):
        if depth == 0:
            return frac(node)
        return [build(child, depth - 1) for child in node]

    if shape is None:
        arr = np.array(nested, dtype=object)
        flat = [frac(v) for v in arr.reshape(-1)]
        out = np.array(flat, dtype=object).reshape(arr.shape)
        return out
    data = build(nested, len(shape))
    arr = np.empty(shape, dtype=object)
    arr[...] = np.array(data, dtype=object).reshape(shape)
    return arr


def constant_array(shape: tuple[int, ...], value) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    arr[...] = frac(value)
    return arr


def array_sum(arr: np.ndarray) -> Fraction:
    total = ZERO
    for v in arr.reshape(-1):
        total += v
    return total


def arrays_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and bool((a == b).all())


def to_nested_strings(arr):
    """Nested lists of exact rational strings, for JSON serialization."""
    if isinstance(arr, np.ndarray):
        return [to_nested_strings(sub) for sub in arr]
    return str(arr)


# ---------------------------------------------------------------------------
# Joint distributions
# ---------------------------------------------------------------------------

class JointDist:
    """Joint type distribution with exact entries and positive marginals.

    Entries are nonnegative and sum to exactly 1.  Every one-dimensional
    marginal is strictly positive (types that cannot occur are rejected at
    construction; drop them first if needed).  Conditionals are exact
    because marginals never vanish.
    """

    def __init__(self, space: TypeSpace, probabilities: np.ndarray):
        probabilities = np.asarray(probabilities, dtype=object)
        if probabilities.shape != space.shape:
            raise SchemaError(f"pi has shape {probabilities.shape}, "
                              f"expected {space.shape}")
        flat = probabilities.reshape(-1)
        for v in flat:
            if not isinstance(v, Fraction):
                raise SchemaError("pi entries must be exact rationals")
            if v < 0:
                raise SchemaError("pi entries must be nonnegative")
        if array_sum(probabilities) != 1:
            raise SchemaError("pi entries must sum to exactly 1")
        self.space = space
        self.p = probabilities
        self._marginals = tuple(self._axis_marginal(i)
                                for i in range(space.n_agents))
        for agent, m in zip(space.agents, self._marginals):
            if any(v == 0 for v in m):
                raise SchemaError(
                    f"agent {agent!r} has a zero-probability type; "
                    "drop it or pass drop_zero_types=True when loading")

    def _axis_marginal(self, i: int) -> np.ndarray:
        axes = tuple(a for a in range(self.space.n_agents) if a != i)
        return self.p.sum(axis=axes) if axes else self.p.copy()

    def marginal(self, i: int) -> np.ndarray:
        return self._marginals[i]

    def marginals(self) -> tuple[np.ndarray, ...]:
        return self._marginals

    def conditional(self, i: int) -> np.ndarray:
        """Two-agent conditionals: row t is the belief over the other agent's
        types held by type t of agent i."""
        two_agent(self.space)
        mat = self.p if i == 0 else self.p.T
        m = self._marginals[i]
        return np.array([[mat[a, b] / m[a] for b in range(mat.shape[1])]
                         for a in range(mat.shape[0])], dtype=object)

    def is_independent(self) -> bool:
        two_agent(self.space)
        ml, mr = self._marginals
        return arrays_equal(self.p, np.multiply.outer(ml, mr))

    def matrix_rank(self) -> int:
        two_agent(self.space)
        return matrix_rank_rows([list(row) for row in self.p])

    def independent_counterpart(self) -> "JointDist":
        """Product of this distribution's marginals (same type space)."""
        two_agent(self.space)
        ml, mr = self._marginals
        return JointDist(self.space, np.multiply.outer(ml, mr))

    def __eq__(self, other):
        return isinstance(other, JointDist) and self.space == other.space \
            and arrays_equal(self.p, other.p)


def product_dist(space: TypeSpace, marginals: list[np.ndarray]) -> JointDist:
    """Independent joint distribution from per-agent marginals."""
    p = constant_array(space.shape, ONE)
    for profile_idx, profile in enumerate(space.profiles()):
        idx = np.unravel_index(profile_idx, space.shape)
        value = ONE
        for ax, pos in enumerate(idx):
            value *= marginals[ax][pos]
        p[idx] = value
    return JointDist(space, p)


def expectation(dist: JointDist, values: np.ndarray) -> Fraction:
    return array_sum(dist.p * values)


# ---------------------------------------------------------------------------
# Mechanisms and objectives
# ---------------------------------------------------------------------------

class Mechanism:
    """Map from type profiles to the probability that the first option is
    chosen; every entry lies in [0, 1] exactly."""

    def __init__(self, space: TypeSpace, values: np.ndarray):
        values = np.asarray(values, dtype=object)
        if values.shape != space.shape:
            raise SchemaError(f"mechanism has shape {values.shape}, "
                              f"expected {space.shape}")
        for v in values.reshape(-1):
            if not isinstance(v, Fraction):
                raise SchemaError("mechanism entries must be exact rationals")
            if not (0 <= v <= 1):
                raise SchemaError("mechanism entries must lie in [0, 1]")
        self.space = space
        self.x = values

    def __eq__(self, other):
        return isinstance(other, Mechanism) and self.space == other.space \
            and arrays_equal(self.x, other.x)


def constant_mechanism(space: TypeSpace, value) -> Mechanism:
    return Mechanism(space, constant_array(space.shape, value))


@dataclass
class Objective:
    """Principal's payoff, normalized so the second option is worth 0.

    ``v = raw_vL - raw_vR``; if the raw difference has positive expectation
    the option labels are swapped (v negated, ``swapped`` set) so that the
    second option is the ex-ante preferred one and E[v] <= 0 holds.
    """

    v: np.ndarray
    raw_vL: np.ndarray
    raw_vR: np.ndarray
    swapped: bool
    expected_value: Fraction


def normalize(raw_vL: np.ndarray, raw_vR: np.ndarray, dist: JointDist) -> Objective:
    """Normalize a pair of option payoffs against a distribution."""
    space = dist.space
    raw_vL = np.asarray(raw_vL, dtype=object)
    raw_vR = np.asarray(raw_vR, dtype=object)
    if raw_vL.shape != space.shape or raw_vR.shape != space.shape:
        raise SchemaError("objective arrays must match the type space shape")
    v = raw_vL - raw_vR
    ev = expectation(dist, v)
    swapped = ev > 0
    if swapped:
        v = -v
        ev = -ev
    return Objective(v=v, raw_vL=raw_vL, raw_vR=raw_vR,
                     swapped=swapped, expected_value=ev)


@dataclass
class NoneCertificate:
    """Certificate that no profitable mechanism exists.

    ``method`` names the exact argument that rules one out (for example a
    zero projection residual, or the optimum of the direct LP over the IC
    polytope); ``details`` carries its witnesses.
    """

    reason: str
    method: str
    details: dict = field(default_factory=dict)


@dataclass
class Instance:
    """A full two-option problem: type space, distribution, objective."""

    space: TypeSpace
    dist: JointDist
    objective: Objective
    name: str | None = None
    seed: int | None = None

    @property
    def v(self) -> np.ndarray:
        return self.objective.v


def make_instance(space: TypeSpace, pi, vL, vR=None, name=None, seed=None) -> Instance:
    """Convenience constructor from nested lists / arrays."""
    dist = JointDist(space, rational_array(pi, space.shape))
    vL_arr = rational_array(vL, space.shape)
    vR_arr = (constant_array(space.shape, 0) if vR is None
              else rational_array(vR, space.shape))
    return Instance(space, dist, normalize(vL_arr, vR_arr, dist),
                    name=name, seed=seed)


# ---------------------------------------------------------------------------
# JSON schema (exact rational strings)
# ---------------------------------------------------------------------------

def _parse_labels(raw) -> tuple:
    labels = []
    for v in raw:
        if isinstance(v, (int, str)):
            labels.append(v)
        else:
            raise SchemaError(f"type labels must be ints or strings, got {v!r}")
    return tuple(labels)


def _parse_rational_nested(node, shape, where: str):
    if len(shape) == 0:
        if isinstance(node, float):
            raise SchemaError(
                f"{where}: floats are not exact; write rationals as strings "
                "like \"1/4\" or \"0.25\"")
        try:
            return frac(node)
        except (ValueError, TypeError, ZeroDivisionError) as e:
            raise SchemaError(f"{where}: bad rational {node!r} ({e})") from None
    if not isinstance(node, list) or len(node) != shape[0]:
        raise SchemaError(f"{where}: expected a list of length {shape[0]}")
    return [_parse_rational_nested(child, shape[1:], where) for child in node]


def parse_rational_array(node, shape: tuple[int, ...], where: str) -> np.ndarray:
    data = _parse_rational_nested(node, shape, where)
    arr = np.empty(shape, dtype=object)
    arr[...] = np.array(data, dtype=object).reshape(shape)
    return arr


def parse_type_space(data: dict) -> TypeSpace:
    if "agents" not in data or "types" not in data:
        raise SchemaError("instance requires 'agents' and 'types'")
    agents = tuple(data["agents"])
    types_map = data["types"]
    missing = [a for a in agents if a not in types_map]
    if missing:
        raise SchemaError(f"'types' missing entries for agents {missing}")
    return TypeSpace(agents, tuple(_parse_labels(types_map[a]) for a in agents))


def _drop_zero_types(space: TypeSpace, pi: np.ndarray,
                     others: list[np.ndarray]) -> tuple[TypeSpace, np.ndarray, list[np.ndarray]]:
    keep: list[list[int]] = []
    for i in range(space.n_agents):
        axes = tuple(a for a in range(space.n_agents) if a != i)
        marg = pi.sum(axis=axes) if axes else pi
        keep.append([k for k in range(space.shape[i]) if marg[k] != 0])
        if not keep[-1]:
            raise SchemaError(f"agent {space.agents[i]!r} has no positive-probability types")
    slicer = np.ix_(*keep)
    new_space = TypeSpace(space.agents,
                          tuple(tuple(space.types[i][k] for k in keep[i])
                                for i in range(space.n_agents)))
    return new_space, pi[slicer], [arr[slicer] for arr in others]


def load_instance(source, *, drop_zero_types: bool = False) -> Instance:
    """Parse a two-option instance from a dict, JSON string or file path.

    Schema: {"agents": [...], "types": {agent: [labels]}, "pi": [[...]],
    "vL": [[...]], "vR": [[...]] (optional, defaults to 0)}, all rationals
    written as exact strings.
    """
    data = load_json_dict(source)
    space = parse_type_space(data)
    if "pi" not in data or "vL" not in data:
        raise SchemaError("two-option instance requires 'pi' and 'vL'")
    pi = parse_rational_array(data["pi"], space.shape, "pi")
    vL = parse_rational_array(data["vL"], space.shape, "vL")
    vR = (parse_rational_array(data["vR"], space.shape, "vR")
          if "vR" in data else constant_array(space.shape, 0))
    if drop_zero_types:
        space, pi, (vL, vR) = _drop_zero_types(space, pi, [vL, vR])
    dist = JointDist(space, pi)
    name = data.get("name")
    seed = data.get("seed")
    return Instance(space, dist, normalize(vL, vR, dist), name=name, seed=seed)


def load_mechanism(source, space: TypeSpace) -> Mechanism:
    """Parse a mechanism ({"x": nested array}) for a given type space.

    Also accepts a report dict that embeds the mechanism under "mechanism".
    """
    data = load_json_dict(source)
    if "x" not in data and isinstance(data.get("mechanism"), dict):
        data = data["mechanism"]
    if "x" not in data:
        raise SchemaError("mechanism requires 'x'")
    node = data["x"]
    if isinstance(node, dict):
        raise SchemaError("per-agent mechanism given; this operation expects "
                          "a single two-option array under 'x'")
    return Mechanism(space, parse_rational_array(node, space.shape, "x"))


def load_json_dict(source) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
    elif isinstance(source, str):
        text = source
    else:
        raise SchemaError(f"cannot load instance from {type(source).__name__}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None
    if not isinstance(data, dict):
        raise SchemaError("top-level JSON value must be an object")
    return data


def instance_to_dict(inst: Instance) -> dict:
    out = {
        "agents": list(inst.space.agents),
        "types": {a: list(t) for a, t in zip(inst.space.agents, inst.space.types)},
        "pi": to_nested_strings(inst.dist.p),
        "vL": to_nested_strings(inst.objective.raw_vL),
        "vR": to_nested_strings(inst.objective.raw_vR),
    }
    if inst.name is not None:
        out["name"] = inst.name
    if inst.seed is not None:
        out["seed"] = inst.seed
    return out


def dumps_canonical(data: dict) -> str:
    """Canonical JSON text: sorted keys, 2-space indent, trailing newline.

    Serialize-parse-serialize is byte-identical under this form.
    """
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def dump_instance(inst: Instance) -> str:
    return dumps_canonical(instance_to_dict(inst))
