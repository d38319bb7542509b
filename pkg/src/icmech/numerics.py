"""Exact rational linear algebra and linear programming.

Everything in this module operates on ``fractions.Fraction`` values, so
feasibility, optimality, rank and orthogonality are decided by exact
equality instead of floating-point tolerances.  The LP solver is a
two-phase tableau simplex with Bland's anti-cycling rule (lowest-index
pivoting), which makes every answer deterministic and termination
guaranteed.  Speed is a non-goal: the intended problems are small.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(value) -> Fraction:
    """Convert ints, rational strings ("1/4", "0.25") or Fractions exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to an exact rational")


# ---------------------------------------------------------------------------
# Exact Gaussian elimination: rank, linear systems, span tests, projection
# ---------------------------------------------------------------------------

def _echelon(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Row-reduce a copy of ``rows``; returns (reduced rows, pivot columns)."""
    mat = [list(r) for r in rows]
    m = len(mat)
    n = len(mat[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for col in range(n):
        pivot_row = next((i for i in range(r, m) if mat[i][col] != 0), None)
        if pivot_row is None:
            continue
        mat[r], mat[pivot_row] = mat[pivot_row], mat[r]
        piv = mat[r][col]
        if piv != 1:
            mat[r] = [v / piv for v in mat[r]]
        for i in range(m):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                row_i, row_r = mat[i], mat[r]
                mat[i] = [a - f * b if b else a for a, b in zip(row_i, row_r)]
        pivots.append(col)
        r += 1
        if r == m:
            break
    return mat, pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank of a rational matrix (list of rows)."""
    rows = [list(r) for r in rows]
    if not rows or not rows[0]:
        return 0
    return len(_echelon(rows)[1])


def solve_linear_system(a: Sequence[Sequence[Fraction]],
                        b: Sequence[Fraction]) -> list[Fraction] | None:
    """One exact solution of ``a x = b`` (free variables set to 0), or None.

    Returns None when the system is inconsistent.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    aug = [list(row) + [rhs] for row, rhs in zip(a, b)]
    red, pivots = _echelon(aug)
    # A pivot in the rhs column means 0 == nonzero.
    if n in pivots:
        return None
    x = [ZERO] * n
    for i, col in enumerate(pivots):
        x[col] = red[i][n]
    return x


def in_span(vector: Sequence[Fraction],
            generators: Sequence[Sequence[Fraction]]) -> bool:
    """True iff ``vector`` is a linear combination of ``generators``."""
    if not generators:
        return all(v == 0 for v in vector)
    cols = [list(g) for g in generators]
    a = [[cols[j][i] for j in range(len(cols))] for i in range(len(vector))]
    return solve_linear_system(a, list(vector)) is not None


def span_coefficients(vector: Sequence[Fraction],
                      generators: Sequence[Sequence[Fraction]]) -> list[Fraction] | None:
    """Coefficients c with ``vector = sum c_j * generators[j]``, or None."""
    if not generators:
        return [] if all(v == 0 for v in vector) else None
    a = [[generators[j][i] for j in range(len(generators))]
         for i in range(len(vector))]
    return solve_linear_system(a, list(vector))


def orthogonal_projection(target: Sequence[Fraction],
                          generators: Sequence[Sequence[Fraction]]
                          ) -> tuple[list[Fraction], list[Fraction]]:
    """Project ``target`` onto span(generators) under the standard dot product.

    Returns (projection, residual) with ``target = projection + residual``
    and ``residual . g = 0`` exactly for every generator g.  Rank-deficient
    generator sets are fine: the normal equations are solved by elimination,
    which never needs square roots.
    """
    target = list(target)
    gens = [list(g) for g in generators]
    for g in gens:
        if len(g) != len(target):
            raise ValueError("generator dimension mismatch")
    if not gens:
        return [ZERO] * len(target), target
    k = len(gens)
    gram = [[sum(gi * gj for gi, gj in zip(gens[i], gens[j])) for j in range(k)]
            for i in range(k)]
    beta = [sum(gi * t for gi, t in zip(gens[i], target)) for i in range(k)]
    coeffs = solve_linear_system(gram, beta)
    # The normal equations are always consistent (beta lies in range(gram)).
    assert coeffs is not None
    proj = [sum(coeffs[j] * gens[j][i] for j in range(k))
            for i in range(len(target))]
    resid = [t - p for t, p in zip(target, proj)]
    for g in gens:
        assert sum(r * gi for r, gi in zip(resid, g)) == 0
    return proj, resid


# ---------------------------------------------------------------------------
# Linear programming
# ---------------------------------------------------------------------------

@dataclass
class LinearProgram:
    """max objective . x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  lower <= x <= upper.

    All data rational.  A bound of None means unbounded on that side.
    """

    objective: list[Fraction]
    a_eq: list[list[Fraction]] = field(default_factory=list)
    b_eq: list[Fraction] = field(default_factory=list)
    a_ub: list[list[Fraction]] = field(default_factory=list)
    b_ub: list[Fraction] = field(default_factory=list)
    lower: list[Fraction | None] | None = None
    upper: list[Fraction | None] | None = None

    def __post_init__(self):
        n = len(self.objective)
        if self.lower is None:
            self.lower = [ZERO] * n
        if self.upper is None:
            self.upper = [None] * n
        if len(self.lower) != n or len(self.upper) != n:
            raise ValueError("bound length mismatch")
        for row_set, rhs in ((self.a_eq, self.b_eq), (self.a_ub, self.b_ub)):
            if len(row_set) != len(rhs):
                raise ValueError("constraint/rhs length mismatch")
            for row in row_set:
                if len(row) != n:
                    raise ValueError("constraint row length mismatch")
        for lo, up in zip(self.lower, self.upper):
            if lo is not None and up is not None and lo > up:
                raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return len(self.objective)


@dataclass
class LPSolution:
    """Outcome of an exact LP solve.

    For status "optimal": ``x`` satisfies every constraint exactly and
    ``value == objective . x``; ``dual_eq``/``dual_ub`` together with the
    per-variable ``reduced_costs`` form a dual solution whose objective
    equals ``value`` (strong duality, verified inside the solver).

    For "unbounded": ``ray`` is a feasible improving direction.
    For "infeasible": ``certificate`` is a Farkas combination proving it.
    """

    status: str
    value: Fraction | None = None
    x: list[Fraction] | None = None
    dual_eq: list[Fraction] | None = None
    dual_ub: list[Fraction] | None = None
    reduced_costs: list[Fraction] | None = None
    ray: list[Fraction] | None = None
    certificate: dict | None = None


class _Tableau:
    """Dense simplex tableau over Fractions with Bland's rule."""

    def __init__(self, rows: list[list[Fraction]], basis: list[int]):
        self.rows = rows          # each row: coefficients + rhs (last entry)
        self.basis = basis

    def pivot(self, r: int, c: int, obj: list[Fraction]) -> None:
        prow = self.rows[r]
        piv = prow[c]
        if piv != 1:
            prow = [v / piv for v in prow]
            self.rows[r] = prow
        for i, row in enumerate(self.rows):
            if i != r and row[c] != 0:
                f = row[c]
                self.rows[i] = [a - f * b if b else a for a, b in zip(row, prow)]
        if obj[c] != 0:
            f = obj[c]
            obj[:] = [a - f * b if b else a for a, b in zip(obj, prow)]
        self.basis[r] = c

    def run(self, obj: list[Fraction], ncols: int) -> int | None:
        """Simplex iterations until optimal (returns None) or unbounded
        (returns the offending entering column)."""
        while True:
            enter = next((j for j in range(ncols) if obj[j] > 0), None)
            if enter is None:
                return None
            leave = None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best is None or ratio < best or \
                            (ratio == best and self.basis[i] < self.basis[leave]):
                        best = ratio
                        leave = i
            if leave is None:
                return enter
            self.pivot(leave, enter, obj)


def _reduced_objective(cost: list[Fraction], tab: _Tableau, width: int) -> list[Fraction]:
    """Objective row (reduced costs + negated value) priced out over the basis."""
    obj = list(cost) + [ZERO]
    for row, b in zip(tab.rows, tab.basis):
        cb = cost[b]
        if cb != 0:
            obj = [a - cb * v if v else a for a, v in zip(obj, row)]
    assert len(obj) == width + 1
    return obj


def solve_lp(lp: LinearProgram) -> LPSolution:
    """Solve an LP exactly; deterministic for a given input.

    Never approximates: the answer is the exact rational optimum, or an
    infeasibility/unboundedness certificate.
    """
    n = lp.n

    # --- conversion to standard form: A s = b, s >= 0 --------------------
    # Per original variable: how it maps to standard variables.
    #   ("shift", l):  x = l + s
    #   ("negshift", u): x = u - s
    #   ("split", None): x = s_plus - s_minus
    var_map: list[tuple] = []
    col_of: list[tuple[int, int | None]] = []  # (primary col, secondary col)
    ncols = 0
    for j in range(n):
        lo, up = lp.lower[j], lp.upper[j]
        if lo is not None:
            var_map.append(("shift", lo))
            col_of.append((ncols, None))
            ncols += 1
        elif up is not None:
            var_map.append(("negshift", up))
            col_of.append((ncols, None))
            ncols += 1
        else:
            var_map.append(("split", None))
            col_of.append((ncols, ncols + 1))
            ncols += 2

    # Row bookkeeping: ("eq", i) / ("ub", i) / ("bnd", j) plus slack columns
    # for every inequality.  Bound rows encode x_j <= upper_j for variables
    # that also carry a finite lower bound.
    row_specs: list[tuple[str, int]] = []
    raw_rows: list[tuple[list[Fraction], Fraction]] = []

    def expand(row: Sequence[Fraction], rhs: Fraction) -> tuple[list[Fraction], Fraction]:
        out = [ZERO] * ncols
        r = rhs
        for j, coeff in enumerate(row):
            if coeff == 0:
                continue
            kind, val = var_map[j]
            c0, c1 = col_of[j]
            if kind == "shift":
                out[c0] += coeff
                r -= coeff * val
            elif kind == "negshift":
                out[c0] -= coeff
                r -= coeff * val
            else:
                out[c0] += coeff
                out[c1] -= coeff
        return out, r

    for i, (row, rhs) in enumerate(zip(lp.a_eq, lp.b_eq)):
        raw_rows.append(expand(row, rhs))
        row_specs.append(("eq", i))
    for i, (row, rhs) in enumerate(zip(lp.a_ub, lp.b_ub)):
        raw_rows.append(expand(row, rhs))
        row_specs.append(("ub", i))
    for j in range(n):
        lo, up = lp.lower[j], lp.upper[j]
        if lo is not None and up is not None:
            unit = [ZERO] * ncols
            unit[col_of[j][0]] = ONE
            raw_rows.append((unit, up - lo))
            row_specs.append(("bnd", j))

    nslack = sum(1 for kind, _ in row_specs if kind != "eq")
    width = ncols + nslack
    a_std: list[list[Fraction]] = []
    b_std: list[Fraction] = []
    row_sign: list[int] = []
    slack_col_of_row: list[int | None] = []
    scol = ncols
    for (kind, _), (coeffs, rhs) in zip(row_specs, raw_rows):
        row = list(coeffs) + [ZERO] * nslack
        if kind != "eq":
            row[scol] = ONE
            slack_col_of_row.append(scol)
            scol += 1
        else:
            slack_col_of_row.append(None)
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
            row_sign.append(-1)
        else:
            row_sign.append(1)
        a_std.append(row)
        b_std.append(rhs)

    m = len(a_std)
    cost_std = [ZERO] * width
    for j in range(n):
        kind, _ = var_map[j]
        c0, c1 = col_of[j]
        cj = lp.objective[j]
        if kind == "negshift":
            cost_std[c0] -= cj
        else:
            cost_std[c0] += cj
            if c1 is not None:
                cost_std[c1] -= cj
    const_term = sum(lp.objective[j] * var_map[j][1]
                     for j in range(n) if var_map[j][0] != "split")

    a_pristine = [list(r) for r in a_std]

    # --- phase 1 ----------------------------------------------------------
    tab_rows = [row + [ZERO] * m + [rhs] for row, rhs in zip(a_std, b_std)]
    for i in range(m):
        tab_rows[i][width + i] = ONE
    basis = [width + i for i in range(m)]
    tab = _Tableau(tab_rows, basis)
    phase1_cost = [ZERO] * width + [-ONE] * m
    obj1 = _reduced_objective(phase1_cost, tab, width + m)
    # Entering candidates exclude the artificial columns: once an artificial
    # leaves the basis it stays out (it is only ever needed at level 0, and
    # keeping it out makes redundant rows detectable after phase 1).
    unb = tab.run(obj1, width)
    assert unb is None  # phase-1 objective is bounded above by 0
    if -obj1[-1] < 0:
        # Farkas certificate from the phase-1 duals.
        y = _basis_duals(a_pristine_with_art(a_pristine, m), phase1_cost,
                         tab.basis, width + m, list(range(m)))
        cert = _farkas_in_original_terms(lp, y, row_specs, row_sign, var_map, col_of,
                                         slack_col_of_row)
        return LPSolution(status="infeasible", certificate=cert)

    # Drive artificials out of the basis; drop redundant rows.
    keep: list[int] = []
    for i in range(m):
        if tab.basis[i] >= width:
            col = next((j for j in range(width) if tab.rows[i][j] != 0), None)
            if col is None:
                continue  # redundant row
            tab.pivot(i, col, obj1)
        keep.append(i)
    tab.rows = [tab.rows[i][:width] + [tab.rows[i][-1]] for i in keep]
    tab.basis = [tab.basis[i] for i in keep]
    kept_rows = keep

    # --- phase 2 ----------------------------------------------------------
    obj2 = _reduced_objective(cost_std, tab, width)
    unb = tab.run(obj2, width)
    if unb is not None:
        ray_std = [ZERO] * width
        ray_std[unb] = ONE
        for row, b in zip(tab.rows, tab.basis):
            ray_std[b] = -row[unb]
        ray = _map_direction(ray_std, var_map, col_of, n)
        _check_ray(lp, ray)
        return LPSolution(status="unbounded", ray=ray)

    x_std = [ZERO] * width
    for row, b in zip(tab.rows, tab.basis):
        x_std[b] = row[-1]
    x = _map_point(x_std, var_map, col_of, n)
    value = sum(c * v for c, v in zip(lp.objective, x))
    assert value == -obj2[-1] + const_term

    y = _basis_duals(a_pristine, cost_std, tab.basis, width, kept_rows)
    dual_eq, dual_ub, reduced = _duals_in_original_terms(
        lp, y, row_specs, row_sign, kept_rows, x, value)
    _check_primal(lp, x)
    return LPSolution(status="optimal", value=value, x=x,
                      dual_eq=dual_eq, dual_ub=dual_ub, reduced_costs=reduced)


def a_pristine_with_art(a_pristine: list[list[Fraction]], m: int) -> list[list[Fraction]]:
    rows = []
    for i, row in enumerate(a_pristine):
        art = [ZERO] * m
        art[i] = ONE
        rows.append(row + art)
    return rows


def _basis_duals(a: list[list[Fraction]], cost: list[Fraction],
                 basis: list[int], width: int, rows_kept: list[int]) -> list[Fraction]:
    """Dual vector y solving y . A_B = c_B for the final basis.

    Rows dropped as redundant get dual 0.  ``a`` holds the pristine
    (pre-pivot) standard-form rows.
    """
    sub = [a[i] for i in rows_kept]
    k = len(sub)
    at = [[sub[i][b] for i in range(k)] for b in basis]
    cb = [cost[b] for b in basis]
    y_kept = solve_linear_system(at, cb)
    assert y_kept is not None
    y = [ZERO] * len(a)
    for idx, i in enumerate(rows_kept):
        y[i] = y_kept[idx]
    return y


def _map_point(x_std: list[Fraction], var_map, col_of, n: int) -> list[Fraction]:
    out = []
    for j in range(n):
        kind, val = var_map[j]
        c0, c1 = col_of[j]
        if kind == "shift":
            out.append(val + x_std[c0])
        elif kind == "negshift":
            out.append(val - x_std[c0])
        else:
            out.append(x_std[c0] - x_std[c1])
    return out


def _map_direction(d_std: list[Fraction], var_map, col_of, n: int) -> list[Fraction]:
    out = []
    for j in range(n):
        kind, _ = var_map[j]
        c0, c1 = col_of[j]
        if kind == "shift":
            out.append(d_std[c0])
        elif kind == "negshift":
            out.append(-d_std[c0])
        else:
            out.append(d_std[c0] - d_std[c1])
    return out


def _check_primal(lp: LinearProgram, x: list[Fraction]) -> None:
    for row, rhs in zip(lp.a_eq, lp.b_eq):
        assert sum(a * v for a, v in zip(row, x)) == rhs
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        assert sum(a * v for a, v in zip(row, x)) <= rhs
    for v, lo, up in zip(x, lp.lower, lp.upper):
        assert lo is None or v >= lo
        assert up is None or v <= up


def _check_ray(lp: LinearProgram, d: list[Fraction]) -> None:
    for row in lp.a_eq:
        assert sum(a * v for a, v in zip(row, d)) == 0
    for row in lp.a_ub:
        assert sum(a * v for a, v in zip(row, d)) <= 0
    for v, lo, up in zip(d, lp.lower, lp.upper):
        assert lo is None or v >= 0
        assert up is None or v <= 0
    assert sum(c * v for c, v in zip(lp.objective, d)) > 0


def _duals_in_original_terms(lp, y, row_specs, row_sign, kept_rows, x, value):
    """Fold standard-form duals back onto the original constraints and verify
    strong duality exactly."""
    dual_eq = [ZERO] * len(lp.a_eq)
    dual_ub = [ZERO] * len(lp.a_ub)
    mu = [ZERO] * lp.n   # upper-bound duals
    nu = [ZERO] * lp.n   # lower-bound duals
    for i, ((kind, idx), s) in enumerate(zip(row_specs, row_sign)):
        yi = y[i] * s
        if kind == "eq":
            dual_eq[idx] = yi
        elif kind == "ub":
            dual_ub[idx] = yi
        else:
            mu[idx] += yi
    for j in range(lp.n):
        g = sum(dual_eq[i] * lp.a_eq[i][j] for i in range(len(lp.a_eq))) + \
            sum(dual_ub[i] * lp.a_ub[i][j] for i in range(len(lp.a_ub)))
        r = lp.objective[j] - g - mu[j]
        if r > 0:
            mu[j] += r
        else:
            nu[j] = -r
    reduced = [mu[j] - nu[j] for j in range(lp.n)]
    # Dual feasibility and strong duality, all exact.
    assert all(v >= 0 for v in dual_ub)
    assert all(v >= 0 for v in mu) and all(v >= 0 for v in nu)
    for j in range(lp.n):
        assert mu[j] == 0 or lp.upper[j] is not None
        assert nu[j] == 0 or lp.lower[j] is not None
    dual_value = sum(d * b for d, b in zip(dual_eq, lp.b_eq)) + \
        sum(d * b for d, b in zip(dual_ub, lp.b_ub)) + \
        sum(mu[j] * lp.upper[j] for j in range(lp.n) if mu[j] != 0) - \
        sum(nu[j] * lp.lower[j] for j in range(lp.n) if nu[j] != 0)
    assert dual_value == value
    return dual_eq, dual_ub, reduced


def _farkas_in_original_terms(lp, y, row_specs, row_sign, var_map, col_of,
                              slack_col_of_row):
    """Build and verify an infeasibility certificate for the original LP.

    The certificate combines constraints with multipliers (y_eq free,
    y_ub <= 0-safe signs handled here) plus bound multipliers so that the
    combination reads 0 <= negative.
    """
    dual_eq = [ZERO] * len(lp.a_eq)
    dual_ub = [ZERO] * len(lp.a_ub)
    mu = [ZERO] * lp.n
    nu = [ZERO] * lp.n
    for i, ((kind, idx), s) in enumerate(zip(row_specs, row_sign)):
        yi = y[i] * s
        if kind == "eq":
            dual_eq[idx] = yi
        elif kind == "ub":
            dual_ub[idx] = yi
        else:
            mu[idx] += yi
    for j in range(lp.n):
        g = sum(dual_eq[i] * lp.a_eq[i][j] for i in range(len(lp.a_eq))) + \
            sum(dual_ub[i] * lp.a_ub[i][j] for i in range(len(lp.a_ub))) + mu[j]
        # Need g + mu_extra - nu = 0 with mu, nu >= 0 matched to finite bounds.
        if g < 0:
            mu[j] += -g
        else:
            nu[j] = g
    gap = sum(d * b for d, b in zip(dual_eq, lp.b_eq)) + \
        sum(d * b for d, b in zip(dual_ub, lp.b_ub)) + \
        sum(mu[j] * lp.upper[j] for j in range(lp.n) if mu[j] != 0) - \
        sum(nu[j] * lp.lower[j] for j in range(lp.n) if nu[j] != 0)
    assert all(v >= 0 for v in dual_ub)
    assert all(v >= 0 for v in mu) and all(v >= 0 for v in nu)
    for j in range(lp.n):
        assert mu[j] == 0 or lp.upper[j] is not None
        assert nu[j] == 0 or lp.lower[j] is not None
    assert gap < 0
    return {"dual_eq": dual_eq, "dual_ub": dual_ub,
            "upper_multipliers": mu, "lower_multipliers": nu, "gap": gap}


def enumerate_vertices(lp: LinearProgram) -> list[list[Fraction]]:
    """Brute-force vertex enumeration for small LPs (test oracle).

    Tries every way of making n constraints active among equalities,
    inequalities and bounds, solves the square system and keeps feasible
    points.  Exponential; only for cross-checking the simplex on tiny
    instances.
    """
    n = lp.n
    cand_rows: list[tuple[list[Fraction], Fraction]] = []
    for row, rhs in zip(lp.a_eq, lp.b_eq):
        cand_rows.append((list(row), rhs))
    n_eq = len(cand_rows)
    optional: list[tuple[list[Fraction], Fraction]] = []
    for row, rhs in zip(lp.a_ub, lp.b_ub):
        optional.append((list(row), rhs))
    for j in range(n):
        if lp.lower[j] is not None:
            unit = [ZERO] * n
            unit[j] = ONE
            optional.append((unit, lp.lower[j]))
        if lp.upper[j] is not None:
            unit = [ZERO] * n
            unit[j] = ONE
            optional.append((unit, lp.upper[j]))
    vertices: list[list[Fraction]] = []
    seen: set[tuple] = set()
    rank_eq = rank([r for r, _ in cand_rows]) if cand_rows else 0
    need = max(n - rank_eq, 0)
    for combo in itertools.combinations(range(len(optional)), need):
        rows = [r for r, _ in cand_rows] + [optional[i][0] for i in combo]
        rhs = [b for _, b in cand_rows] + [optional[i][1] for i in combo]
        if rank(rows) < n:
            continue
        x = solve_linear_system(rows, rhs)
        if x is None:
            continue
        ok = all(sum(a * v for a, v in zip(row, x)) == b for row, b in zip(lp.a_eq, lp.b_eq))
        ok = ok and all(sum(a * v for a, v in zip(row, x)) <= b
                        for row, b in zip(lp.a_ub, lp.b_ub))
        ok = ok and all((lp.lower[j] is None or x[j] >= lp.lower[j]) and
                        (lp.upper[j] is None or x[j] <= lp.upper[j])
                        for j in range(n))
        if not ok:
            continue
        key = tuple(x)
        if key not in seen:
            seen.add(key)
            vertices.append(x)
    return vertices
