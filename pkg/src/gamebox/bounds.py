"""Linear-programming bounds for nonlocal games.

Contents:

* a self-contained dense two-phase simplex solver (Bland's anti-cycling
  pivot rule) -- the single LP backend used by everything below;
* ``ns_game_value`` -- exact maximum winning probability over the
  no-signalling polytope;
* ``eff_ns`` / ``eff_local`` -- "efficiency" partition bounds: the players
  may abort (a per-player extra output), and we maximise the probability
  eta of not aborting subject to winning with conditional probability at
  least ``1 - eps``; ``eff = 1/eta``.  Maximising over no-signalling
  correlations gives a lower bound on the quantum quantity, maximising
  over local (deterministic mixtures) an upper bound.
* ``gamma2_star`` / ``gamma2_alpha`` -- factorisation-norm quantities over
  unit vectors and sign matrices;
* ``check_thm2`` -- sandwich check that the gamma2-based lower bound stays
  below the local partition upper bound for XOR predicates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    LPInfeasibleError,
    LPUnboundedError,
    ValidationError,
)
from .games import Correlation, GamePredicate

ETA_FLOOR = 1e-9
VARIANTS = ("worst_case", "tilde", "average")

_PIVOT_TOL = 1e-10
_COST_TOL = 1e-9


# ---------------------------------------------------------------------------
# LP solver


@dataclass
class LinearProgram:
    """max (or min) c.x  s.t.  A x (sense) b,  x >= 0, optionally x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: Sequence[str]
    b: np.ndarray
    maximize: bool = True
    upper_bounds: np.ndarray | None = None


@dataclass
class LPResult:
    value: float
    x: np.ndarray


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    piv = T[row]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * piv


def _enter(T: np.ndarray, allowed: np.ndarray) -> int | None:
    """Bland's rule: smallest allowed column with negative reduced cost."""
    costs = T[-1, :-1]
    for j in range(costs.size):
        if allowed[j] and costs[j] < -_COST_TOL:
            return j
    return None


def _leave(T: np.ndarray, col: int, basis: list[int]) -> int | None:
    """Min-ratio row; ties broken by smallest basic-variable index (Bland)."""
    best_row = None
    best_ratio = None
    for i in range(T.shape[0] - 1):
        a = T[i, col]
        if a > _PIVOT_TOL:
            ratio = T[i, -1] / a
            if (
                best_ratio is None
                or ratio < best_ratio - _PIVOT_TOL
                or (abs(ratio - best_ratio) <= _PIVOT_TOL and basis[i] < basis[best_row])
            ):
                best_ratio = ratio
                best_row = i
    return best_row


def _run_simplex(T: np.ndarray, basis: list[int], allowed: np.ndarray) -> str:
    while True:
        j = _enter(T, allowed)
        if j is None:
            return "optimal"
        r = _leave(T, j, basis)
        if r is None:
            return "unbounded"
        _pivot(T, r, j)
        basis[r] = j


def solve_lp(lp: LinearProgram) -> LPResult:
    """Two-phase dense simplex with Bland's anti-cycling rule.

    Variables are non-negative.  Raises ``LPInfeasibleError`` or
    ``LPUnboundedError`` on the two failure modes.
    """
    A = np.array(lp.A, dtype=float)
    b = np.array(lp.b, dtype=float).reshape(-1)
    c = np.array(lp.c, dtype=float).reshape(-1)
    senses = list(lp.senses)
    if A.ndim != 2 or A.shape != (b.size, c.size):
        raise DimensionMismatchError(f"LP shapes inconsistent: A {A.shape}, b {b.size}, c {c.size}")
    if len(senses) != b.size:
        raise DimensionMismatchError("one sense per constraint row required")
    if any(s not in ("<=", ">=", "=") for s in senses):
        raise ValidationError(f"senses must be <=, >= or =, got {sorted(set(senses))}")
    if lp.upper_bounds is not None:
        ub = np.asarray(lp.upper_bounds, dtype=float).reshape(-1)
        if ub.size != c.size:
            raise DimensionMismatchError("one upper bound per variable required")
        rows = []
        for i, u in enumerate(ub):
            if np.isfinite(u):
                e = np.zeros(c.size)
                e[i] = 1.0
                rows.append(e)
                b = np.append(b, u)
                senses.append("<=")
        if rows:
            A = np.vstack([A, np.asarray(rows)])

    n = c.size
    m = b.size
    obj = -c if lp.maximize else c.copy()

    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]

    slack_cols = []
    art_rows = []
    for i, s in enumerate(senses):
        if s == "<=":
            slack_cols.append((i, 1.0))
        elif s == ">=":
            slack_cols.append((i, -1.0))
            art_rows.append(i)
        else:
            art_rows.append(i)

    n_slack = len(slack_cols)
    n_struct = n + n_slack
    n_art = len(art_rows)
    width = n_struct + n_art + 1

    T = np.zeros((m + 1, width))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, (i, sign) in enumerate(slack_cols):
        T[i, n + k] = sign
    basis = [-1] * m
    for k, (i, sign) in enumerate(slack_cols):
        if sign > 0:
            basis[i] = n + k
    for k, i in enumerate(art_rows):
        T[i, n_struct + k] = 1.0
        basis[i] = n_struct + k

    # phase 1: minimise the artificial variables
    if n_art:
        T[-1, :] = 0.0
        for k in range(n_art):
            T[-1, n_struct + k] = 1.0
        for i in range(m):
            if basis[i] >= n_struct:
                T[-1] -= T[i]
        allowed = np.ones(width - 1, dtype=bool)
        status = _run_simplex(T, basis, allowed)
        if status == "unbounded":  # cannot happen: phase-1 objective >= 0
            raise LPInfeasibleError("phase 1 failed")
        feas_tol = 1e-8 * (1.0 + (float(np.max(np.abs(b))) if b.size else 0.0))
        if -T[-1, -1] > feas_tol:
            raise LPInfeasibleError(f"infeasible (phase-1 objective {-T[-1, -1]:.3e})")
        # drive remaining artificial basics out, dropping redundant rows
        drop = []
        for i in range(m):
            if basis[i] >= n_struct:
                piv_col = None
                for j in range(n_struct):
                    if abs(T[i, j]) > _PIVOT_TOL:
                        piv_col = j
                        break
                if piv_col is None:
                    drop.append(i)
                else:
                    _pivot(T, i, piv_col)
                    basis[i] = piv_col
        if drop:
            keep = [i for i in range(m) if i not in drop]
            T = T[keep + [m]]
            basis = [basis[i] for i in keep]
            m = len(keep)
        T = np.delete(T, np.s_[n_struct : n_struct + n_art], axis=1)

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = obj
    for i in range(m):
        if basis[i] < n and obj[basis[i]] != 0.0:
            T[-1] -= obj[basis[i]] * T[i]
    allowed = np.ones(T.shape[1] - 1, dtype=bool)
    status = _run_simplex(T, basis, allowed)
    if status == "unbounded":
        raise LPUnboundedError("objective unbounded over the feasible region")

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    return LPResult(value=float(np.dot(c, x)), x=x)


# ---------------------------------------------------------------------------
# no-signalling game value


def _ns_constraint_rows(out_sizes, in_sizes, shape):
    """Normalisation + per-player no-signalling equality rows.

    Per-player marginal conditions imply every subset marginal condition,
    so these rows cut out exactly the no-signalling polytope.
    """
    l = len(out_sizes)
    n_vars = int(np.prod(shape))
    rows = []
    rhs = []
    senses = []
    for x in np.ndindex(*in_sizes):
        row = np.zeros(n_vars)
        for a in np.ndindex(*out_sizes):
            row[np.ravel_multi_index(a + x, shape)] = 1.0
        rows.append(row)
        rhs.append(1.0)
        senses.append("=")
    for j in range(l):
        if in_sizes[j] == 1:
            continue
        other_out = [out_sizes[k] for k in range(l) if k != j]
        other_in = [in_sizes[k] for k in range(l) if k != j]
        for x_rest in np.ndindex(*other_in):
            for a_rest in np.ndindex(*other_out):
                for xj in range(1, in_sizes[j]):
                    row = np.zeros(n_vars)
                    for aj in range(out_sizes[j]):
                        a = list(a_rest)
                        a.insert(j, aj)
                        xs0 = list(x_rest)
                        xs0.insert(j, 0)
                        xs1 = list(x_rest)
                        xs1.insert(j, xj)
                        row[np.ravel_multi_index(tuple(a) + tuple(xs0), shape)] += 1.0
                        row[np.ravel_multi_index(tuple(a) + tuple(xs1), shape)] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)
                    senses.append("=")
    return rows, rhs, senses


def ns_game_value(game: GamePredicate, budget: int = 200_000) -> float:
    """Exact maximum winning probability over no-signalling correlations.

    Players with a single input are handled by an exact decomposition: a
    no-signalling box with an inputless player is precisely a mixture over
    that player's outputs of (weight x no-signalling box on the remaining
    players), so the linear objective is maximised by conditioning on the
    best output.  Remaining games are solved by one LP.
    """
    l = game.players
    out_sizes = game.output_sizes
    in_sizes = game.input_sizes

    if l >= 2 and 1 in in_sizes:
        j = in_sizes.index(1)
        V = game.dense_V()
        best = 0.0
        p_rest = np.squeeze(game.p, axis=j)
        rest_inputs = tuple(game.inputs[k] for k in range(l) if k != j)
        rest_outputs = tuple(game.outputs[k] for k in range(l) if k != j)
        for e in range(out_sizes[j]):
            V_e = np.take(V, e, axis=j)
            V_e = np.squeeze(V_e, axis=(l - 1) + j)
            sub = GamePredicate(inputs=rest_inputs, outputs=rest_outputs, p=p_rest, V=V_e)
            best = max(best, ns_game_value(sub, budget))
        return best

    if l == 1:
        V = game.dense_V()
        return float(sum(game.p[x] * np.max(V[(Ellipsis,) + x]) for x in np.ndindex(*in_sizes)))

    shape = out_sizes + in_sizes
    n_vars = int(np.prod(shape))
    if n_vars > budget:
        raise BudgetExceededError(f"{n_vars} LP variables exceed budget {budget}")
    V = game.dense_V()
    rows, rhs, senses = _ns_constraint_rows(out_sizes, in_sizes, shape)
    c = np.zeros(n_vars)
    for x in np.ndindex(*in_sizes):
        px = float(game.p[x])
        if px == 0.0:
            continue
        for a in np.ndindex(*out_sizes):
            if V[a + x]:
                c[np.ravel_multi_index(a + x, shape)] += px
    res = solve_lp(LinearProgram(c=c, A=np.asarray(rows), senses=senses, b=np.asarray(rhs), maximize=True))
    return float(res.value)


# ---------------------------------------------------------------------------
# efficiency (partition) bounds


@dataclass(frozen=True)
class PartitionBoundResult:
    eta: float
    eff: float
    variant: str
    relaxation: str
    certificate: Correlation


def eff_ns(game: GamePredicate, eps: float, variant: str = "worst_case") -> PartitionBoundResult:
    """Abort-augmented efficiency bound over the no-signalling polytope.

    Adds a per-player abort output, maximises the non-abort mass eta
    subject to no-signalling and to winning (given no abort) with
    probability at least ``1 - eps``; ``eff = 1 / eta``.  Variants:

    * ``worst_case``: non-abort mass equal to eta and success >= (1-eps)*eta
      for every input;
    * ``tilde``: per-input non-abort mass eta, success averaged over p;
    * ``average``: both mass and success averaged over p.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"eps must lie in [0, 1], got {eps}")
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    l = game.players
    out_sizes = game.output_sizes
    in_sizes = game.input_sizes
    aug_sizes = tuple(s + 1 for s in out_sizes)
    shape = aug_sizes + in_sizes
    n_q = int(np.prod(shape))
    n_vars = n_q + 1  # eta is the last variable
    V = game.dense_V()

    rows, rhs, senses = _ns_constraint_rows(aug_sizes, in_sizes, shape)
    rows = [np.concatenate([r, [0.0]]) for r in rows]

    def q_index(a, x):
        return np.ravel_multi_index(tuple(a) + tuple(x), shape)

    def mass_row(x):
        row = np.zeros(n_vars)
        for a in np.ndindex(*out_sizes):  # non-abort outputs only
            row[q_index(a, x)] = 1.0
        return row

    def win_row(x):
        row = np.zeros(n_vars)
        for a in np.ndindex(*out_sizes):
            if V[a + x]:
                row[q_index(a, x)] = 1.0
        return row

    xs = list(np.ndindex(*in_sizes))
    if variant == "worst_case":
        for x in xs:
            r = mass_row(x)
            r[-1] = -1.0
            rows.append(r)
            rhs.append(0.0)
            senses.append("=")
        for x in xs:
            r = win_row(x)
            r[-1] = -(1.0 - eps)
            rows.append(r)
            rhs.append(0.0)
            senses.append(">=")
    elif variant == "tilde":
        for x in xs:
            r = mass_row(x)
            r[-1] = -1.0
            rows.append(r)
            rhs.append(0.0)
            senses.append("=")
        r = np.zeros(n_vars)
        for x in xs:
            r += float(game.p[x]) * win_row(x)
        r[-1] = -(1.0 - eps)
        rows.append(r)
        rhs.append(0.0)
        senses.append(">=")
    else:  # average
        r = np.zeros(n_vars)
        for x in xs:
            r += float(game.p[x]) * mass_row(x)
        r[-1] = -1.0
        rows.append(r)
        rhs.append(0.0)
        senses.append("=")
        r = np.zeros(n_vars)
        for x in xs:
            r += float(game.p[x]) * win_row(x)
        r[-1] = -(1.0 - eps)
        rows.append(r)
        rhs.append(0.0)
        senses.append(">=")

    floor_row = np.zeros(n_vars)
    floor_row[-1] = 1.0
    rows.append(floor_row)
    rhs.append(ETA_FLOOR)
    senses.append(">=")

    c = np.zeros(n_vars)
    c[-1] = 1.0
    res = solve_lp(LinearProgram(c=c, A=np.asarray(rows), senses=senses, b=np.asarray(rhs), maximize=True))
    eta = max(float(res.x[-1]), ETA_FLOOR)
    cert = Correlation(q=res.x[:n_q].reshape(shape), players=l)
    return PartitionBoundResult(eta=eta, eff=1.0 / eta, variant=variant, relaxation="no_signalling", certificate=cert)


def eff_local(
    game: GamePredicate, eps: float, variant: str = "worst_case", budget: int = 10**6
) -> PartitionBoundResult:
    """Abort-augmented efficiency bound over local (deterministic mixture)
    strategies; same variants as :func:`eff_ns`."""
    if not 0.0 <= eps <= 1.0:
        raise ValidationError(f"eps must lie in [0, 1], got {eps}")
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    l = game.players
    out_sizes = game.output_sizes
    in_sizes = game.input_sizes
    aug_sizes = tuple(s + 1 for s in out_sizes)
    V = game.dense_V()

    map_counts = [aug_sizes[j] ** in_sizes[j] for j in range(l)]
    n_d = 1
    for cnt in map_counts:
        n_d *= cnt
    if n_d > budget:
        raise BudgetExceededError(f"{n_d} deterministic abort-augmented strategies exceed budget {budget}")

    maps = [
        np.array(list(itertools.product(range(aug_sizes[j]), repeat=in_sizes[j])), dtype=np.int64)
        for j in range(l)
    ]

    def per_input_cols(x):
        """(non-abort, win) coefficient vectors over joint strategies for input x."""
        outs = [maps[j][:, x[j]] for j in range(l)]
        na_parts = []
        for j in range(l):
            shape_j = [1] * l
            shape_j[j] = map_counts[j]
            na_parts.append((outs[j] < out_sizes[j]).reshape(shape_j))
        na = na_parts[0]
        for part in na_parts[1:]:
            na = na & part
        idx = tuple(
            np.minimum(outs[j], out_sizes[j] - 1).reshape([map_counts[j] if k == j else 1 for k in range(l)])
            for j in range(l)
        )
        win = V[idx + tuple(x)] & na
        return na.reshape(-1).astype(float), win.reshape(-1).astype(float)

    xs = list(np.ndindex(*in_sizes))
    na_cols = {}
    win_cols = {}
    for x in xs:
        na_cols[x], win_cols[x] = per_input_cols(x)

    n_vars = n_d + 1  # weights + eta
    rows = []
    rhs = []
    senses = []

    r = np.zeros(n_vars)
    r[:n_d] = 1.0
    rows.append(r)
    rhs.append(1.0)
    senses.append("=")

    if variant == "worst_case":
        for x in xs:
            row = np.zeros(n_vars)
            row[:n_d] = na_cols[x]
            row[-1] = -1.0
            rows.append(row)
            rhs.append(0.0)
            senses.append("=")
        for x in xs:
            row = np.zeros(n_vars)
            row[:n_d] = win_cols[x]
            row[-1] = -(1.0 - eps)
            rows.append(row)
            rhs.append(0.0)
            senses.append(">=")
    elif variant == "tilde":
        for x in xs:
            row = np.zeros(n_vars)
            row[:n_d] = na_cols[x]
            row[-1] = -1.0
            rows.append(row)
            rhs.append(0.0)
            senses.append("=")
        row = np.zeros(n_vars)
        for x in xs:
            row[:n_d] += float(game.p[x]) * win_cols[x]
        row[-1] = -(1.0 - eps)
        rows.append(row)
        rhs.append(0.0)
        senses.append(">=")
    else:
        row = np.zeros(n_vars)
        for x in xs:
            row[:n_d] += float(game.p[x]) * na_cols[x]
        row[-1] = -1.0
        rows.append(row)
        rhs.append(0.0)
        senses.append("=")
        row = np.zeros(n_vars)
        for x in xs:
            row[:n_d] += float(game.p[x]) * win_cols[x]
        row[-1] = -(1.0 - eps)
        rows.append(row)
        rhs.append(0.0)
        senses.append(">=")

    row = np.zeros(n_vars)
    row[-1] = 1.0
    rows.append(row)
    rhs.append(ETA_FLOOR)
    senses.append(">=")

    c = np.zeros(n_vars)
    c[-1] = 1.0
    res = solve_lp(LinearProgram(c=c, A=np.asarray(rows), senses=senses, b=np.asarray(rhs), maximize=True))
    eta = max(float(res.x[-1]), ETA_FLOOR)

    # reconstruct the mixture's correlation over augmented alphabets
    shape = aug_sizes + in_sizes
    q = np.zeros(shape)
    w = res.x[:n_d]
    for d in np.flatnonzero(w > 1e-12):
        d_idx = np.unravel_index(int(d), tuple(map_counts))
        for x in xs:
            a = tuple(int(maps[j][d_idx[j], x[j]]) for j in range(l))
            q[a + tuple(x)] += float(w[d])
    cert = Correlation(q=q, players=l)
    return PartitionBoundResult(eta=eta, eff=1.0 / eta, variant=variant, relaxation="local", certificate=cert)


# ---------------------------------------------------------------------------
# gamma2-type quantities


@dataclass(frozen=True)
class Gamma2Result:
    value: float
    kind: str  # "exact_small" or "lower_bound"
    sign_matrix: np.ndarray | None = None


def _gamma2_value_given_u(A: np.ndarray, U: np.ndarray) -> float:
    """With u-vectors fixed (rows of U), the optimal v's give
    sum_y || sum_x A[x, y] u_x ||."""
    W = A.T @ U
    return float(np.sum(np.linalg.norm(W, axis=1)))


def _gamma2_two_rows(A: np.ndarray) -> float:
    """Exact optimum for a 2-row matrix: one gauge-fixed angle, fine grid
    plus local refinement."""
    c0, c1 = A[0], A[1]
    r = c0 * c0 + c1 * c1
    s = 2.0 * c0 * c1

    def f(thetas: np.ndarray) -> np.ndarray:
        vals = r[None, :] + s[None, :] * np.cos(thetas)[:, None]
        return np.sqrt(np.clip(vals, 0.0, None)).sum(axis=1)

    thetas = np.arange(0.0, math.pi + 1e-9, 1e-3)
    vals = f(thetas)
    k = int(np.argmax(vals))
    best_t = thetas[k]
    h = 1e-3
    for _ in range(4):
        lo = max(0.0, best_t - h)
        hi = min(math.pi, best_t + h)
        grid = np.linspace(lo, hi, 201)
        vals = f(grid)
        k = int(np.argmax(vals))
        best_t = grid[k]
        h = (hi - lo) / 100.0
    return float(f(np.array([best_t]))[0])


def _gamma2_alternating(A: np.ndarray, restarts: int, iters: int = 500) -> float:
    k = A.shape[0]
    best = 0.0
    inits = [np.eye(k)]
    for rseed in range(restarts):
        rng = np.random.default_rng([7431, rseed])
        U = rng.normal(size=(k, k))
        U /= np.maximum(np.linalg.norm(U, axis=1, keepdims=True), 1e-300)
        inits.append(U)
    def _unit_rows(W: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(W, axis=1)
        out = np.zeros_like(W)
        ok = norms > 1e-300
        out[ok] = W[ok] / norms[ok, None]
        out[~ok, 0] = 1.0
        return out

    for U in inits:
        U = U.copy()
        val = _gamma2_value_given_u(A, U)
        prev = -1.0
        for _ in range(iters):
            Vm = _unit_rows(A.T @ U)
            U = _unit_rows(A @ Vm)
            val = _gamma2_value_given_u(A, U)
            if val - prev < 1e-12:
                break
            prev = val
        best = max(best, val)
    return best


def gamma2_star(M: np.ndarray, restarts: int = 50) -> Gamma2Result:
    """max sum_xy M[x,y] <u_x, v_y> over unit vectors.

    Vectors of dimension min(m, n) suffice.  Exact for min(m, n) <= 2
    (closed form / gauge-fixed angle grid refined to 1e-7); alternating
    optimisation with deterministic restarts otherwise (lower bound).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValidationError("matrix must be 2-d and non-empty")
    A = M if M.shape[0] <= M.shape[1] else M.T
    k = A.shape[0]
    if k == 1:
        return Gamma2Result(value=float(np.sum(np.abs(A))), kind="exact_small")
    if k == 2:
        return Gamma2Result(value=_gamma2_two_rows(A), kind="exact_small")
    return Gamma2Result(value=_gamma2_alternating(A, restarts), kind="lower_bound")


def gamma2_alpha(F: np.ndarray, p: np.ndarray, alpha: float) -> Gamma2Result:
    """Best ratio ((alpha+1) <F, F' o p> - (alpha-1)) / (2 gamma2*(F' o p))
    over all sign matrices F' (exhaustive for |X||Y| <= 12)."""
    F = np.asarray(F, dtype=float)
    p = np.asarray(p, dtype=float)
    if F.shape != p.shape or F.ndim != 2:
        raise DimensionMismatchError("F and p must be 2-d matrices of the same shape")
    if not np.all(np.isin(F, (-1.0, 1.0))):
        raise ValidationError("F must be a sign matrix (entries +-1)")
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValidationError("p must be a probability table")
    if alpha < 1.0:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    cells = F.size
    if cells > 12:
        raise BudgetExceededError(f"{cells} cells: sign-matrix enumeration capped at 12")
    best = -math.inf
    best_sign = None
    exact = True
    flat_F = F.reshape(-1)
    flat_p = p.reshape(-1)
    for bits in range(1 << cells):
        signs = np.array([1.0 if (bits >> k) & 1 == 0 else -1.0 for k in range(cells)])
        corr = float(np.sum(flat_F * signs * flat_p))
        g = gamma2_star((signs * flat_p).reshape(F.shape))
        if g.kind != "exact_small":
            exact = False
        denom = 2.0 * g.value
        if denom <= 1e-15:
            continue
        cand = ((alpha + 1.0) * corr - (alpha - 1.0)) / denom
        if cand > best:
            best = cand
            best_sign = signs.reshape(F.shape)
    return Gamma2Result(value=best, kind="exact_small" if exact else "lower_bound", sign_matrix=best_sign)


# ---------------------------------------------------------------------------
# sandwich check for XOR predicates


@dataclass(frozen=True)
class Thm2Check:
    lower: float
    upper: float
    holds: bool
    alpha: float | None


def xor_game(f: np.ndarray, p: np.ndarray) -> GamePredicate:
    """Two-player binary-output game: win iff a XOR b = f(x, y)."""
    f = np.asarray(f)
    p = np.asarray(p, dtype=float)
    if f.shape != p.shape or f.ndim != 2:
        raise DimensionMismatchError("f and p must be 2-d tables of the same shape")
    nx, ny = f.shape
    V = np.zeros((2, 2, nx, ny), dtype=bool)
    for a, b in np.ndindex(2, 2):
        V[a, b] = (a ^ b) == (f != 0)
    return GamePredicate(
        inputs=(tuple(range(nx)), tuple(range(ny))),
        outputs=((0, 1), (0, 1)),
        p=p,
        V=V,
        name="xor",
    )


def check_thm2(f: np.ndarray, p: np.ndarray, eps: float) -> Thm2Check:
    """Sandwich check for XOR predicates: the sign-matrix ratio lower bound
    against the local partition upper bound at error eps.

    ``lower = (1 - 2 eps) * gamma2_alpha(F, p, (1+2 eps)/(1-2 eps))`` with
    ``F = (-1)^f`` (zero at eps = 1/2); ``upper = eff_local(., eps,
    "average")``.  ``holds`` reports lower <= upper + 1e-6.
    """
    f = np.asarray(f)
    p = np.asarray(p, dtype=float)
    if not 0.0 <= eps <= 0.5:
        raise ValidationError(f"eps must lie in [0, 1/2], got {eps}")
    game = xor_game(f, p)
    upper = eff_local(game, eps, variant="average").eff
    if eps == 0.5:
        return Thm2Check(lower=0.0, upper=upper, holds=0.0 <= upper + 1e-6, alpha=None)
    F = np.where(f != 0, -1.0, 1.0)
    alpha = (1.0 + 2.0 * eps) / (1.0 - 2.0 * eps)
    lower = (1.0 - 2.0 * eps) * gamma2_alpha(F, p, alpha).value
    return Thm2Check(lower=lower, upper=upper, holds=lower <= upper + 1e-6, alpha=alpha)
