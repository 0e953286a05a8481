"""Closed-form evaluators for direct-product success bounds on repeated
games, a small empirical probe of repetition with one round of classical
communication, and a classical feasibility check of the substate
perturbation step.

The asymptotic constants hidden in the source bounds are exposed as
``exponent_const`` (default 1) and ``beta_const``; they are knobs, not
derived values.  The ``270 l^3 / zeta^2`` admissibility gate of the
second bound is explicit and hard-coded.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import games as games_mod
from .entropy import ClassicalDistribution, JointTable
from .errors import (
    BudgetExceededError,
    CapabilityError,
    GateViolationError,
    ValidationError,
)

_PROBE_TENSOR_LIMIT = 50_000_000
_WIN_EPS = 1e-12


def _log2_alphabet(alphabet_sizes) -> float:
    if alphabet_sizes is None:
        raise ValidationError("alphabet_sizes required")
    sizes = tuple(int(s) for s in alphabet_sizes)
    if not sizes or any(s < 1 for s in sizes):
        raise ValidationError(f"invalid alphabet sizes {sizes}")
    total = math.prod(sizes)
    if total < 2:
        raise ValidationError("total output alphabet must have at least 2 elements")
    return math.log2(total)


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValidationError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class DPTParams:
    """Parameter bundle for the closed-form bound evaluators.

    Fields not used by a given evaluator may stay ``None``.
    """

    l: int
    n: int
    c: float | None = None
    c_j: tuple[float, ...] | None = None
    eps: float | None = None
    zeta: float | None = None
    nu: float | None = None
    alphabet_sizes: tuple[int, ...] | None = None
    C_size: int = 0
    PrE: float = 1.0
    exponent_const: float = 1.0

    def __post_init__(self) -> None:
        if self.l < 1 or self.n < 1:
            raise ValidationError(f"need l >= 1 and n >= 1, got l={self.l}, n={self.n}")
        for name in ("eps", "zeta", "nu"):
            value = getattr(self, name)
            if value is not None:
                _check_unit(name, value)
        if not 0.0 < self.PrE <= 1.0:
            raise ValidationError(f"PrE must lie in (0, 1], got {self.PrE}")
        if self.C_size < 0:
            raise ValidationError(f"C_size must be >= 0, got {self.C_size}")
        if self.exponent_const <= 0.0:
            raise ValidationError(f"exponent_const must be positive, got {self.exponent_const}")
        if self.c_j is not None:
            object.__setattr__(self, "c_j", tuple(float(v) for v in self.c_j))
            if len(self.c_j) != self.l:
                raise ValidationError(f"{len(self.c_j)} per-player budgets for {self.l} players")
            if any(v < 0 for v in self.c_j):
                raise ValidationError("per-player communication must be >= 0")
            if self.c is not None and abs(sum(self.c_j) - self.c) > 1e-9:
                raise ValidationError(
                    f"c={self.c} inconsistent with sum(c_j)={sum(self.c_j)}"
                )
        if self.c is not None and self.c < 0:
            raise ValidationError(f"c must be >= 0, got {self.c}")

    @property
    def total_comm(self) -> float:
        if self.c is not None:
            return float(self.c)
        if self.c_j is not None:
            return float(sum(self.c_j))
        raise ValidationError("neither c nor c_j supplied")


def delta_of(C_size: int, PrE: float, n: int, alphabet_sizes) -> float:
    """Per-copy information spent by conditioning: ``(|C| log2 prod|A_j| +
    log2(1/PrE)) / n``."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 0.0 < PrE <= 1.0:
        raise ValidationError(f"PrE must lie in (0, 1], got {PrE}")
    if C_size < 0:
        raise ValidationError(f"C_size must be >= 0, got {C_size}")
    return (C_size * _log2_alphabet(alphabet_sizes) + math.log2(1.0 / PrE)) / n


def dpt_case_i_bound(params: DPTParams) -> float:
    """Success bound ``base^floor(exponent_const nu^2 n / (l^2 log2 prod|A_j|))``
    with ``base = 1 - nu/2 + 4 sqrt(l c)``; returns 1 when the base
    reaches 1 (the bound is vacuous there).  Requires ``c < 1``."""
    if params.nu is None:
        raise ValidationError("nu required")
    c = params.total_comm
    if c >= 1.0:
        raise ValidationError(f"bound requires c < 1, got c={c}")
    base = 1.0 - params.nu / 2.0 + 4.0 * math.sqrt(params.l * c)
    if base >= 1.0:
        return 1.0
    log_alpha = _log2_alphabet(params.alphabet_sizes)
    exponent = math.floor(
        params.exponent_const * params.nu**2 * params.n / (params.l**2 * log_alpha)
    )
    return float(min(max(base, 0.0), 1.0) ** exponent)


def dpt_case_ii_bound(params: DPTParams, eff: float) -> float:
    """Success bound ``(1 - eps)^floor(exponent_const n / log2 prod|A_j|)``,
    valid only inside the gate ``1 <= c < zeta^2 eff / (270 l^3)``.

    ``eff`` is the caller-supplied partition-bound efficiency (see
    ``bounds.eff_ns`` / ``bounds.eff_local``)."""
    if params.eps is None or params.zeta is None:
        raise ValidationError("eps and zeta required")
    if eff < 1.0:
        raise ValidationError(f"eff must be >= 1, got {eff}")
    c = params.total_comm
    ceiling = params.zeta**2 * eff / (270.0 * params.l**3)
    if not 1.0 <= c < ceiling:
        raise GateViolationError(
            f"communication c={c} outside admissible range [1, {ceiling}) "
            f"for zeta={params.zeta}, eff={eff}, l={params.l}"
        )
    log_alpha = _log2_alphabet(params.alphabet_sizes)
    exponent = math.floor(params.exponent_const * params.n / log_alpha)
    return float((1.0 - params.eps) ** exponent)


def randv_bound(
    t: int,
    n: int,
    c: float,
    l: int,
    nu: float,
    beta_const: float,
    alphabet_sizes=None,
    mode: str = "generic",
) -> float:
    """Bound on winning ``t`` randomly chosen copies out of ``n``.

    ``generic`` mode: ``(1 - nu + beta_const (sqrt(l c) + l sqrt(t log2
    prod|A_j| / n)))^t``.  ``mse`` mode uses the specialised base
    ``(1 - nu + beta_const (sqrt(c) + sqrt(t/n))) / 9``.  Bases are
    clamped to [0, 1]."""
    if mode not in ("generic", "mse"):
        raise ValidationError(f"unknown mode {mode!r}")
    if n < 1 or not 0 <= t <= n:
        raise ValidationError(f"need 0 <= t <= n with n >= 1, got t={t}, n={n}")
    if c < 0 or beta_const < 0 or l < 1:
        raise ValidationError("c and beta_const must be >= 0 and l >= 1")
    _check_unit("nu", nu)
    if t == 0:
        return 1.0
    if mode == "mse":
        base = (1.0 - nu + beta_const * (math.sqrt(c) + math.sqrt(t / n))) / 9.0
    else:
        log_alpha = _log2_alphabet(alphabet_sizes)
        base = 1.0 - nu + beta_const * (
            math.sqrt(l * c) + l * math.sqrt(t * log_alpha / n)
        )
    return float(min(max(base, 0.0), 1.0) ** t)


# ---------------------------------------------------------------------------
# Empirical repetition probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RepetitionProbe:
    """Search task: best success probability for ``n`` parallel copies of a
    two-player game when the players may exchange one simultaneous round
    of ``comm_bits`` classical bits before answering."""

    game: games_mod.GamePredicate
    n: int
    comm_bits: int
    search_budget: int = 2_000_000
    seed: int = 0
    best_value: float | None = None
    kind: str | None = None
    certificate: dict | None = None


def _repeated_tensors(game: games_mod.GamePredicate, n: int):
    """Dense per-tuple tables for n copies: probabilities (NX, NY) and
    win weights (NX, NY, MA, MB), tuple indices in row-major order."""
    nx, ny = game.input_sizes
    ma, mb = game.output_sizes
    NX, NY, MA, MB = nx**n, ny**n, ma**n, mb**n
    if NX * NY * MA * MB > _PROBE_TENSOR_LIMIT:
        raise CapabilityError(
            f"repetition tensor with {NX * NY * MA * MB} entries exceeds the probe limit"
        )
    V = game.dense_V().astype(float)  # (ma, mb, nx, ny)
    p = np.asarray(game.p, dtype=float)
    xs = np.stack(np.unravel_index(np.arange(NX), (nx,) * n))  # (n, NX)
    ys = np.stack(np.unravel_index(np.arange(NY), (ny,) * n))
    As = np.stack(np.unravel_index(np.arange(MA), (ma,) * n))
    Bs = np.stack(np.unravel_index(np.arange(MB), (mb,) * n))
    Pn = np.ones((NX, NY))
    Wn = np.ones((NX, NY, MA, MB))
    for i in range(n):
        Pn *= p[xs[i][:, None], ys[i][None, :]]
        Wn *= V[
            As[i][None, None, :, None],
            Bs[i][None, None, None, :],
            xs[i][:, None, None, None],
            ys[i][None, :, None, None],
        ]
    return Pn[:, :, None, None] * Wn  # (NX, NY, MA, MB)


def _split_work(NX: int, NY: int, MA: int, MB: int, kA: int, kB: int) -> int:
    g_count = (2**kA) ** NX * (2**kB) ** NY
    fa = MA ** (NX * 2**kB)
    fb = MB ** (NY * 2**kA)
    return g_count * min(fa, fb)


def _score_candidates(PV: np.ndarray, g_A: np.ndarray, g_B: np.ndarray, cands: np.ndarray):
    """Scores of output-map candidates for the enumerated player, with the
    other player's output map best-responded exactly per (input, message)
    cell.  ``PV`` has shape (NX, NY, MA, MB); ``cands`` (count, NX, mB)."""
    n_msgs_a = int(g_A.max()) + 1 if g_A.size else 1
    a_sel = cands[:, np.arange(PV.shape[0])[:, None], g_B[None, :]]  # (count, NX, NY)
    gathered = np.take_along_axis(
        PV[None], a_sel[:, :, :, None, None], axis=3
    )[:, :, :, 0, :]  # (count, NX, NY, MB)
    total = np.zeros(cands.shape[0])
    for m in range(n_msgs_a):
        mask = g_A == m
        if not mask.any():
            continue
        grouped = gathered[:, mask].sum(axis=1)  # (count, NY, MB)
        total += grouped.max(axis=2).sum(axis=1)
    return total


def _best_response_maps(PV: np.ndarray, g_A: np.ndarray, g_B: np.ndarray, f_A: np.ndarray, mA: int):
    """Exact best-response output map for the non-enumerated player."""
    NX, NY = PV.shape[:2]
    MB = PV.shape[3]
    f_B = np.zeros((NY, mA), dtype=np.int64)
    a_sel = f_A[np.arange(NX)[:, None], g_B[None, :]]  # (NX, NY)
    gathered = np.take_along_axis(PV, a_sel[:, :, None, None], axis=2)[:, :, 0, :]  # (NX, NY, MB)
    for m in range(mA):
        mask = g_A == m
        grouped = gathered[mask].sum(axis=0) if mask.any() else np.zeros((NY, MB))
        f_B[:, m] = np.argmax(grouped, axis=1)
    return f_B


def _protocol_value(PV, g_A, g_B, f_A, f_B) -> float:
    NX, NY = PV.shape[:2]
    a_sel = f_A[np.arange(NX)[:, None], g_B[None, :]]
    b_sel = f_B[:, g_A].T  # (NX, NY)
    return float(
        PV[np.arange(NX)[:, None], np.arange(NY)[None, :], a_sel, b_sel].sum()
    )


def _exhaustive_split(PV, kA, kB, budget_left):
    """Exact optimum over all protocols of one message split; returns
    (value, certificate, evaluations)."""
    NX, NY, MA, MB = PV.shape
    mA, mB = 2**kA, 2**kB
    fa_count = MA ** (NX * mB)
    fb_count = MB ** (NY * mA)
    swap = fb_count < fa_count
    work_PV = np.transpose(PV, (1, 0, 3, 2)) if swap else PV
    # after a swap the roles are exchanged: "A" below is the enumerated player
    nX, nY, mA_out, mB_out = work_PV.shape
    msgs_a, msgs_b = (mB, mA) if swap else (mA, mB)
    cells = nX * msgs_b
    n_cands = mA_out**cells
    best = -1.0
    best_cert = None
    used = 0
    chunk = 65536
    for g_a_tuple in itertools.product(range(msgs_a), repeat=nX):
        g_a = np.asarray(g_a_tuple, dtype=np.int64)
        for g_b_tuple in itertools.product(range(msgs_b), repeat=nY):
            g_b = np.asarray(g_b_tuple, dtype=np.int64)
            for start in range(0, n_cands, chunk):
                stop = min(start + chunk, n_cands)
                ids = np.arange(start, stop)
                cands = np.stack(
                    np.unravel_index(ids, (mA_out,) * cells), axis=1
                ).reshape(stop - start, nX, msgs_b)
                scores = _score_candidates(work_PV, g_a, g_b, cands)
                used += stop - start
                if used > budget_left:
                    raise BudgetExceededError(
                        "exhaustive protocol search exceeded its evaluation budget"
                    )
                top = int(np.argmax(scores))
                if scores[top] > best + 1e-15:
                    best = float(scores[top])
                    f_a = cands[top]
                    f_b = _best_response_maps(work_PV, g_a, g_b, f_a, msgs_a)
                    if swap:
                        best_cert = {
                            "kA": kA,
                            "kB": kB,
                            "g_A": g_b.tolist(),
                            "g_B": g_a.tolist(),
                            "f_A": f_b.tolist(),
                            "f_B": f_a.tolist(),
                        }
                    else:
                        best_cert = {
                            "kA": kA,
                            "kB": kB,
                            "g_A": g_a.tolist(),
                            "g_B": g_b.tolist(),
                            "f_A": f_a.tolist(),
                            "f_B": f_b.tolist(),
                        }
                if best >= 1.0 - _WIN_EPS:
                    return best, best_cert, used
    return best, best_cert, used


def _ascend(PV, g_A, g_B, f_A, f_B, mA, mB, max_passes=200):
    """Coordinate ascent over the four protocol maps, each block updated to
    its exact best response."""
    NX, NY, MA, MB = PV.shape
    value = _protocol_value(PV, g_A, g_B, f_A, f_B)
    for _ in range(max_passes):
        b_sel = f_B[:, g_A].T  # (NX, NY)
        for x in range(NX):
            T = np.take_along_axis(PV[x], b_sel[x][:, None, None], axis=2)[:, :, 0]
            for m in range(mB):
                mask = g_B == m
                if mask.any():
                    f_A[x, m] = int(np.argmax(T[mask].sum(axis=0)))
        a_sel = f_A[np.arange(NX)[:, None], g_B[None, :]]
        for y in range(NY):
            T = np.take_along_axis(PV[:, y], a_sel[:, y][:, None, None], axis=1)[:, 0, :]
            for m in range(mA):
                mask = g_A == m
                if mask.any():
                    f_B[y, m] = int(np.argmax(T[mask].sum(axis=0)))
        a_sel = f_A[np.arange(NX)[:, None], g_B[None, :]]
        for x in range(NX):
            gains = [
                float(
                    PV[x, np.arange(NY), a_sel[x], f_B[:, m]].sum()
                )
                for m in range(mA)
            ]
            g_A[x] = int(np.argmax(gains))
        b_sel = f_B[:, g_A].T
        for y in range(NY):
            gains = [
                float(PV[np.arange(NX), y, f_A[:, m], b_sel[:, y]].sum())
                for m in range(mB)
            ]
            g_B[y] = int(np.argmax(gains))
        new_value = _protocol_value(PV, g_A, g_B, f_A, f_B)
        if new_value <= value + 1e-15:
            value = max(value, new_value)
            break
        value = new_value
    return value


def empirical_repeated_value(probe: RepetitionProbe) -> RepetitionProbe:
    """Search for the best one-round-communication protocol on ``probe.n``
    parallel copies.

    Exhaustive (exact) when every message split fits in ``search_budget``
    evaluations, otherwise seeded coordinate-ascent restarts from the
    per-copy product strategy; the result is then a lower bound."""
    game = probe.game
    if game.players != 2:
        raise CapabilityError("repetition probe implemented for two players only")
    if not 0 <= probe.comm_bits <= 4:
        raise ValidationError(f"comm_bits must lie in [0, 4], got {probe.comm_bits}")
    if probe.n < 1:
        raise ValidationError(f"n must be >= 1, got {probe.n}")
    PV = _repeated_tensors(game, probe.n)
    NX, NY, MA, MB = PV.shape
    splits = [(kA, probe.comm_bits - kA) for kA in range(probe.comm_bits, -1, -1)]
    total_work = sum(_split_work(NX, NY, MA, MB, kA, kB) for kA, kB in splits)

    if total_work <= probe.search_budget:
        best, best_cert = -1.0, None
        left = probe.search_budget
        for kA, kB in splits:
            value, cert, used = _exhaustive_split(PV, kA, kB, left)
            left -= used
            if value > best + 1e-15:
                best, best_cert = value, cert
            if best >= 1.0 - _WIN_EPS:
                break
        return dataclasses.replace(
            probe, best_value=min(best, 1.0), kind="exhaustive", certificate=best_cert
        )

    base = games_mod.classical_value(game)
    amap = np.asarray(base.certificate.maps[0], dtype=np.int64)
    bmap = np.asarray(base.certificate.maps[1], dtype=np.int64)
    xs = np.stack(np.unravel_index(np.arange(NX), (game.input_sizes[0],) * probe.n))
    ys = np.stack(np.unravel_index(np.arange(NY), (game.input_sizes[1],) * probe.n))
    out_a = np.ravel_multi_index(tuple(amap[xs[i]] for i in range(probe.n)), (game.output_sizes[0],) * probe.n)
    out_b = np.ravel_multi_index(tuple(bmap[ys[i]] for i in range(probe.n)), (game.output_sizes[1],) * probe.n)

    best, best_state = -1.0, None
    for kA, kB in splits:
        mA, mB = 2**kA, 2**kB
        starts = [
            (
                np.zeros(NX, dtype=np.int64),
                np.zeros(NY, dtype=np.int64),
                np.repeat(out_a[:, None], mB, axis=1).astype(np.int64),
                np.repeat(out_b[:, None], mA, axis=1).astype(np.int64),
            )
        ]
        for r in range(8):
            rng = np.random.default_rng([probe.seed, kA, r])
            starts.append(
                (
                    rng.integers(0, mA, NX),
                    rng.integers(0, mB, NY),
                    rng.integers(0, MA, (NX, mB)),
                    rng.integers(0, MB, (NY, mA)),
                )
            )
        for g_A, g_B, f_A, f_B in starts:
            value = _ascend(PV, g_A, g_B, f_A, f_B, mA, mB)
            if value > best + 1e-15:
                best = value
                best_state = {
                    "kA": kA,
                    "kB": kB,
                    "g_A": g_A.tolist(),
                    "g_B": g_B.tolist(),
                    "f_A": f_A.tolist(),
                    "f_B": f_B.tolist(),
                }
            if best >= 1.0 - _WIN_EPS:
                break
        if best >= 1.0 - _WIN_EPS:
            break
    return dataclasses.replace(
        probe, best_value=min(best, 1.0), kind="lower_bound", certificate=best_state
    )


# ---------------------------------------------------------------------------
# Substate perturbation, classical case
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubstateReport:
    """Outcome of the classical substate-perturbation feasibility check."""

    status: str  # "feasible" | "infeasible" | "hypothesis_failed"
    smoothing_pd: float
    marginal_pd: float
    conclusion_pd: float | None
    conclusion_threshold: float
    conclusion_factor: float
    witness: np.ndarray | None


def _coerce_probs(arg, length: int, name: str) -> np.ndarray:
    if isinstance(arg, ClassicalDistribution):
        p = arg.probs
    else:
        p = ClassicalDistribution(np.asarray(arg, dtype=float)).probs
    if p.size != length:
        raise ValidationError(f"{name} has {p.size} entries, expected {length}")
    return p


def _purified_distance(F: float) -> float:
    return math.sqrt(max(0.0, 1.0 - min(F, 1.0) ** 2))


def _max_fidelity_capped(sigma: np.ndarray, caps: np.ndarray):
    """Maximise the Bhattacharyya fidelity sum_i sqrt(sigma_i r_i) over
    distributions r with 0 <= r <= caps; exact water-filling on the KKT
    thresholds.  Returns (fidelity, r) or None when no such r exists."""
    sigma = sigma.reshape(-1)
    caps = caps.reshape(-1)
    if caps.sum() < 1.0 - 1e-12:
        return None
    r = np.zeros_like(sigma)
    supp = sigma > 0.0
    cap_supp = float(caps[supp].sum())
    if cap_supp >= 1.0 - 1e-12:
        idx = np.flatnonzero(supp)
        thresholds = caps[idx] / sigma[idx]
        order = idx[np.argsort(thresholds, kind="stable")]
        capped_mass = 0.0
        free_weight = float(sigma[idx].sum())
        s_star = None
        for j in order:
            s_j = caps[j] / sigma[j]
            cand = (1.0 - capped_mass) / free_weight if free_weight > 0 else math.inf
            if cand <= s_j + 1e-15:
                s_star = cand
                break
            capped_mass += float(caps[j])
            free_weight -= float(sigma[j])
        if s_star is None:
            s_star = float(thresholds.max()) if idx.size else 0.0
        r[idx] = np.minimum(caps[idx], sigma[idx] * s_star)
    else:
        r[supp] = caps[supp]
    residual = 1.0 - float(r.sum())
    if residual > 0:
        slack = caps - r
        for j in np.flatnonzero(slack > 0):
            take = min(residual, float(slack[j]))
            r[j] += take
            residual -= take
            if residual <= 1e-15:
                break
    F = float(np.sqrt(sigma * r).sum())
    return min(F, 1.0), r


def substate_perturbation_check_classical(
    sigma_XB, psi_X, rho_B, c: float, eps: float, delta0: float, delta1: float
) -> SubstateReport:
    """Check, on classical tables, that a distribution close to ``sigma_XB``
    fits under ``2^{c+1} (1 + 4/delta0^2) psi_X (x) rho_B``.

    Hypotheses verified first: some distribution within purified distance
    ``eps`` of ``sigma_XB`` sits below ``2^c psi_X (x) sigma_B`` (with
    ``sigma_B`` the marginal of ``sigma_XB``), and the purified distance
    between ``sigma_B`` and ``rho_B`` is at most ``delta1``.  The
    conclusion asks for purified distance at most ``2 eps + delta0 +
    delta1``.  Both sides are settled exactly by maximising Bhattacharyya
    fidelity over the capped simplex."""
    table = sigma_XB.table if isinstance(sigma_XB, JointTable) else JointTable(np.asarray(sigma_XB, dtype=float)).table
    psi = _coerce_probs(psi_X, table.shape[0], "psi_X")
    rho = _coerce_probs(rho_B, table.shape[1], "rho_B")
    if c < 0:
        raise ValidationError(f"c must be >= 0, got {c}")
    _check_unit("eps", eps)
    if delta0 <= 0:
        raise ValidationError(f"delta0 must be positive, got {delta0}")
    if delta1 < 0:
        raise ValidationError(f"delta1 must be >= 0, got {delta1}")

    sigma_B = table.sum(axis=0)
    marginal_pd = _purified_distance(float(np.sqrt(sigma_B * rho).sum()))
    factor = 2.0 ** (c + 1.0) * (1.0 + 4.0 / delta0**2)
    threshold = 2.0 * eps + delta0 + delta1

    hyp_caps = (2.0**c) * np.outer(psi, sigma_B)
    hyp = _max_fidelity_capped(table, hyp_caps)
    smoothing_pd = math.inf if hyp is None else _purified_distance(hyp[0])
    if hyp is None or smoothing_pd > eps + 1e-9 or marginal_pd > delta1 + 1e-9:
        return SubstateReport(
            status="hypothesis_failed",
            smoothing_pd=smoothing_pd,
            marginal_pd=marginal_pd,
            conclusion_pd=None,
            conclusion_threshold=threshold,
            conclusion_factor=factor,
            witness=None,
        )

    concl_caps = factor * np.outer(psi, rho)
    concl = _max_fidelity_capped(table, concl_caps)
    if concl is None:
        conclusion_pd = math.inf
        witness = None
    else:
        conclusion_pd = _purified_distance(concl[0])
        witness = concl[1].reshape(table.shape)
    status = "feasible" if conclusion_pd <= threshold + 1e-9 else "infeasible"
    return SubstateReport(
        status=status,
        smoothing_pd=smoothing_pd,
        marginal_pd=marginal_pd,
        conclusion_pd=conclusion_pd,
        conclusion_threshold=threshold,
        conclusion_factor=factor,
        witness=witness,
    )
