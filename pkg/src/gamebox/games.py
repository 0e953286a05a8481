"""Multiplayer nonlocal games: predicates, builtin instances, and values.

A game is a tuple (input alphabets, output alphabets, input distribution p,
winning predicate V).  Players receive inputs jointly distributed according
to ``p``, answer without communicating, and win when ``V`` holds.

Builtin games
-------------
* ``magic_square`` -- the Mermin--Peres square as a two-player game: inputs
  are a row index for Alice and a column index for Bob, outputs are
  even-parity (Alice) / odd-parity (Bob) three-bit rows and columns, and the
  players win when the two assignments agree on the shared cell.  Classical
  value 8/9; quantum strategies win with probability 1.
* ``chsh`` -- binary inputs and outputs, win iff ``a XOR b = x AND y``.
* ``mse`` -- magic square extended with a third player who must guess the
  other players' inputs: Alice gets (column, extra bit z), Bob gets a row,
  the third player has a single input and outputs a guess
  (x', y', z', c).  They win iff both input guesses are right, c predicts
  Alice's shared-cell bit, and additionally the square entries agree on the
  shared cell or z was guessed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    BudgetExceededError,
    DimensionMismatchError,
    ValidationError,
)
from . import qcore

Label = Union[int, str, tuple]

# Three-bit strings of even / odd parity: the legal magic-square rows and
# columns.  Index order here fixes the output alphabets everywhere.
EVEN_STRINGS: tuple[str, ...] = ("000", "011", "101", "110")
ODD_STRINGS: tuple[str, ...] = ("001", "010", "100", "111")
EVEN_BITS = np.array([[int(c) for c in s] for s in EVEN_STRINGS], dtype=np.uint8)
ODD_BITS = np.array([[int(c) for c in s] for s in ODD_STRINGS], dtype=np.uint8)

DENSE_PREDICATE_LIMIT = 10**6


@dataclass(frozen=True)
class GamePredicate:
    """Input/output alphabets, input distribution and winning predicate.

    ``p`` has shape ``(|X_1|, ..., |X_l|)``.  ``V`` is either a boolean
    array of shape ``(|A_1|, ..., |A_l|, |X_1|, ..., |X_l|)`` or, for large
    games, a callable ``V(a_indices, x_indices) -> bool``.
    """

    inputs: tuple[tuple[Label, ...], ...]
    outputs: tuple[tuple[Label, ...], ...]
    p: np.ndarray
    V: Union[np.ndarray, Callable[[tuple[int, ...], tuple[int, ...]], bool]]
    name: str | None = None

    def __post_init__(self) -> None:
        if len(self.inputs) == 0 or len(self.inputs) != len(self.outputs):
            raise ValidationError("inputs and outputs must list the same (positive) number of players")
        if any(len(a) == 0 for a in self.inputs) or any(len(a) == 0 for a in self.outputs):
            raise ValidationError("every player needs non-empty alphabets")
        p = np.asarray(self.p, dtype=float)
        if p.shape != self.input_sizes:
            raise DimensionMismatchError(f"p shape {p.shape} != input sizes {self.input_sizes}")
        if np.any(p < -1e-12):
            raise ValidationError("input distribution has negative entries")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"input distribution sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "p", p)
        if isinstance(self.V, np.ndarray):
            want = self.output_sizes + self.input_sizes
            if self.V.shape != want:
                raise DimensionMismatchError(f"V shape {self.V.shape} != {want}")
            object.__setattr__(self, "V", self.V.astype(bool))
        elif not callable(self.V):
            raise ValidationError("V must be a boolean array or a callable")

    @property
    def players(self) -> int:
        return len(self.inputs)

    @property
    def input_sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.inputs)

    @property
    def output_sizes(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.outputs)

    def win(self, a_idx: Sequence[int], x_idx: Sequence[int]) -> bool:
        """Predicate value at output indices `a_idx`, input indices `x_idx`."""
        a = tuple(int(i) for i in a_idx)
        x = tuple(int(i) for i in x_idx)
        if isinstance(self.V, np.ndarray):
            return bool(self.V[a + x])
        return bool(self.V(a, x))

    def dense_V(self) -> np.ndarray:
        """The predicate as a dense boolean array (materialises callables)."""
        if isinstance(self.V, np.ndarray):
            return self.V
        shape = self.output_sizes + self.input_sizes
        if int(np.prod(shape)) > DENSE_PREDICATE_LIMIT:
            raise BudgetExceededError(f"dense predicate table of {np.prod(shape)} entries over limit")
        out = np.zeros(shape, dtype=bool)
        n_out = len(self.output_sizes)
        for a in np.ndindex(*self.output_sizes):
            for x in np.ndindex(*self.input_sizes):
                out[a + x] = self.V(a, x)
        return out


@dataclass(frozen=True)
class ClassicalStrategy:
    """Deterministic strategy: per player, an output index for every input index."""

    maps: tuple[tuple[int, ...], ...]

    def outputs(self, x_idx: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.maps[j][x] for j, x in enumerate(x_idx))


@dataclass(frozen=True)
class QuantumStrategy:
    """Shared pure state plus per-player, per-input POVMs.

    ``povms[j][x][a]`` is the POVM element of player ``j`` on input index
    ``x`` for output index ``a``, acting on ``local_dims[j]``.
    """

    state: np.ndarray
    local_dims: tuple[int, ...]
    povms: tuple[tuple[tuple[np.ndarray, ...], ...], ...]

    def validate(self, game: GamePredicate, tol: float = 1e-9) -> None:
        dims = tuple(int(d) for d in self.local_dims)
        if len(dims) != game.players:
            raise DimensionMismatchError("one local dimension per player required")
        total = int(np.prod(dims))
        vec = np.asarray(self.state, dtype=complex).reshape(-1)
        if vec.size != total:
            raise DimensionMismatchError(f"state dim {vec.size} != product of local dims {total}")
        if abs(np.linalg.norm(vec) - 1.0) > tol:
            raise ValidationError("shared state is not normalised")
        for j in range(game.players):
            if len(self.povms[j]) != len(game.inputs[j]):
                raise DimensionMismatchError(f"player {j}: one POVM per input required")
            for x, povm in enumerate(self.povms[j]):
                if len(povm) != len(game.outputs[j]):
                    raise DimensionMismatchError(f"player {j} input {x}: one element per output required")
                total_op = np.zeros((dims[j], dims[j]), dtype=complex)
                for m in povm:
                    m = np.asarray(m, dtype=complex)
                    if m.shape != (dims[j], dims[j]):
                        raise DimensionMismatchError(f"player {j}: POVM element shape {m.shape}")
                    if np.max(np.abs(m - m.conj().T)) > tol:
                        raise ValidationError("POVM element not Hermitian")
                    if np.linalg.eigvalsh((m + m.conj().T) / 2)[0] < -tol:
                        raise ValidationError("POVM element not PSD")
                    total_op += m
                if np.max(np.abs(total_op - np.eye(dims[j]))) > tol:
                    raise ValidationError(f"player {j} input {x}: POVM does not sum to identity")


@dataclass(frozen=True)
class Correlation:
    """Conditional outcome distribution q(a_1..a_l | x_1..x_l).

    ``q`` has shape ``(output sizes..., input sizes...)``.
    """

    q: np.ndarray
    players: int

    def conditional(self, x_idx: Sequence[int]) -> np.ndarray:
        idx = (Ellipsis,) + tuple(int(i) for i in x_idx)
        return self.q[idx]

    def validate(self, tol: float = 1e-7) -> None:
        l = self.players
        if np.min(self.q) < -tol:
            raise ValidationError("correlation has negative entries")
        out_axes = tuple(range(self.q.ndim - l))
        totals = self.q.sum(axis=out_axes)
        if np.max(np.abs(totals - 1.0)) > tol:
            raise ValidationError("correlation not normalised for every input")


@dataclass(frozen=True)
class GameValueResult:
    value: float
    kind: str  # "exact" or "lower_bound"
    certificate: object | None = None


# ---------------------------------------------------------------------------
# builtin games


def magic_square() -> GamePredicate:
    p = np.full((3, 3), 1.0 / 9.0)
    V = np.zeros((4, 4, 3, 3), dtype=bool)
    for ai, bi, x, y in np.ndindex(4, 4, 3, 3):
        V[ai, bi, x, y] = EVEN_BITS[ai, y] == ODD_BITS[bi, x]
    return GamePredicate(
        inputs=((0, 1, 2), (0, 1, 2)),
        outputs=(EVEN_STRINGS, ODD_STRINGS),
        p=p,
        V=V,
        name="magic_square",
    )


def chsh() -> GamePredicate:
    p = np.full((2, 2), 0.25)
    V = np.zeros((2, 2, 2, 2), dtype=bool)
    for a, b, x, y in np.ndindex(2, 2, 2, 2):
        V[a, b, x, y] = (a ^ b) == (x & y)
    return GamePredicate(
        inputs=((0, 1), (0, 1)),
        outputs=((0, 1), (0, 1)),
        p=p,
        V=V,
        name="chsh",
    )


def mse() -> GamePredicate:
    """Magic square extended with an input-guessing third player."""
    alice_inputs = tuple((x, z) for x in range(3) for z in range(2))
    eve_outputs = tuple(
        (xp, yp, zp, c) for xp in range(3) for yp in range(3) for zp in range(2) for c in range(2)
    )
    p = np.full((6, 3, 1), 1.0 / 18.0)
    V = np.zeros((4, 4, 36, 6, 3, 1), dtype=bool)
    for ai, bi, ei, xa, y in np.ndindex(4, 4, 36, 6, 3):
        x, z = alice_inputs[xa]
        xp, yp, zp, c = eve_outputs[ei]
        a_bit = int(EVEN_BITS[ai, y])
        b_bit = int(ODD_BITS[bi, x])
        V[ai, bi, ei, xa, y, 0] = (
            x == xp and y == yp and a_bit == c and (a_bit == b_bit or z == zp)
        )
    return GamePredicate(
        inputs=(alice_inputs, (0, 1, 2), (0,)),
        outputs=(EVEN_STRINGS, ODD_STRINGS, eve_outputs),
        p=p,
        V=V,
        name="mse",
    )


BUILTIN_GAMES: dict[str, Callable[[], GamePredicate]] = {
    "magic_square": magic_square,
    "chsh": chsh,
    "mse": mse,
}


def builtin_game(name: str) -> GamePredicate:
    try:
        return BUILTIN_GAMES[name]()
    except KeyError:
        raise ValidationError(f"unknown builtin game {name!r}; known: {sorted(BUILTIN_GAMES)}") from None


def _label(value):
    return tuple(value) if isinstance(value, list) else value


def game_from_json(doc: dict) -> GamePredicate:
    """Build a game from the shared JSON schema: ``players``, ``inputs``
    and ``outputs`` (one label list per player), ``p`` (flattened
    row-major) and ``V`` (flattened booleans, or the name of a builtin
    predicate to reuse with the given distribution)."""
    try:
        players = int(doc["players"])
        inputs = tuple(tuple(_label(v) for v in labels) for labels in doc["inputs"])
        outputs = tuple(tuple(_label(v) for v in labels) for labels in doc["outputs"])
        p_flat = doc["p"]
        v_spec = doc["V"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed game description: {exc!r}") from None
    if players != len(inputs):
        raise ValidationError(f"players={players} but {len(inputs)} input alphabets")
    in_sizes = tuple(len(a) for a in inputs)
    out_sizes = tuple(len(a) for a in outputs)
    try:
        p = np.asarray(p_flat, dtype=float).reshape(in_sizes)
        if isinstance(v_spec, str):
            base = builtin_game(v_spec)
            if base.input_sizes != in_sizes or base.output_sizes != out_sizes:
                raise ValidationError(
                    f"builtin predicate {v_spec!r} has alphabet sizes "
                    f"{base.output_sizes}+{base.input_sizes}, got {out_sizes}+{in_sizes}"
                )
            V = base.dense_V()
            name = v_spec
        else:
            V = np.asarray(v_spec, dtype=bool).reshape(out_sizes + in_sizes)
            name = doc.get("name")
    except ValueError as exc:
        raise ValidationError(f"malformed game tables: {exc}") from None
    return GamePredicate(inputs=inputs, outputs=outputs, p=p, V=V, name=name)


def game_to_json(game: GamePredicate) -> dict:
    """Serialise a game to the shared JSON schema (dense predicate)."""
    return {
        "players": game.players,
        "inputs": [list(a) for a in game.inputs],
        "outputs": [list(a) for a in game.outputs],
        "p": game.p.reshape(-1).tolist(),
        "V": game.dense_V().reshape(-1).astype(int).tolist(),
        "name": game.name,
    }


# ---------------------------------------------------------------------------
# classical value


def strategy_value(game: GamePredicate, strategy: ClassicalStrategy) -> float:
    """Winning probability of a deterministic strategy."""
    total = 0.0
    for x in np.ndindex(*game.input_sizes):
        px = float(game.p[x])
        if px == 0.0:
            continue
        if game.win(strategy.outputs(x), x):
            total += px
    return total


def _player_maps(game: GamePredicate, j: int):
    """All deterministic maps of player j, in lexicographic order."""
    return itertools.product(range(len(game.outputs[j])), repeat=len(game.inputs[j]))


def _best_response(game: GamePredicate, r: int, others: Sequence[int], other_maps) -> tuple[float, tuple[int, ...]]:
    """Exact best response of player r against fixed maps of the other players.

    Returns the achieved value and player r's map (first argmax per input).
    """
    n_in_r = len(game.inputs[r])
    n_out_r = len(game.outputs[r])
    margins = [[0.0] * n_out_r for _ in range(n_in_r)]
    pos = {j: t for t, j in enumerate(others)}
    l = game.players
    a_full = [0] * l
    for x in np.ndindex(*game.input_sizes):
        px = float(game.p[x])
        if px == 0.0:
            continue
        for j in others:
            a_full[j] = other_maps[pos[j]][x[j]]
        row = margins[x[r]]
        for oa in range(n_out_r):
            a_full[r] = oa
            if game.win(a_full, x):
                row[oa] += px
    value = 0.0
    r_map = []
    for row in margins:
        best = max(row)
        value += best
        r_map.append(row.index(best))
    return value, tuple(r_map)


def classical_value(game: GamePredicate, budget: int = 10**8) -> GameValueResult:
    """Exact maximum winning probability over deterministic strategies.

    Enumerates all but one player's maps in lexicographic order and
    best-responds the remaining player (the one with the largest strategy
    space) exactly, so the search is equivalent to full enumeration.  Raises
    ``BudgetExceededError`` when the full product strategy space exceeds
    ``budget``.
    """
    l = game.players
    space_sizes = [len(game.outputs[j]) ** len(game.inputs[j]) for j in range(l)]
    total = 1
    for s in space_sizes:
        total *= s
    if total > budget:
        raise BudgetExceededError(f"{total} deterministic strategies exceed budget {budget}")
    r = max(range(l), key=lambda j: (space_sizes[j], j))
    others = [j for j in range(l) if j != r]
    best_val = -1.0
    best_maps: tuple[tuple[int, ...], ...] | None = None
    for combo in itertools.product(*(_player_maps(game, j) for j in others)):
        val, r_map = _best_response(game, r, others, combo)
        if val > best_val:
            best_val = val
            full = []
            it = iter(combo)
            for j in range(l):
                full.append(r_map if j == r else next(it))
            best_maps = tuple(full)
    assert best_maps is not None
    return GameValueResult(best_val, "exact", ClassicalStrategy(best_maps))


# ---------------------------------------------------------------------------
# quantum strategies


def evaluate_quantum_strategy(game: GamePredicate, strategy: QuantumStrategy) -> float:
    """Exact winning probability of a validated quantum strategy."""
    strategy.validate(game)
    psi = np.asarray(strategy.state, dtype=complex).reshape(-1)
    value = 0.0
    for x in np.ndindex(*game.input_sizes):
        px = float(game.p[x])
        if px == 0.0:
            continue
        for a in np.ndindex(*game.output_sizes):
            if not game.win(a, x):
                continue
            op = strategy.povms[0][x[0]][a[0]]
            for j in range(1, game.players):
                op = np.kron(op, strategy.povms[j][x[j]][a[j]])
            value += px * float(np.real(psi.conj() @ (op @ psi)))
    return float(value)


def ms_observables() -> list[list[np.ndarray]]:
    """The 3x3 grid of two-qubit observables behind the magic-square strategy.

    Row products are +I, column products are -I, entries in a row or column
    commute, and every entry is a symmetric matrix.
    """
    I2 = np.eye(2, dtype=complex)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.array([[1, 0], [0, -1]], dtype=complex)
    return [
        [np.kron(I2, Z), np.kron(Z, I2), np.kron(Z, Z)],
        [np.kron(X, I2), np.kron(I2, X), np.kron(X, X)],
        [-np.kron(X, Z), -np.kron(Z, X), np.kron(Y, Y)],
    ]


def canonical_ms_strategy() -> QuantumStrategy:
    """Perfect magic-square strategy on two shared EPR pairs.

    Alice measures the three commuting observables of row x and outputs the
    even-parity bit string of outcomes (eigenvalue +1 encodes bit 0); Bob
    does the same with column y.  Both players use identical (symmetric)
    observables, which on the canonical maximally entangled state yields
    agreement on the shared cell with probability 1.
    """
    grid = ms_observables()
    dim = 4
    psi = np.zeros(dim * dim, dtype=complex)
    for m in range(dim):
        psi[m * dim + m] = 0.5
    eye = np.eye(dim, dtype=complex)

    def projector(ops: list[np.ndarray], bits: np.ndarray) -> np.ndarray:
        out = eye
        for op, bit in zip(ops, bits):
            sign = 1.0 if bit == 0 else -1.0
            out = out @ (eye + sign * op) / 2
        return out

    alice = tuple(
        tuple(projector(grid[x], EVEN_BITS[ai]) for ai in range(4)) for x in range(3)
    )
    bob = tuple(
        tuple(projector([grid[r][y] for r in range(3)], ODD_BITS[bi]) for bi in range(4))
        for y in range(3)
    )
    return QuantumStrategy(state=psi, local_dims=(4, 4), povms=(alice, bob))


# ---------------------------------------------------------------------------
# see-saw lower bounds


def _winning_sets(game: GamePredicate) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    out = {}
    for x in np.ndindex(*game.input_sizes):
        if float(game.p[x]) == 0.0:
            continue
        out[x] = [a for a in np.ndindex(*game.output_sizes) if game.win(a, x)]
    return out


def _kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def _build_game_operator(game, povms, win_sets, dim_total):
    W = np.zeros((dim_total, dim_total), dtype=complex)
    for x, winners in win_sets.items():
        px = float(game.p[x])
        for a in winners:
            W += px * _kron_all([povms[j][x[j]][a[j]] for j in range(game.players)])
    return (W + W.conj().T) / 2


def _effective_operator(psi_t: np.ndarray, ops: dict[int, np.ndarray], j: int) -> np.ndarray:
    """Operator G on player j's space with Tr(M G) = <psi| (x)_k O_k |psi>,
    where O_j = M and O_k = ops[k] for k != j."""
    chi = psi_t
    for k, M in ops.items():
        chi = np.moveaxis(np.tensordot(M, chi, axes=([1], [k])), 0, k)
    axes = [k for k in range(psi_t.ndim) if k != j]
    E = np.tensordot(psi_t.conj(), chi, axes=(axes, axes))
    return E.T


def _positive_projector(mat: np.ndarray, cutoff: float = 1e-12) -> np.ndarray:
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    cols = v[:, w > cutoff]
    return cols @ cols.conj().T


def _optimize_povm(G: list[np.ndarray], current: list[np.ndarray], tol: float) -> list[np.ndarray]:
    """Maximise sum_a Tr(M_a G_a) over POVMs (M_a).

    Two outcomes: exact via the positive part of G_0 - G_1.  More outcomes:
    repeated exact two-outcome improvements on pairs until no pair improves.
    """
    d = current[0].shape[0]
    n = len(current)
    if n == 1:
        return [np.eye(d, dtype=complex)]
    if n == 2:
        P = _positive_projector(G[0] - G[1])
        return [P, np.eye(d, dtype=complex) - P]
    ms = [m.astype(complex) for m in current]
    for _ in range(60):
        improved = 0.0
        for alpha in range(n):
            for beta in range(alpha + 1, n):
                S = ms[alpha] + ms[beta]
                delta = G[alpha] - G[beta]
                shalf = qcore.psd_sqrt(S)
                P = _positive_projector(shalf @ delta @ shalf)
                new_alpha = shalf @ P @ shalf
                gain = float(np.real(np.trace((new_alpha - ms[alpha]) @ delta)))
                if gain > tol:
                    improved += gain
                    ms[alpha] = (new_alpha + new_alpha.conj().T) / 2
                    ms[beta] = S - ms[alpha]
        if improved <= tol:
            break
    return ms


def _random_povms(game: GamePredicate, local_dims, rng) -> list[list[list[np.ndarray]]]:
    povms = []
    for j in range(game.players):
        d = local_dims[j]
        n_out = len(game.outputs[j])
        per_input = []
        for _ in range(len(game.inputs[j])):
            U = qcore.random_unitary(d, rng)
            sizes = [d // n_out + (1 if k < d % n_out else 0) for k in range(n_out)]
            elems = []
            start = 0
            for s in sizes:
                cols = U[:, start : start + s]
                elems.append(cols @ cols.conj().T)
                start += s
            per_input.append(elems)
        povms.append(per_input)
    return povms


def seesaw(
    game: GamePredicate,
    local_dims: Sequence[int],
    restarts: int = 20,
    max_iters: int = 500,
    tol: float = 1e-9,
    seed: int = 0,
) -> GameValueResult:
    """Alternating-optimisation lower bound on the entangled value.

    Alternates between the optimal state for fixed measurements (top
    eigenvector of the game operator) and exact per-input measurement
    updates for a fixed state; the value never decreases along the way.
    Each restart ``r`` draws fresh Haar-random projective measurements from
    ``numpy.random.default_rng([seed, r])``.
    """
    local_dims = tuple(int(d) for d in local_dims)
    if len(local_dims) != game.players:
        raise DimensionMismatchError("one local dimension per player required")
    if any(d < 1 for d in local_dims):
        raise ValidationError("local dimensions must be >= 1")
    win_sets = _winning_sets(game)
    D = int(np.prod(local_dims))
    best_val = -1.0
    best_state = None
    best_povms = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        povms = _random_povms(game, local_dims, rng)
        v = rng.normal(size=D) + 1j * rng.normal(size=D)
        psi = v / np.linalg.norm(v)
        prev = -1.0
        val = 0.0
        for _ in range(max_iters):
            W = _build_game_operator(game, povms, win_sets, D)
            w, vecs = np.linalg.eigh(W)
            psi = vecs[:, -1]
            psi_t = psi.reshape(local_dims)
            for j in range(game.players):
                for ix in range(len(game.inputs[j])):
                    G = [np.zeros((local_dims[j], local_dims[j]), dtype=complex) for _ in game.outputs[j]]
                    for x, winners in win_sets.items():
                        if x[j] != ix:
                            continue
                        px = float(game.p[x])
                        by_rest: dict[tuple[int, ...], list[int]] = {}
                        for a in winners:
                            rest = tuple(a[k] for k in range(game.players) if k != j)
                            by_rest.setdefault(rest, []).append(a[j])
                        for rest, ajs in by_rest.items():
                            ops = {}
                            t = 0
                            for k in range(game.players):
                                if k == j:
                                    continue
                                ops[k] = povms[k][x[k]][rest[t]]
                                t += 1
                            E = _effective_operator(psi_t, ops, j)
                            for aj in ajs:
                                G[aj] = G[aj] + px * E
                    povms[j][ix] = _optimize_povm(G, povms[j][ix], tol * 0.1)
            W = _build_game_operator(game, povms, win_sets, D)
            val = float(np.real(psi.conj() @ (W @ psi)))
            if val - prev < tol:
                break
            prev = val
        if val > best_val:
            best_val = val
            best_state = psi.copy()
            best_povms = [[list(m) for m in pj] for pj in povms]
        if best_val >= 1.0 - 1e-9:
            break
    cert = QuantumStrategy(
        state=best_state,
        local_dims=local_dims,
        povms=tuple(tuple(tuple(m for m in povm) for povm in pj) for pj in best_povms),
    )
    return GameValueResult(min(best_val, 1.0), "lower_bound", cert)


# ---------------------------------------------------------------------------
# repetition


def repeat(game: GamePredicate, n: int, budget: int = 10**7) -> GamePredicate:
    """`n`-fold parallel repetition: inputs drawn iid, win iff every copy wins.

    The repeated predicate is stored densely when it fits in
    ``DENSE_PREDICATE_LIMIT`` entries and as a callable otherwise.  The
    input-distribution table must fit in ``budget`` entries.
    """
    if n < 1:
        raise ValidationError("repetition count must be >= 1")
    if n == 1:
        return game
    l = game.players
    in_sizes = game.input_sizes
    out_sizes = game.output_sizes
    p_entries = 1
    for s in in_sizes:
        p_entries *= s**n
    label_entries = max(s**n for s in in_sizes + out_sizes)
    if p_entries > budget or label_entries > budget:
        raise BudgetExceededError(f"repeated game tables ({p_entries} input cells) exceed budget {budget}")

    new_inputs = tuple(tuple(itertools.product(alpha, repeat=n)) for alpha in game.inputs)
    new_outputs = tuple(tuple(itertools.product(alpha, repeat=n)) for alpha in game.outputs)

    t = game.p
    for _ in range(n - 1):
        t = np.multiply.outer(t, game.p)
    # copy-major axes -> player-major axes, copy 0 most significant
    perm = [c * l + j for j in range(l) for c in range(n)]
    p_new = t.transpose(perm).reshape([s**n for s in in_sizes])

    v_entries = 1
    for s in out_sizes + in_sizes:
        v_entries *= s**n
    if v_entries <= DENSE_PREDICATE_LIMIT and isinstance(game.V, np.ndarray):
        tv = game.V
        for _ in range(n - 1):
            tv = np.multiply.outer(tv, game.V)
        perm_out = [c * 2 * l + j for j in range(l) for c in range(n)]
        perm_in = [c * 2 * l + l + j for j in range(l) for c in range(n)]
        V_new: Union[np.ndarray, Callable] = tv.transpose(perm_out + perm_in).reshape(
            [s**n for s in out_sizes] + [s**n for s in in_sizes]
        )
    else:
        base_win = game.win

        def V_new(a_idx: tuple[int, ...], x_idx: tuple[int, ...], _n=n) -> bool:
            a_digits = [_decode(a_idx[j], out_sizes[j], _n) for j in range(l)]
            x_digits = [_decode(x_idx[j], in_sizes[j], _n) for j in range(l)]
            return all(
                base_win([a_digits[j][c] for j in range(l)], [x_digits[j][c] for j in range(l)])
                for c in range(_n)
            )

    name = f"{game.name}^{n}" if game.name else None
    return GamePredicate(inputs=new_inputs, outputs=new_outputs, p=p_new, V=V_new, name=name)


def _decode(idx: int, base: int, n: int) -> list[int]:
    """Mixed-radix digits of `idx`, copy 0 most significant."""
    digits = [0] * n
    for c in range(n - 1, -1, -1):
        idx, digits[c] = divmod(idx, base)
    return digits


def random_subset_value(
    game: GamePredicate,
    n: int,
    t: int,
    strategy: Union[ClassicalStrategy, Sequence[ClassicalStrategy]],
    trials: int = 10000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of winning all copies in a random size-t subset.

    Plays ``n`` independent copies of ``game`` with the given per-copy
    deterministic strategy (one strategy applied to every copy, or a
    sequence of ``n`` per-copy strategies), draws a uniformly random subset
    of ``t`` coordinates per trial, and reports the fraction of trials in
    which every copy in the subset was won.
    """
    if n < 1 or trials < 1:
        raise ValidationError("need n >= 1 and trials >= 1")
    if not 0 <= t <= n:
        raise ValidationError(f"subset size {t} outside [0, {n}]")
    if isinstance(strategy, ClassicalStrategy):
        per_copy = [strategy] * n
    else:
        per_copy = list(strategy)
        if len(per_copy) != n:
            raise ValidationError(f"need one strategy per copy, got {len(per_copy)} for n={n}")
    if t == 0:
        return 1.0
    p_flat = game.p.reshape(-1)
    cum = np.cumsum(p_flat)
    cum[-1] = 1.0
    x_tuples = list(np.ndindex(*game.input_sizes))
    win_vecs = np.zeros((n, len(x_tuples)), dtype=bool)
    for c, s in enumerate(per_copy):
        for i, x in enumerate(x_tuples):
            win_vecs[c, i] = game.win(s.outputs(x), x)
    rng = np.random.default_rng([seed])
    draws = np.searchsorted(cum, rng.random(size=(trials, n)), side="right")
    wins = win_vecs[np.arange(n)[None, :], draws]
    keys = rng.random(size=(trials, n))
    subset = np.argpartition(keys, t - 1, axis=1)[:, :t]
    ok = np.all(np.take_along_axis(wins, subset, axis=1), axis=1)
    return float(np.mean(ok))
