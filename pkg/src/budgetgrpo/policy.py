"""Toy autoregressive policy: linear softmax over hand-built context features.

The parameter vector ``theta`` is a ``(feature_dim, vocab_size)`` weight
matrix stored flat. Most features are one-hot (previous tokens, tag phase,
task operands conditioned on the answer digit slot), so a state is a short
list of active row indices plus two real-valued features: the generated
fraction of ``max_len`` and the remaining fraction of the token budget.

Everything that touches a state goes through :func:`_advance`, used both by
the sampler and by the replay in :func:`featurize`, so log-probabilities
recomputed from tokens match the ones recorded at sampling time bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .tagparse import ANSWER_CLOSE, ANSWER_OPEN, THINK_CLOSE, THINK_OPEN

EOS = "<eos>"
TOKENS: tuple[str, ...] = (
    *"0123456789",
    "+", "-", "*", "=", "?", ",", ".", "/", " ",
    THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE,
    EOS,
)
TOKEN_ID = {tok: i for i, tok in enumerate(TOKENS)}
VOCAB_SIZE = len(TOKENS)
EOS_ID = TOKEN_ID[EOS]
OPERATORS = ("+", "-", "*")

# tag phase of a partial completion
PRE, THINK, BETWEEN, ANSWER, DONE = range(5)
N_PHASES = 5

_THINK_OPEN_ID = TOKEN_ID[THINK_OPEN]
_THINK_CLOSE_ID = TOKEN_ID[THINK_CLOSE]
_ANSWER_OPEN_ID = TOKEN_ID[ANSWER_OPEN]
_ANSWER_CLOSE_ID = TOKEN_ID[ANSWER_CLOSE]
_TAG_IDS = np.array([_THINK_OPEN_ID, _THINK_CLOSE_ID, _ANSWER_OPEN_ID, _ANSWER_CLOSE_ID, EOS_ID])


def encode(text: str) -> list[int]:
    """Greedy tokenization; tags are matched before single characters."""
    ids = []
    i = 0
    tags = sorted((t for t in TOKENS if len(t) > 1), key=len, reverse=True)
    while i < len(text):
        for tag in tags:
            if text.startswith(tag, i):
                ids.append(TOKEN_ID[tag])
                i += len(tag)
                break
        else:
            if text[i] not in TOKEN_ID:
                raise ValueError(f"character {text[i]!r} is not in the vocabulary")
            ids.append(TOKEN_ID[text[i]])
            i += 1
    return ids


def decode(ids: Sequence[int]) -> str:
    return "".join("" if i == EOS_ID else TOKENS[i] for i in ids)


@dataclass(frozen=True)
class FeatureSpec:
    """Layout of the sparse and dense feature blocks.

    ``operand_max`` bounds the operands the task features can represent;
    ``answer_slots`` is how many answer characters get their own operand
    weights (later characters share the last slot). ``pair_features`` adds a
    one-hot over the full ``(a, op, b)`` triple per slot, which is what lets
    a linear model memorise arithmetic facts.
    """

    operand_max: int = 9
    answer_slots: int = 4
    pair_features: bool = True

    @property
    def n_operands(self) -> int:
        return self.operand_max + 1

    @property
    def blocks(self) -> tuple[tuple[str, int], ...]:
        s = self.answer_slots
        n = self.n_operands
        blocks = [
            ("bias", 1),
            ("prev1", VOCAB_SIZE + 1),
            ("prev2", VOCAB_SIZE + 1),
            ("phase", N_PHASES),
            ("slot", s + 1),
            ("a_slot", n * s + 1),
            ("b_slot", n * s + 1),
            ("op_slot", len(OPERATORS) * s + 1),
        ]
        if self.pair_features:
            blocks.append(("pair_slot", len(OPERATORS) * n * n * s + 1))
        return tuple(blocks)

    @property
    def offsets(self) -> dict[str, int]:
        out = {}
        pos = 0
        for name, size in self.blocks:
            out[name] = pos
            pos += size
        return out

    @property
    def n_sparse(self) -> int:
        return sum(size for _, size in self.blocks)

    @property
    def n_active(self) -> int:
        return len(self.blocks)

    n_dense = 2

    @property
    def feature_dim(self) -> int:
        return self.n_sparse + self.n_dense

    @property
    def n_params(self) -> int:
        return self.feature_dim * VOCAB_SIZE


@dataclass(frozen=True)
class Context:
    """What the policy conditions on besides its own output: the task and budget."""

    operand_a: int
    operator: str
    operand_b: int
    budget: int
    max_len: int = 0

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.max_len == 0:
            object.__setattr__(self, "max_len", 2 * self.budget)
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")


@dataclass
class Trajectory:
    context: Context
    tokens: list[int]
    logprob_old: float

    @property
    def length(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return decode(self.tokens)


@dataclass
class TokenStates:
    """Flattened per-step features for a batch of sequences.

    Row ``j`` describes the state before token ``token[j]`` of sequence
    ``seq[j]`` was emitted.
    """

    active: np.ndarray  # (n_steps, n_active) int
    dense: np.ndarray  # (n_steps, 2) float
    token: np.ndarray  # (n_steps,) int
    seq: np.ndarray  # (n_steps,) int
    n_seq: int

    def __len__(self) -> int:
        return len(self.token)


@dataclass
class _BatchState:
    spec: FeatureSpec
    a: np.ndarray
    b: np.ndarray
    op: np.ndarray
    budget: np.ndarray
    max_len: np.ndarray
    prev1: np.ndarray = field(init=False)
    prev2: np.ndarray = field(init=False)
    phase: np.ndarray = field(init=False)
    count: np.ndarray = field(init=False)
    t: int = 0

    def __post_init__(self):
        n = len(self.a)
        self.prev1 = np.full(n, VOCAB_SIZE)
        self.prev2 = np.full(n, VOCAB_SIZE)
        self.phase = np.full(n, PRE)
        self.count = np.zeros(n, dtype=int)

    @classmethod
    def from_contexts(cls, spec: FeatureSpec, contexts: Sequence[Context]) -> "_BatchState":
        for c in contexts:
            if not (0 <= c.operand_a <= spec.operand_max and 0 <= c.operand_b <= spec.operand_max):
                raise ValueError(f"operands of {c} exceed operand_max={spec.operand_max}")
        return cls(
            spec,
            np.array([c.operand_a for c in contexts], dtype=int),
            np.array([c.operand_b for c in contexts], dtype=int),
            np.array([OPERATORS.index(c.operator) for c in contexts], dtype=int),
            np.array([c.budget for c in contexts], dtype=float),
            np.array([c.max_len for c in contexts], dtype=float),
        )

    def features(self) -> tuple[np.ndarray, np.ndarray]:
        spec = self.spec
        off = spec.offsets
        s = spec.answer_slots
        n = spec.n_operands
        in_answer = self.phase == ANSWER
        slot = np.minimum(self.count, s - 1)
        cols = [
            np.zeros_like(self.prev1),
            off["prev1"] + self.prev1,
            off["prev2"] + self.prev2,
            off["phase"] + self.phase,
            off["slot"] + np.where(in_answer, slot, s),
            off["a_slot"] + np.where(in_answer, self.a * s + slot, n * s),
            off["b_slot"] + np.where(in_answer, self.b * s + slot, n * s),
            off["op_slot"] + np.where(in_answer, self.op * s + slot, len(OPERATORS) * s),
        ]
        if spec.pair_features:
            pair = (self.op * n + self.a) * n + self.b
            cols.append(off["pair_slot"] + np.where(in_answer, pair * s + slot, len(OPERATORS) * n * n * s))
        active = np.stack(cols, axis=1)
        dense = np.stack(
            [np.full(len(self.a), self.t) / self.max_len, (self.budget - self.t) / self.budget], axis=1
        )
        return active, dense

    def advance(self, tok: np.ndarray) -> None:
        _advance(self, tok)


def _advance(state: _BatchState, tok: np.ndarray) -> None:
    phase = state.phase
    new = phase.copy()
    new[(phase == PRE) & (tok == _THINK_OPEN_ID)] = THINK
    new[(phase == THINK) & (tok == _THINK_CLOSE_ID)] = BETWEEN
    new[((phase == PRE) | (phase == BETWEEN)) & (tok == _ANSWER_OPEN_ID)] = ANSWER
    new[(phase == ANSWER) & (tok == _ANSWER_CLOSE_ID)] = DONE
    state.count = state.count + ((phase == ANSWER) & (new == ANSWER) & ~np.isin(tok, _TAG_IDS))
    state.phase = new
    state.prev2 = state.prev1
    state.prev1 = tok
    state.t += 1


def _logits(W: np.ndarray, active: np.ndarray, dense: np.ndarray) -> np.ndarray:
    # explicit left-to-right accumulation keeps results independent of batch size
    out = W[active[:, 0]].copy()
    for j in range(1, active.shape[1]):
        out += W[active[:, j]]
    n_sparse = W.shape[0] - dense.shape[1]
    for j in range(dense.shape[1]):
        out += dense[:, j:j + 1] * W[n_sparse + j]
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


class Policy:
    """A parameter snapshot together with the feature layout it is defined over."""

    def __init__(self, spec: FeatureSpec, theta: Optional[np.ndarray] = None):
        self.spec = spec
        if theta is None:
            theta = np.zeros(spec.n_params)
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (spec.n_params,):
            raise ValueError(f"theta has shape {theta.shape}, expected ({spec.n_params},)")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta has non-finite entries")
        self.theta = theta

    @property
    def W(self) -> np.ndarray:
        return self.theta.reshape(self.spec.feature_dim, VOCAB_SIZE)

    def with_theta(self, theta: np.ndarray) -> "Policy":
        return Policy(self.spec, theta)

    def copy(self) -> "Policy":
        return Policy(self.spec, self.theta.copy())

    # -- state-level quantities -------------------------------------------

    def step_log_probs(self, states: TokenStates) -> np.ndarray:
        """Full next-token log-distribution at every state, shape ``(n_steps, V)``."""
        return _log_softmax(_logits(self.W, states.active, states.dense))

    def sequence_logprobs(self, states: TokenStates) -> np.ndarray:
        """Log-probability of each whole sequence, summed step by step in order."""
        lp = self.step_log_probs(states)
        picked = lp[np.arange(len(states)), states.token]
        out = np.zeros(states.n_seq)
        # states are stored time-major, so per-sequence sums accumulate in time order
        np.add.at(out, states.seq, picked)
        return out

    def scatter_grad(self, states: TokenStates, coef: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_j <coef[j], logits_j>`` with respect to theta."""
        G = np.zeros((self.spec.feature_dim, VOCAB_SIZE))
        for j in range(states.active.shape[1]):
            np.add.at(G, states.active[:, j], coef)
        n_sparse = self.spec.n_sparse
        G[n_sparse:] += states.dense.T @ coef
        return G.ravel()

    def sequence_grads(self, states: TokenStates, weights: np.ndarray) -> np.ndarray:
        """``sum_i weights[i] * grad log pi(sequence_i)``."""
        p = np.exp(self.step_log_probs(states))
        coef = -p
        coef[np.arange(len(states)), states.token] += 1.0
        coef *= weights[states.seq][:, None]
        return self.scatter_grad(states, coef)

    # -- sampling -----------------------------------------------------------

    def sample_batch(
        self, contexts: Sequence[Context], rng: np.random.Generator, greedy: bool = False
    ) -> list[Trajectory]:
        """Ancestral sampling for every context at once.

        Each sequence stops at end-of-sequence or at its context's
        ``max_len``. One uniform draw per sequence per step is consumed
        whether or not the sequence is still running, so the random stream
        is a function of the batch shape only.
        """
        state = _BatchState.from_contexts(self.spec, contexts)
        n = len(contexts)
        alive = np.ones(n, dtype=bool)
        max_len = np.array([c.max_len for c in contexts])
        logp = np.zeros(n)
        tokens: list[list[int]] = [[] for _ in range(n)]
        W = self.W
        while alive.any():
            active, dense = state.features()
            lp = _log_softmax(_logits(W, active, dense))
            u = rng.random(n)
            if greedy:
                tok = lp.argmax(axis=1)
            else:
                cdf = np.cumsum(np.exp(lp), axis=1)
                tok = np.minimum((u[:, None] > cdf).sum(axis=1), VOCAB_SIZE - 1)
            idx = np.flatnonzero(alive)
            logp[idx] += lp[idx, tok[idx]]
            for i in idx:
                tokens[i].append(int(tok[i]))
            state.advance(tok)
            alive &= (tok != EOS_ID) & (state.t < max_len)
        return [Trajectory(c, toks, float(l)) for c, toks, l in zip(contexts, tokens, logp)]

    def sample(
        self, context: Context, rng: np.random.Generator, greedy: bool = False
    ) -> Trajectory:
        return self.sample_batch([context], rng, greedy)[0]


def featurize(spec: FeatureSpec, contexts: Sequence[Context], token_seqs: Sequence[Sequence[int]]) -> TokenStates:
    """Replay token sequences through the feature extractor.

    Rows are ordered time-major (all sequences at step 0, then step 1, ...),
    the same order in which the sampler accumulates log-probabilities.
    """
    if len(contexts) != len(token_seqs):
        raise ValueError("contexts and token_seqs differ in length")
    for toks in token_seqs:
        for t in toks:
            if not 0 <= t < VOCAB_SIZE:
                raise ValueError(f"token id {t} is not in the vocabulary")
    n = len(contexts)
    lengths = np.array([len(t) for t in token_seqs], dtype=int)
    horizon = int(lengths.max()) if n else 0
    padded = np.full((n, horizon), EOS_ID, dtype=int)
    for i, toks in enumerate(token_seqs):
        padded[i, : len(toks)] = toks
    state = _BatchState.from_contexts(spec, contexts) if n else None
    actives, denses, toks, seqs = [], [], [], []
    for t in range(horizon):
        active, dense = state.features()
        live = np.flatnonzero(lengths > t)
        actives.append(active[live])
        denses.append(dense[live])
        toks.append(padded[live, t])
        seqs.append(live)
        state.advance(padded[:, t])
    if not actives:
        return TokenStates(
            np.zeros((0, spec.n_active), dtype=int), np.zeros((0, spec.n_dense)),
            np.zeros(0, dtype=int), np.zeros(0, dtype=int), n,
        )
    return TokenStates(
        np.concatenate(actives), np.concatenate(denses), np.concatenate(toks), np.concatenate(seqs), n
    )


def trajectory_states(spec: FeatureSpec, trajectories: Sequence[Trajectory]) -> TokenStates:
    return featurize(spec, [tr.context for tr in trajectories], [tr.tokens for tr in trajectories])


def logprob(policy: Policy, context: Context, tokens: Sequence[int]) -> float:
    """log pi(tokens | context), summed over positions."""
    return float(policy.sequence_logprobs(featurize(policy.spec, [context], [tokens]))[0])


def grad_logprob(policy: Policy, context: Context, tokens: Sequence[int]) -> np.ndarray:
    """Analytic gradient of :func:`logprob` with respect to the flat theta."""
    states = featurize(policy.spec, [context], [tokens])
    return policy.sequence_grads(states, np.ones(1))


def kl_per_state(policy: Policy, ref: Policy, states: TokenStates) -> np.ndarray:
    lp = policy.step_log_probs(states)
    lq = ref.step_log_probs(states)
    return np.sum(np.exp(lp) * (lp - lq), axis=1)


def kl_reference(policy: Policy, ref: Policy, states: TokenStates) -> float:
    """Mean over states of the exact KL(policy || ref) between next-token distributions."""
    if len(states) == 0:
        raise ValueError("kl_reference needs at least one state")
    return float(np.mean(kl_per_state(policy, ref, states)))


def grad_kl_reference(policy: Policy, ref: Policy, states: TokenStates) -> np.ndarray:
    lp = policy.step_log_probs(states)
    lq = ref.step_log_probs(states)
    p = np.exp(lp)
    kl = np.sum(p * (lp - lq), axis=1, keepdims=True)
    # d KL / d logit_v = p_v * (log p_v - log q_v - KL)
    coef = p * (lp - lq - kl) / len(states)
    return policy.scatter_grad(states, coef)


# -- checkpoints ------------------------------------------------------------

CHECKPOINT_MAGIC = "budgetgrpo-checkpoint v1"


def save_checkpoint(path, policy: Policy, step: int) -> None:
    """Write a plain-text checkpoint.

    Format: a magic line, then ``key=value`` header lines (``vocab`` as
    space-separated token reprs, feature spec fields, ``step``,
    ``n_params``), a blank line, then one ``repr(float)`` per line in
    row-major ``(feature_dim, vocab_size)`` order.
    """
    spec = policy.spec
    lines = [
        CHECKPOINT_MAGIC,
        "vocab=" + " ".join(repr(t) for t in TOKENS),
        f"operand_max={spec.operand_max}",
        f"answer_slots={spec.answer_slots}",
        f"pair_features={int(spec.pair_features)}",
        f"feature_dim={spec.feature_dim}",
        f"vocab_size={VOCAB_SIZE}",
        f"step={step}",
        f"n_params={spec.n_params}",
        "",
    ]
    lines.extend(repr(float(x)) for x in policy.theta)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> tuple[Policy, int]:
    with open(path) as f:
        text = f.read()
    head, _, body = text.partition("\n\n")
    head_lines = head.splitlines()
    if not head_lines or head_lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a checkpoint")
    header = dict(line.split("=", 1) for line in head_lines[1:])
    vocab = " ".join(repr(t) for t in TOKENS)
    if header["vocab"] != vocab:
        raise ValueError("checkpoint vocabulary does not match this build")
    spec = FeatureSpec(
        operand_max=int(header["operand_max"]),
        answer_slots=int(header["answer_slots"]),
        pair_features=bool(int(header["pair_features"])),
    )
    theta = np.array([float(x) for x in body.split()])
    if len(theta) != int(header["n_params"]) or len(theta) != spec.n_params:
        raise ValueError("checkpoint parameter count does not match its header")
    return Policy(spec, theta), int(header["step"])
