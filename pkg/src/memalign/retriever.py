"""Generative subgraph retriever: a small gated-recurrence token model
conditioned on (query embedding, unified memory vector), trained by
token-level KL + CE distillation against a label-smoothing teacher oracle
over gold serializations."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .graphs import EvidenceSubgraph, MemoryGraph, verify_subset
from .optim import AdamW
from .seeding import component_rng, fnv1a64
from .tokenization import GraphTokenSequence, linearize_evidence
from .vocab import BOS, Vocabulary


class RetrieverError(ValueError):
    pass


class QueryEmbedder:
    """Seeded feature-hashing bag-of-words embedder, L2-normalized."""

    def __init__(self, d_q: int = 64, seed: int = 0):
        if d_q < 2:
            raise RetrieverError("query embedding dimension must be >= 2")
        self.d_q = d_q
        self.seed = seed

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.d_q)
        for token in text.lower().split():
            h = fnv1a64(token.encode("utf-8")) ^ self.seed
            sign = 1.0 if (h >> 32) & 1 else -1.0
            vec[h % self.d_q] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        return vec


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=axis, keepdims=True)


@dataclass
class RetrieverModel:
    """Single-layer gated recurrence decoder over the graph vocabulary.

    The conditioning vector concat(q, h) is projected (tanh) into the
    initial recurrent state.  Per step on input embedding x and state s:

        z = sigmoid(Wz x + Uz s + bz)
        c = tanh(Wc x + Uc s + bc)
        s' = (1 - z) * s + z * c
        logits = Wo s' + bo
    """

    emb: np.ndarray  # V x d_m token embeddings
    cond_weight: np.ndarray  # d_m x (d_q + d_s)
    cond_bias: np.ndarray
    wz: np.ndarray
    uz: np.ndarray
    bz: np.ndarray
    wc: np.ndarray
    uc: np.ndarray
    bc: np.ndarray
    out_weight: np.ndarray  # V x d_m
    out_bias: np.ndarray

    def __post_init__(self):
        for name, value in self.parameters().items():
            setattr(self, name, np.asarray(value, dtype=np.float64))
        v, d_m = self.emb.shape
        if self.out_weight.shape != (v, d_m) or self.out_bias.shape != (v,):
            raise RetrieverError("inconsistent output head shapes")
        for w in (self.wz, self.uz, self.wc, self.uc):
            if w.shape != (d_m, d_m):
                raise RetrieverError("inconsistent recurrence shapes")
        for b in (self.bz, self.bc, self.cond_bias):
            if b.shape != (d_m,):
                raise RetrieverError("inconsistent bias shapes")
        if self.cond_weight.shape[0] != d_m:
            raise RetrieverError("inconsistent conditioning projection shape")

    @property
    def vocab_size(self) -> int:
        return self.emb.shape[0]

    @property
    def d_m(self) -> int:
        return self.emb.shape[1]

    @property
    def d_cond(self) -> int:
        return self.cond_weight.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "emb": self.emb,
            "cond_weight": self.cond_weight,
            "cond_bias": self.cond_bias,
            "wz": self.wz,
            "uz": self.uz,
            "bz": self.bz,
            "wc": self.wc,
            "uc": self.uc,
            "bc": self.bc,
            "out_weight": self.out_weight,
            "out_bias": self.out_bias,
        }

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def copy(self) -> "RetrieverModel":
        return RetrieverModel(**{k: v.copy() for k, v in self.parameters().items()})

    # -- forward passes -------------------------------------------------

    def init_state(self, q: np.ndarray, h: np.ndarray) -> np.ndarray:
        cond = np.concatenate([np.asarray(q, float), np.asarray(h, float)])
        if cond.shape[0] != self.d_cond:
            raise RetrieverError(
                f"conditioning dimension {cond.shape[0]} != {self.d_cond}"
            )
        return np.tanh(self.cond_weight @ cond + self.cond_bias)

    def cell(self, token: int, state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One recurrence step on an input token; returns (logits, new state)."""
        if not 0 <= token < self.vocab_size:
            raise RetrieverError(f"token id {token} out of range")
        x = self.emb[token]
        z = _sigmoid(self.wz @ x + self.uz @ state + self.bz)
        c = np.tanh(self.wc @ x + self.uc @ state + self.bc)
        new_state = (1.0 - z) * state + z * c
        logits = self.out_weight @ new_state + self.out_bias
        return logits, new_state


def init_retriever(
    vocab_size: int, d_m: int, d_q: int, d_s: int, seed: int
) -> RetrieverModel:
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    return RetrieverModel(
        emb=uniform((vocab_size, d_m), d_m),
        cond_weight=uniform((d_m, d_q + d_s), d_q + d_s),
        cond_bias=np.zeros(d_m),
        wz=uniform((d_m, d_m), d_m),
        uz=uniform((d_m, d_m), d_m),
        bz=np.zeros(d_m),
        wc=uniform((d_m, d_m), d_m),
        uc=uniform((d_m, d_m), d_m),
        bc=np.zeros(d_m),
        out_weight=uniform((vocab_size, d_m), d_m),
        out_bias=np.zeros(vocab_size),
    )


def student_step(
    model: RetrieverModel, prefix: list[int], q: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Run the recurrence over a BOS-prefixed token sequence.

    Returns the next-token logits after consuming the prefix and the
    resulting recurrent state.
    """
    if not prefix or prefix[0] != BOS:
        raise RetrieverError("prefix must begin with BOS")
    state = model.init_state(q, h)
    logits = None
    for token in prefix:
        logits, state = model.cell(token, state)
    return logits, state


@dataclass
class _ForwardCache:
    tokens: list[int]
    cond: np.ndarray
    s0_pre: np.ndarray
    states: np.ndarray  # (L, d_m) with states[0] = initial state
    zs: np.ndarray
    cs: np.ndarray
    logits: np.ndarray  # (L-1, V)


def sequence_logits(
    model: RetrieverModel, tokens: list[int], q: np.ndarray, h: np.ndarray
) -> _ForwardCache:
    """Teacher-forced forward pass; logits[t] predicts tokens[t + 1]."""
    if len(tokens) < 2 or tokens[0] != BOS:
        raise RetrieverError("token sequence must start with BOS and be non-trivial")
    cond = np.concatenate([np.asarray(q, float), np.asarray(h, float)])
    s0_pre = model.cond_weight @ cond + model.cond_bias
    steps = len(tokens) - 1
    d_m = model.d_m
    states = np.empty((steps + 1, d_m))
    zs = np.empty((steps, d_m))
    cs = np.empty((steps, d_m))
    states[0] = np.tanh(s0_pre)
    xs = model.emb[tokens[:-1]]
    for t in range(steps):
        s = states[t]
        z = _sigmoid(model.wz @ xs[t] + model.uz @ s + model.bz)
        c = np.tanh(model.wc @ xs[t] + model.uc @ s + model.bc)
        states[t + 1] = (1.0 - z) * s + z * c
        zs[t] = z
        cs[t] = c
    logits = states[1:] @ model.out_weight.T + model.out_bias
    return _ForwardCache(list(tokens), cond, s0_pre, states, zs, cs, logits)


def sequence_backward(
    model: RetrieverModel, cache: _ForwardCache, d_logits: np.ndarray
) -> dict[str, np.ndarray]:
    """Backpropagation through time given per-step logit gradients."""
    steps = len(cache.tokens) - 1
    if d_logits.shape != (steps, model.vocab_size):
        raise RetrieverError("logit gradient shape mismatch")
    grads = {k: np.zeros_like(v) for k, v in model.parameters().items()}
    xs = model.emb[cache.tokens[:-1]]

    grads["out_weight"] += d_logits.T @ cache.states[1:]
    grads["out_bias"] += d_logits.sum(axis=0)

    d_state = np.zeros(model.d_m)
    for t in range(steps - 1, -1, -1):
        d_s_new = d_logits[t] @ model.out_weight + d_state
        s = cache.states[t]
        z = cache.zs[t]
        c = cache.cs[t]
        d_z = d_s_new * (c - s)
        d_c = d_s_new * z
        d_pre_c = d_c * (1.0 - c * c)
        d_pre_z = d_z * z * (1.0 - z)
        x = xs[t]
        grads["wz"] += np.outer(d_pre_z, x)
        grads["uz"] += np.outer(d_pre_z, s)
        grads["bz"] += d_pre_z
        grads["wc"] += np.outer(d_pre_c, x)
        grads["uc"] += np.outer(d_pre_c, s)
        grads["bc"] += d_pre_c
        d_x = d_pre_z @ model.wz + d_pre_c @ model.wc
        grads["emb"][cache.tokens[t]] += d_x
        d_state = (
            d_s_new * (1.0 - z) + d_pre_z @ model.uz + d_pre_c @ model.uc
        )
    d_s0_pre = d_state * (1.0 - cache.states[0] ** 2)
    grads["cond_weight"] += np.outer(d_s0_pre, cache.cond)
    grads["cond_bias"] += d_s0_pre
    return grads


# -- distillation objective ---------------------------------------------


def teacher_distribution(
    gold: GraphTokenSequence | list[int], step: int, epsilon: float, vocab_size: int
) -> np.ndarray:
    """Label-smoothed gold distribution: (1-eps) one-hot + eps uniform."""
    tokens = list(gold)
    if not 0 <= step < len(tokens):
        raise RetrieverError(f"step {step} out of range for length {len(tokens)}")
    if not 0.0 <= epsilon < 1.0:
        raise RetrieverError("epsilon must be in [0, 1)")
    dist = np.full(vocab_size, epsilon / vocab_size)
    dist[tokens[step]] += 1.0 - epsilon
    return dist


@dataclass
class DistillConfig:
    kl_weight: float = 0.5
    kl_temperature: float = 2.0
    ce_weight: float = 1.0
    teacher_epsilon: float = 0.05
    epochs: int = 3
    learning_rate: float = 1e-5
    weight_decay: float = 0.01
    warmup_ratio: float = 0.05
    batch_size: int = 4
    max_input_tokens: int = 4096
    max_output_tokens: int = 512
    seed: int = 42

    def __post_init__(self):
        if self.kl_temperature <= 0:
            raise RetrieverError("KL temperature must be positive")
        if not 0.0 <= self.teacher_epsilon < 1.0:
            raise RetrieverError("teacher epsilon must be in [0, 1)")


def distill_loss(
    teacher_dists: np.ndarray,
    student_logits: np.ndarray,
    config: DistillConfig,
    gold_tokens: list[int] | None = None,
) -> tuple[float, np.ndarray]:
    """Token-level KL + CE distillation objective.

    loss = kl_weight * T^2 * mean_t KL(p_teacher,t || softmax(logits_t / T))
         + ce_weight * mean_t CE(gold_t, softmax(logits_t))

    Returns (loss, d loss / d student_logits).  The T^2 factor keeps the
    KL gradient scale independent of the temperature.  Gold tokens default
    to the teacher argmax.
    """
    teacher_dists = np.asarray(teacher_dists, dtype=np.float64)
    student_logits = np.asarray(student_logits, dtype=np.float64)
    if teacher_dists.shape != student_logits.shape:
        raise RetrieverError(
            f"step count/vocab mismatch: teacher {teacher_dists.shape} vs "
            f"student {student_logits.shape}"
        )
    sums = teacher_dists.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise RetrieverError("teacher distributions must sum to 1")
    steps = teacher_dists.shape[0]
    if gold_tokens is None:
        gold_tokens = list(np.argmax(teacher_dists, axis=1))
    if len(gold_tokens) != steps:
        raise RetrieverError("gold token count mismatch")

    temp = config.kl_temperature
    q_t = softmax(student_logits / temp, axis=1)
    log_q_t = np.log(q_t)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(teacher_dists > 0, teacher_dists * np.log(teacher_dists), 0.0)
    kl_per_step = plogp.sum(axis=1) - (teacher_dists * log_q_t).sum(axis=1)
    kl_term = float(kl_per_step.mean()) * temp * temp

    probs = softmax(student_logits, axis=1)
    gold_idx = (np.arange(steps), np.asarray(gold_tokens))
    ce_term = float(-np.log(probs[gold_idx]).mean())

    loss = config.kl_weight * kl_term + config.ce_weight * ce_term

    d_logits = (config.kl_weight * temp / steps) * (q_t - teacher_dists)
    d_ce = probs.copy()
    d_ce[gold_idx] -= 1.0
    d_logits += (config.ce_weight / steps) * d_ce
    return loss, d_logits


# -- training ------------------------------------------------------------


@dataclass(frozen=True)
class RetrieverExample:
    """One supervision instance for the retriever."""

    id: str
    query: str
    full_graph: MemoryGraph
    gold_subgraph: EvidenceSubgraph
    h: np.ndarray  # unified memory vector conditioning this instance


@dataclass
class RetrieverTrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    parameter_count: int = 0


def train_retriever(
    model_init: RetrieverModel,
    corpus: list[RetrieverExample],
    vocab: Vocabulary,
    embedder: QueryEmbedder,
    config: DistillConfig,
) -> tuple[RetrieverModel, RetrieverTrainReport]:
    """Teacher-forced AdamW training of the retriever on gold serializations.

    Every gold subgraph must verify against its full graph; inconsistent
    supervision is refused.
    """
    if not corpus:
        raise RetrieverError("empty training corpus")
    started = time.perf_counter()
    sequences: list[list[int]] = []
    queries: list[np.ndarray] = []
    for example in corpus:
        report = verify_subset(example.gold_subgraph, example.full_graph)
        if not report.accepted:
            kinds = ", ".join(v.kind for v in report.violations)
            raise RetrieverError(
                f"instance {example.id!r} fails subset verification ({kinds})"
            )
        seq = list(linearize_evidence(example.gold_subgraph, vocab))
        if len(seq) > config.max_output_tokens:
            raise RetrieverError(
                f"instance {example.id!r} exceeds max output length "
                f"({len(seq)} > {config.max_output_tokens})"
            )
        sequences.append(seq)
        queries.append(embedder.embed(example.query))

    model = model_init.copy()
    params = model.parameters()
    n = len(corpus)
    batches_per_epoch = (n + config.batch_size - 1) // config.batch_size
    optimizer = AdamW(
        params,
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
        total_steps=config.epochs * batches_per_epoch,
        warmup_ratio=config.warmup_ratio,
    )
    rng = component_rng(config.seed, "retriever-train")
    report = RetrieverTrainReport(parameter_count=model.parameter_count())

    for _epoch in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            grads = {k: np.zeros_like(v) for k, v in params.items()}
            batch_loss = 0.0
            for i in batch:
                tokens = sequences[i]
                teacher = np.stack(
                    [
                        teacher_distribution(
                            tokens, t, config.teacher_epsilon, model.vocab_size
                        )
                        for t in range(1, len(tokens))
                    ]
                )
                cache = sequence_logits(model, tokens, queries[i], corpus[i].h)
                loss, d_logits = distill_loss(
                    teacher, cache.logits, config, gold_tokens=tokens[1:]
                )
                example_grads = sequence_backward(model, cache, d_logits)
                for k in grads:
                    grads[k] += example_grads[k]
                batch_loss += loss
            for k in grads:
                grads[k] /= len(batch)
            optimizer.step(grads)
            epoch_loss += batch_loss
        report.epoch_losses.append(epoch_loss / n)

    report.wall_seconds = time.perf_counter() - started
    return model, report
