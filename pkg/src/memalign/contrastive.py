"""Minibatch contrastive training of a target-paradigm alignment module
against a frozen anchored module (InfoNCE over anchored negatives)."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .optim import AdamW
from .seeding import component_rng
from .unified import AlignmentModule, MemoryState, align_forward, align_gradients

ZERO_NORM_EPS = 1e-12


class ContrastiveError(ValueError):
    pass


@dataclass
class AlignConfig:
    n_demos: int = 2500  # demonstration pool size, holdout included
    negatives: int = 128  # negative sample size per instance
    batch_size: int = 32
    tau: float = 0.07
    epochs: int = 20
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    warmup_ratio: float = 0.1
    mse_weight: float = 0.1
    holdout: int = 500  # tail of the pool reserved for report accuracy
    seed: int = 42

    def __post_init__(self):
        if self.tau <= 0:
            raise ContrastiveError("temperature must be positive")
        if not 1 <= self.negatives <= self.n_demos - 1:
            raise ContrastiveError("need 1 <= negatives <= n_demos - 1")
        if not 1 <= self.batch_size <= self.n_demos:
            raise ContrastiveError("need 1 <= batch_size <= n_demos")
        if self.mse_weight < 0:
            raise ContrastiveError("mse_weight must be non-negative")
        if not 0 <= self.holdout < self.n_demos:
            raise ContrastiveError("holdout must leave a nonempty training pool")


@dataclass
class AlignTrainReport:
    epoch_losses: list[float]
    holdout_accuracy: float
    wall_seconds: float
    anchor_digest_before: str
    anchor_digest_after: str
    holdout_size: int = 0
    cosine_gap: float = field(default=float("nan"))


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; 0 when either vector is (near) zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContrastiveError(f"dimension mismatch {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return 0.0
    return float(u @ v / (nu * nv))


def _cosine_grad_wrt_second(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """d cos(u, v) / d v; zero when either norm vanishes."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < ZERO_NORM_EPS or nv < ZERO_NORM_EPS:
        return np.zeros_like(v)
    cos = u @ v / (nu * nv)
    return u / (nu * nv) - cos * v / (nv * nv)


def infonce_loss(
    h_a: np.ndarray,
    h_t: np.ndarray,
    negatives: list[np.ndarray] | np.ndarray,
    tau: float,
) -> tuple[float, np.ndarray]:
    """InfoNCE over one positive pair and anchored negatives.

    Returns (loss, d loss / d h_t).  Gradient flows only through the
    positive similarity: negatives come from the frozen anchor side.
    """
    if tau <= 0:
        raise ContrastiveError("temperature must be positive")
    negatives = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if negatives.size == 0:
        raise ContrastiveError("negatives must be nonempty")
    h_a = np.asarray(h_a, dtype=np.float64)
    h_t = np.asarray(h_t, dtype=np.float64)

    sims = np.empty(1 + negatives.shape[0])
    sims[0] = cosine_sim(h_a, h_t)
    for k, neg in enumerate(negatives):
        sims[1 + k] = cosine_sim(h_a, neg)
    logits = sims / tau
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    log_denominator = np.log(exp.sum())
    loss = float(log_denominator - shifted[0])
    p0 = exp[0] / exp.sum()
    d_logit0 = p0 - 1.0
    grad_ht = (d_logit0 / tau) * _cosine_grad_wrt_second(h_a, h_t)
    return loss, grad_ht


def sample_negatives(
    pool_size: int, exclude: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """``count`` distinct indices from range(pool_size) excluding ``exclude``,
    uniform without replacement."""
    if count > pool_size - 1:
        raise ContrastiveError(
            f"cannot draw {count} negatives from a pool of {pool_size}"
        )
    candidates = np.delete(np.arange(pool_size), exclude)
    return rng.choice(candidates, size=count, replace=False)


def _states_matrix(states: list[MemoryState], what: str) -> np.ndarray:
    if not states:
        raise ContrastiveError(f"{what} state list is empty")
    paradigm = states[0].paradigm
    for state in states:
        if state.paradigm != paradigm:
            raise ContrastiveError(
                f"mixed paradigms in {what} states: "
                f"{state.paradigm!r} vs {paradigm!r}"
            )
    return np.stack([s.raw for s in states])


def topk_match_accuracy(anchor_vecs: np.ndarray, target_vecs: np.ndarray) -> float:
    """Top-1 accuracy of nearest-anchor (cosine) matching of target vectors."""
    a = anchor_vecs / np.maximum(
        np.linalg.norm(anchor_vecs, axis=1, keepdims=True), ZERO_NORM_EPS
    )
    t = target_vecs / np.maximum(
        np.linalg.norm(target_vecs, axis=1, keepdims=True), ZERO_NORM_EPS
    )
    sims = t @ a.T
    return float(np.mean(np.argmax(sims, axis=1) == np.arange(t.shape[0])))


def cosine_alignment_gap(anchor_vecs: np.ndarray, target_vecs: np.ndarray) -> float:
    """Mean same-instance cosine minus mean different-instance cosine."""
    a = anchor_vecs / np.maximum(
        np.linalg.norm(anchor_vecs, axis=1, keepdims=True), ZERO_NORM_EPS
    )
    t = target_vecs / np.maximum(
        np.linalg.norm(target_vecs, axis=1, keepdims=True), ZERO_NORM_EPS
    )
    sims = t @ a.T
    n = sims.shape[0]
    same = float(np.trace(sims) / n)
    different = float((sims.sum() - np.trace(sims)) / (n * (n - 1)))
    return same - different


def train_alignment(
    anchor: AlignmentModule,
    target_init: AlignmentModule,
    anchor_states: list[MemoryState],
    target_states: list[MemoryState],
    config: AlignConfig,
) -> tuple[AlignmentModule, AlignTrainReport]:
    """Contrastive alignment of a target module against a frozen anchor.

    ``anchor_states[i]`` and ``target_states[i]`` must be paradigm views
    of the same instance.  The anchor module is never written; its digest
    is recorded before and after training.
    """
    if len(anchor_states) != len(target_states):
        raise ContrastiveError(
            f"state list length mismatch: {len(anchor_states)} anchored vs "
            f"{len(target_states)} target"
        )
    if len(anchor_states) != config.n_demos:
        raise ContrastiveError(
            f"expected {config.n_demos} demonstrations, got {len(anchor_states)}"
        )
    anchor_raw = _states_matrix(anchor_states, "anchored")
    target_raw = _states_matrix(target_states, "target")

    started = time.perf_counter()
    digest_before = anchor.digest()
    # Anchor side is frozen: its unified vectors are fixed for the whole run.
    anchor_vecs = align_forward(anchor, anchor_raw)

    train_n = config.n_demos - config.holdout
    if train_n < config.batch_size:
        raise ContrastiveError("training pool smaller than batch size")
    module = target_init.copy()
    params = module.parameters()
    batches_per_epoch = (train_n + config.batch_size - 1) // config.batch_size
    optimizer = AdamW(
        params,
        lr=config.learning_rate,
        weight_decay=config.weight_decay,
        total_steps=config.epochs * batches_per_epoch,
        warmup_ratio=config.warmup_ratio,
    )
    rng = component_rng(config.seed, "align-train")

    epoch_losses: list[float] = []
    for _epoch in range(config.epochs):
        perm = rng.permutation(train_n)
        epoch_loss = 0.0
        for start in range(0, train_n, config.batch_size):
            batch = perm[start : start + config.batch_size]
            x = target_raw[batch]
            h_t = align_forward(module, x)
            d_ht = np.zeros_like(h_t)
            batch_loss = 0.0
            for row, j in enumerate(batch):
                neg_idx = sample_negatives(train_n, int(j), config.negatives, rng)
                loss, grad = infonce_loss(
                    anchor_vecs[j], h_t[row], anchor_vecs[neg_idx], config.tau
                )
                if config.mse_weight > 0:
                    diff = h_t[row] - anchor_vecs[j]
                    loss += config.mse_weight * float(np.mean(diff * diff))
                    grad = grad + config.mse_weight * 2.0 * diff / diff.shape[0]
                batch_loss += loss
                d_ht[row] = grad
            grads = align_gradients(module, x, d_ht / len(batch))
            optimizer.step(grads)
            epoch_loss += batch_loss
        epoch_losses.append(epoch_loss / train_n)

    if config.holdout > 0:
        eval_idx = np.arange(train_n, config.n_demos)
    else:
        eval_idx = np.arange(config.n_demos)
    eval_anchor = anchor_vecs[eval_idx]
    eval_target = align_forward(module, target_raw[eval_idx])
    accuracy = topk_match_accuracy(eval_anchor, eval_target)
    gap = cosine_alignment_gap(eval_anchor, eval_target)

    report = AlignTrainReport(
        epoch_losses=epoch_losses,
        holdout_accuracy=accuracy,
        wall_seconds=time.perf_counter() - started,
        anchor_digest_before=digest_before,
        anchor_digest_after=anchor.digest(),
        holdout_size=int(eval_idx.shape[0]),
        cosine_gap=gap,
    )
    return module, report
