"""The unified memory space: paradigm registry, synthetic encoders, and
feed-forward alignment modules.

Heterogeneous memory systems are simulated by deterministic synthetic
encoders (a fixed seeded random linear map followed by a smooth
nonlinearity), so cross-paradigm instance identity is well-defined and
alignment is learnable at desk scale.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "identity")


class UnifiedSpaceError(ValueError):
    pass


def apply_activation(name: str, x: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(x)
    if name == "identity":
        return x
    raise UnifiedSpaceError(f"unknown activation {name!r}")


def activation_derivative(name: str, pre: np.ndarray) -> np.ndarray:
    """Elementwise derivative evaluated at the pre-activation values."""
    if name == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    if name == "identity":
        return np.ones_like(pre)
    raise UnifiedSpaceError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class InstanceContent:
    """Desk-scale stand-in for an instance's long-horizon context."""

    id: str
    content_vector: np.ndarray
    gold_answer: str
    segment_tags: tuple[tuple[int, str], ...]  # (segment index, paradigm name)

    def __post_init__(self):
        vec = np.asarray(self.content_vector, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise UnifiedSpaceError(f"non-finite content vector for {self.id!r}")
        object.__setattr__(self, "content_vector", vec)
        object.__setattr__(self, "segment_tags", tuple(self.segment_tags))

    @property
    def segment_count(self) -> int:
        return len(self.segment_tags)


@dataclass(frozen=True)
class MemoryState:
    paradigm: str
    raw: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        if not np.all(np.isfinite(raw)):
            raise UnifiedSpaceError(f"non-finite memory state for {self.paradigm!r}")
        object.__setattr__(self, "raw", raw)

    def digest(self) -> str:
        return hashlib.sha256(self.raw.tobytes()).hexdigest()


@dataclass(frozen=True)
class Paradigm:
    name: str
    d_t: int
    encoder_seed: int
    weight: np.ndarray  # d_t x d_c fixed random linear map
    activation: str = "tanh"


class ParadigmRegistry:
    """Registered memory paradigms with their synthetic encoders."""

    def __init__(self, d_c: int):
        if d_c < 1:
            raise UnifiedSpaceError("content dimension must be positive")
        self.d_c = d_c
        self._paradigms: dict[str, Paradigm] = {}

    def register_paradigm(self, name: str, d_t: int, encoder_seed: int) -> str:
        if name in self._paradigms:
            raise UnifiedSpaceError(f"paradigm {name!r} already registered")
        if d_t < 1:
            raise UnifiedSpaceError("paradigm dimension must be positive")
        rng = np.random.default_rng(encoder_seed)
        weight = rng.standard_normal((d_t, self.d_c)) / np.sqrt(self.d_c)
        self._paradigms[name] = Paradigm(name, d_t, encoder_seed, weight)
        return name

    def __contains__(self, name: str) -> bool:
        return name in self._paradigms

    def names(self) -> tuple[str, ...]:
        return tuple(self._paradigms)

    def get(self, name: str) -> Paradigm:
        paradigm = self._paradigms.get(name)
        if paradigm is None:
            raise UnifiedSpaceError(f"unregistered paradigm {name!r}")
        return paradigm

    def encode_state(
        self,
        name: str,
        content: InstanceContent,
        segment_mask: set[int] | frozenset[int] | None = None,
    ) -> MemoryState:
        """Encode (optionally segment-masked) content into a paradigm state.

        ``segment_mask`` selects visible segments; coordinates of hidden
        segment blocks are zeroed, simulating partial-context memories.
        """
        paradigm = self.get(name)
        vec = content.content_vector
        if segment_mask is not None:
            n_seg = content.segment_count
            for idx in segment_mask:
                if not 0 <= idx < n_seg:
                    raise UnifiedSpaceError(f"segment index {idx} out of range")
            blocks = np.array_split(np.arange(vec.shape[0]), n_seg)
            masked = np.zeros_like(vec)
            for idx in segment_mask:
                masked[blocks[idx]] = vec[blocks[idx]]
            vec = masked
        raw = apply_activation(paradigm.activation, paradigm.weight @ vec)
        return MemoryState(name, raw)


@dataclass
class AlignmentModule:
    """Two-layer feed-forward map from a paradigm state space into the
    unified memory space."""

    layer1_weight: np.ndarray  # d_hidden x d_in
    layer1_bias: np.ndarray
    layer2_weight: np.ndarray  # d_out x d_hidden
    layer2_bias: np.ndarray
    activation: str = "tanh"

    def __post_init__(self):
        self.layer1_weight = np.asarray(self.layer1_weight, dtype=np.float64)
        self.layer1_bias = np.asarray(self.layer1_bias, dtype=np.float64)
        self.layer2_weight = np.asarray(self.layer2_weight, dtype=np.float64)
        self.layer2_bias = np.asarray(self.layer2_bias, dtype=np.float64)
        d_h, d_in = self.layer1_weight.shape
        d_out, d_h2 = self.layer2_weight.shape
        if self.layer1_bias.shape != (d_h,) or d_h2 != d_h:
            raise UnifiedSpaceError("inconsistent alignment module shapes")
        if self.layer2_bias.shape != (d_out,):
            raise UnifiedSpaceError("inconsistent alignment module shapes")
        for arr in (self.layer1_weight, self.layer1_bias, self.layer2_weight, self.layer2_bias):
            if not np.all(np.isfinite(arr)):
                raise UnifiedSpaceError("non-finite alignment parameters")
        if self.activation not in ACTIVATIONS:
            raise UnifiedSpaceError(f"unknown activation {self.activation!r}")

    @property
    def d_in(self) -> int:
        return self.layer1_weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.layer2_weight.shape[0]

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "layer1_weight": self.layer1_weight,
            "layer1_bias": self.layer1_bias,
            "layer2_weight": self.layer2_weight,
            "layer2_bias": self.layer2_bias,
        }

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, value in self.parameters().items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(value).tobytes())
        return h.hexdigest()

    def copy(self) -> "AlignmentModule":
        return AlignmentModule(
            self.layer1_weight.copy(),
            self.layer1_bias.copy(),
            self.layer2_weight.copy(),
            self.layer2_bias.copy(),
            self.activation,
        )


def init_alignment_module(
    d_in: int, d_hidden: int, d_out: int, seed: int, activation: str = "tanh"
) -> AlignmentModule:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    b1 = 1.0 / np.sqrt(d_in)
    b2 = 1.0 / np.sqrt(d_hidden)
    return AlignmentModule(
        rng.uniform(-b1, b1, size=(d_hidden, d_in)),
        np.zeros(d_hidden),
        rng.uniform(-b2, b2, size=(d_out, d_hidden)),
        np.zeros(d_out),
        activation,
    )


def _as_input(module: AlignmentModule, state) -> np.ndarray:
    raw = state.raw if isinstance(state, MemoryState) else np.asarray(state, dtype=np.float64)
    if raw.shape[-1] != module.d_in:
        raise UnifiedSpaceError(
            f"state dimension {raw.shape[-1]} does not match module input "
            f"dimension {module.d_in}"
        )
    return raw


def align_forward(module: AlignmentModule, state) -> np.ndarray:
    """Project a memory state into the unified memory space."""
    x = _as_input(module, state)
    hidden = apply_activation(module.activation, x @ module.layer1_weight.T + module.layer1_bias)
    return hidden @ module.layer2_weight.T + module.layer2_bias


def align_gradients(module: AlignmentModule, state, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients given d(loss)/d(output) = ``upstream``.

    Accepts a single state (1-D input/upstream) or a batch (2-D); batch
    gradients are summed over the batch axis.
    """
    x = np.atleast_2d(_as_input(module, state))
    up = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
    if up.shape != (x.shape[0], module.d_out):
        raise UnifiedSpaceError("upstream gradient shape mismatch")
    pre1 = x @ module.layer1_weight.T + module.layer1_bias
    hidden = apply_activation(module.activation, pre1)
    d_hidden = up @ module.layer2_weight
    d_pre1 = d_hidden * activation_derivative(module.activation, pre1)
    return {
        "layer1_weight": d_pre1.T @ x,
        "layer1_bias": d_pre1.sum(axis=0),
        "layer2_weight": up.T @ hidden,
        "layer2_bias": up.sum(axis=0),
    }
