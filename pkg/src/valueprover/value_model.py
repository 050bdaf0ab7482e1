"""The obligation value estimator and its reward-free update rule.

A small feedforward regressor maps obligation encodings to values in (0, 1),
read as gamma^(steps remaining). Hyperstate values multiply over obligations
(the empty product is 1), so an action that discharges an obligation is
implicitly worth gamma with no explicit reward term. Update targets take the
max over the predictor's applicable actions of gamma times the product of
the resulting obligations' current values; dead ends target 0.

Also here: the three experience buffers (replay / true-target / negative)
and a tabular value iteration used to validate the update rule against the
brute-force oracle on small graphs.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .env import Hyperstate, Obligation, Tactic, TacticError, apply_tactic
from .predictor import Predictor, predict_top_n

__all__ = [
    "UndefinedStepsError",
    "ValueModel",
    "Transition",
    "ReplayBuffer",
    "TrueTargetBuffer",
    "NegativeBuffer",
    "product_value",
    "steps_estimate",
    "hyperstate_steps",
    "bellman_backup",
    "bellman_target",
    "pretrain",
    "tabular_value_iteration",
    "explore_obligation_graph",
    "value_model_to_dict",
    "value_model_from_dict",
]


class UndefinedStepsError(ValueError):
    """Raised for steps_estimate of a nonpositive value (dead end)."""


def product_value(values: Iterable[float]) -> float:
    """Left-fold product; the empty product is 1 (a completed proof)."""
    out = 1.0
    for v in values:
        out *= v
    return out


def steps_estimate(value: float, gamma: float) -> float:
    """Invert value = gamma^steps: steps = log(value) / log(gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if value <= 0.0:
        raise UndefinedStepsError("value must be positive to estimate steps")
    if value > 1.0:
        raise ValueError("value must not exceed 1")
    return math.log(value) / math.log(gamma)


class ValueModel:
    """Encoding -> (0,1) regressor: one tanh hidden layer, logistic output.

    Gradients are hand-derived; update_batch takes one SGD step on mean
    squared error against the provided targets.
    """

    def __init__(
        self,
        encoder: Callable[[Obligation], np.ndarray],
        input_dim: int,
        gamma: float = 0.9,
        hidden_dim: int = 32,
        seed: int = 0,
    ):
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        rng = np.random.default_rng(seed)
        self.encoder = encoder
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.gamma = gamma
        self.w_hidden = rng.normal(0.0, 0.3, size=(hidden_dim, input_dim))
        self.b_hidden = np.zeros(hidden_dim)
        self.w_out = rng.normal(0.0, 0.3, size=hidden_dim)
        self.b_out = 0.0
        self._encoding_cache: dict[str, np.ndarray] = {}
        self._value_cache: dict[str, float] = {}

    # -- evaluation ---------------------------------------------------------

    def encode(self, ob: Obligation) -> np.ndarray:
        key = ob.canonical()
        vec = self._encoding_cache.get(key)
        if vec is None:
            vec = self.encoder(ob)
            self._encoding_cache[key] = vec
        return vec

    def _forward(self, inputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        hidden = np.tanh(inputs @ self.w_hidden.T + self.b_hidden)
        out = 1.0 / (1.0 + np.exp(-(hidden @ self.w_out + self.b_out)))
        return hidden, out

    def v_value(self, ob: Obligation) -> float:
        key = ob.canonical()
        cached = self._value_cache.get(key)
        if cached is not None:
            return cached
        _, out = self._forward(self.encode(ob)[None, :])
        value = float(out[0])
        self._value_cache[key] = value
        return value

    def hyperstate_value(self, h: Hyperstate) -> float:
        return product_value(self.v_value(ob) for ob in h.obligations)

    def hyperstate_steps(self, h: Hyperstate) -> float:
        return sum(steps_estimate(self.v_value(ob), self.gamma) for ob in h.obligations)

    # -- learning -----------------------------------------------------------

    def loss_and_grads(self, inputs: np.ndarray, targets: np.ndarray):
        hidden, out = self._forward(inputs)
        diff = out - targets
        loss = float((diff * diff).mean())
        n = len(targets)
        d_out = 2.0 * diff / n
        d_pre = d_out * out * (1.0 - out)
        grad_w_out = d_pre @ hidden
        grad_b_out = float(d_pre.sum())
        d_hidden = np.outer(d_pre, self.w_out) * (1.0 - hidden * hidden)
        grad_w_hidden = d_hidden.T @ inputs
        grad_b_hidden = d_hidden.sum(axis=0)
        return loss, (grad_w_hidden, grad_b_hidden, grad_w_out, grad_b_out)

    def update_batch(self, batch: list[tuple[Obligation, float]], learning_rate: float) -> float:
        """One SGD step on MSE against the batch targets; returns the
        pre-step loss. Targets are constants (no gradient through them)."""
        if not batch:
            raise ValueError("empty batch")
        inputs = np.stack([self.encode(ob) for ob, _ in batch])
        targets = np.array([t for _, t in batch])
        if targets.min() < 0.0 or targets.max() > 1.0:
            raise ValueError("targets must lie in [0, 1]")
        loss, (gwh, gbh, gwo, gbo) = self.loss_and_grads(inputs, targets)
        self.w_hidden -= learning_rate * gwh
        self.b_hidden -= learning_rate * gbh
        self.w_out -= learning_rate * gwo
        self.b_out -= learning_rate * gbo
        self._value_cache.clear()
        return loss

    # -- parameter plumbing --------------------------------------------------

    def get_flat_params(self) -> np.ndarray:
        return np.concatenate([self.w_hidden.ravel(), self.b_hidden, self.w_out, [self.b_out]])

    def set_flat_params(self, flat: np.ndarray) -> None:
        h, d = self.hidden_dim, self.input_dim
        self.w_hidden = flat[: h * d].reshape(h, d).copy()
        self.b_hidden = flat[h * d : h * d + h].copy()
        self.w_out = flat[h * d + h : h * d + 2 * h].copy()
        self.b_out = float(flat[-1])
        self._value_cache.clear()


def hyperstate_steps(model: ValueModel, h: Hyperstate) -> float:
    return model.hyperstate_steps(h)


# ---------------------------------------------------------------------------
# Update targets
# ---------------------------------------------------------------------------


def bellman_backup(
    ob: Obligation,
    value_of: Callable[[Obligation], float],
    predictor: Predictor,
    n: int,
    gamma: float,
) -> float:
    """max over applicable top-n actions of gamma * prod(child values).

    A discharging action contributes exactly gamma (empty product); when
    every prediction errors the obligation is a dead end and the target is 0.
    """
    best = None
    for prediction in predict_top_n(predictor, ob, n):
        try:
            children = apply_tactic(ob, prediction.tactic)
        except TacticError:
            continue
        candidate = gamma * product_value(value_of(child) for child in children)
        if best is None or candidate > best:
            best = candidate
    return 0.0 if best is None else best


def bellman_target(model: ValueModel, ob: Obligation, predictor: Predictor, n: int) -> float:
    return bellman_backup(ob, model.v_value, predictor, n, model.gamma)


def pretrain(
    model: ValueModel,
    tasks: list[tuple[Obligation, int]],
    epochs: int = 400,
    learning_rate: float = 0.02,
    seed: int = 0,
) -> list[float]:
    """Supervised regression of each task obligation to gamma^length.

    Full-batch Adam; the hashed encodings of related obligations are nearly
    collinear, so plain gradient descent stalls long before the targets are
    fit tightly enough for search to rank states correctly.
    """
    if not tasks:
        raise ValueError("empty task list")
    if any(length < 1 for _, length in tasks):
        raise ValueError("proof lengths must be at least 1")
    del seed  # the run is already deterministic: full-batch, fixed order
    inputs = np.stack([model.encode(ob) for ob, _ in tasks])
    targets = np.array([model.gamma**length for _, length in tasks])
    flat_m = np.zeros_like(model.get_flat_params())
    flat_v = np.zeros_like(flat_m)
    losses = []
    for step in range(1, epochs + 1):
        loss, (gwh, gbh, gwo, gbo) = model.loss_and_grads(inputs, targets)
        losses.append(loss)
        grad = np.concatenate([gwh.ravel(), gbh, gwo, [gbo]])
        flat_m = 0.9 * flat_m + 0.1 * grad
        flat_v = 0.999 * flat_v + 0.001 * grad * grad
        m_hat = flat_m / (1.0 - 0.9**step)
        v_hat = flat_v / (1.0 - 0.999**step)
        params = model.get_flat_params() - learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
        model.set_flat_params(params)
    return losses


# ---------------------------------------------------------------------------
# Experience buffers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    source: Obligation
    action: Tactic | None
    result: tuple[Obligation, ...]
    dead_end: bool = False


class ReplayBuffer:
    """Bounded FIFO of transitions with uniform seeded sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        self._items.append(transition)

    def sample(self, k: int, rng) -> list[Transition]:
        if not self._items or k <= 0:
            return []
        return [self._items[rng.randrange(len(self._items))] for _ in range(k)]


class TrueTargetBuffer:
    """Minimum known proof length per obligation; values only decrease."""

    def __init__(self):
        self._entries: dict[str, tuple[Obligation, int]] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def update(self, ob: Obligation, found_length: int) -> None:
        if found_length < 1:
            raise ValueError("found_length must be at least 1")
        key = ob.canonical()
        current = self._entries.get(key)
        if current is None or found_length < current[1]:
            self._entries[key] = (ob, found_length)

    def length_of(self, ob: Obligation) -> int | None:
        entry = self._entries.get(ob.canonical())
        return entry[1] if entry else None

    def items(self) -> list[tuple[Obligation, int]]:
        return list(self._entries.values())

    def sample(self, k: int, rng) -> list[tuple[Obligation, int]]:
        entries = list(self._entries.values())
        if not entries or k <= 0:
            return []
        return [entries[rng.randrange(len(entries))] for _ in range(k)]


class NegativeBuffer:
    """Obligations where every top-n prediction errored; trained to 0."""

    def __init__(self):
        self._entries: dict[str, Obligation] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, ob: Obligation) -> bool:
        return ob.canonical() in self._entries

    def add(self, ob: Obligation) -> None:
        self._entries.setdefault(ob.canonical(), ob)

    def items(self) -> list[Obligation]:
        return list(self._entries.values())

    def sample(self, k: int, rng) -> list[Obligation]:
        entries = list(self._entries.values())
        if not entries or k <= 0:
            return []
        return [entries[rng.randrange(len(entries))] for _ in range(k)]


# ---------------------------------------------------------------------------
# Tabular analysis of the update rule
# ---------------------------------------------------------------------------


def explore_obligation_graph(
    roots: Iterable[Obligation],
    predictor: Predictor,
    n: int,
    max_nodes: int = 20000,
) -> dict[str, tuple[Obligation, list[list[str]]]]:
    """Reachable obligations under top-n actions, with child-key lists per
    applicable action. Raises if the graph exceeds max_nodes."""
    graph: dict[str, tuple[Obligation, list[list[str]]]] = {}
    frontier = list(roots)
    while frontier:
        ob = frontier.pop()
        key = ob.canonical()
        if key in graph:
            continue
        actions: list[list[str]] = []
        for prediction in predict_top_n(predictor, ob, n):
            try:
                children = apply_tactic(ob, prediction.tactic)
            except TacticError:
                continue
            actions.append([child.canonical() for child in children])
            for child in children:
                if child.canonical() not in graph:
                    frontier.append(child)
        graph[key] = (ob, actions)
        if len(graph) > max_nodes:
            raise RuntimeError(f"obligation graph exceeded {max_nodes} nodes")
    return graph


def tabular_value_iteration(
    graph: dict[str, tuple[Obligation, list[list[str]]]],
    gamma: float,
    max_iterations: int = 10000,
    tolerance: float = 1e-15,
) -> dict[str, float]:
    """Iterate the update rule with a lookup table until a fixed point.

    Starting from all zeros this converges to the least fixed point:
    gamma^(shortest restricted proof length) for provable obligations and 0
    for dead ends.
    """
    values = {key: 0.0 for key in graph}
    for _ in range(max_iterations):
        delta = 0.0
        for key, (_, actions) in graph.items():
            best = 0.0
            for child_keys in actions:
                candidate = gamma * product_value(values[c] for c in child_keys)
                if candidate > best:
                    best = candidate
            delta = max(delta, abs(best - values[key]))
            values[key] = best
        if delta <= tolerance:
            return values
    raise RuntimeError("value iteration did not converge")


def value_model_to_dict(model: ValueModel) -> dict:
    return {
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "gamma": model.gamma,
        "w_hidden": model.w_hidden.tolist(),
        "b_hidden": model.b_hidden.tolist(),
        "w_out": model.w_out.tolist(),
        "b_out": model.b_out,
    }


def value_model_from_dict(data: dict, encoder: Callable[[Obligation], np.ndarray]) -> ValueModel:
    model = ValueModel(encoder, data["input_dim"], data["gamma"], data["hidden_dim"])
    model.w_hidden = np.array(data["w_hidden"], dtype=float)
    model.b_hidden = np.array(data["b_hidden"], dtype=float)
    model.w_out = np.array(data["w_out"], dtype=float)
    model.b_out = float(data["b_out"])
    model._value_cache.clear()
    return model
