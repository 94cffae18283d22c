"""Minimal feed-forward network with explicit forward and backward passes.

One hidden rectifier layer; the head is either a softmax over actions
(actor) or a single linear unit (critic). Everything is float64 numpy so
gradient checks against central finite differences are exact to rounding.
No ML framework is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHECKPOINT_VERSION = 1


@dataclass(slots=True)
class Gradients:
    """Parameter gradients, shape-congruent with the owning network."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def scaled(self, factor: float) -> "Gradients":
        return Gradients(self.w1 * factor, self.b1 * factor, self.w2 * factor, self.b2 * factor)

    def add_(self, other: "Gradients") -> None:
        self.w1 += other.w1
        self.b1 += other.b1
        self.w2 += other.w2
        self.b2 += other.b2

    def global_norm(self) -> float:
        total = 0.0
        for a in (self.w1, self.b1, self.w2, self.b2):
            total += float(np.sum(a * a))
        return float(np.sqrt(total))


class Mlp:
    """input -> hidden (relu) -> output, with a softmax or scalar head.

    head: "softmax" produces a probability vector over n_out actions;
    "scalar" requires n_out == 1 and produces a raw value.
    """

    def __init__(self, n_in: int, n_hidden: int, n_out: int, head: str, rng=None):
        if head not in ("softmax", "scalar"):
            raise ValueError(f"unknown head {head!r}")
        if head == "scalar" and n_out != 1:
            raise ValueError("scalar head requires n_out == 1")
        self.n_in = n_in
        self.n_hidden = n_hidden
        self.n_out = n_out
        self.head = head
        if rng is None:
            self.w1 = np.zeros((n_in, n_hidden))
            self.b1 = np.zeros(n_hidden)
            self.w2 = np.zeros((n_hidden, n_out))
            self.b2 = np.zeros(n_out)
        else:
            # fan-balanced uniform init, biases zero
            lim1 = np.sqrt(6.0 / (n_in + n_hidden))
            lim2 = np.sqrt(6.0 / (n_hidden + n_out))
            self.w1 = rng.uniform(-lim1, lim1, size=(n_in, n_hidden))
            self.b1 = np.zeros(n_hidden)
            self.w2 = rng.uniform(-lim2, lim2, size=(n_hidden, n_out))
            self.b2 = np.zeros(n_out)

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]

    def zero_grads(self) -> Gradients:
        return Gradients(
            np.zeros_like(self.w1),
            np.zeros_like(self.b1),
            np.zeros_like(self.w2),
            np.zeros_like(self.b2),
        )

    def copy(self) -> "Mlp":
        clone = Mlp(self.n_in, self.n_hidden, self.n_out, self.head)
        clone.w1 = self.w1.copy()
        clone.b1 = self.b1.copy()
        clone.w2 = self.w2.copy()
        clone.b2 = self.b2.copy()
        return clone

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_in,):
            raise ValueError(f"input shape {x.shape} does not match ({self.n_in},)")
        return x

    def _hidden(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z1 = x @ self.w1 + self.b1
        return z1, np.maximum(z1, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax (max subtracted before exponentiation)."""
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / np.sum(e)


def forward_actor(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Probability vector over actions for one input state."""
    if net.head != "softmax":
        raise ValueError("forward_actor requires a softmax-head network")
    x = net._check_input(x)
    _, h = net._hidden(x)
    return softmax(h @ net.w2 + net.b2)


def forward_critic(net: Mlp, x: np.ndarray) -> float:
    """Scalar state value for one input state."""
    if net.head != "scalar":
        raise ValueError("forward_critic requires a scalar-head network")
    x = net._check_input(x)
    _, h = net._hidden(x)
    return float(h @ net.w2[:, 0] + net.b2[0])


def backward_policy(net: Mlp, x: np.ndarray, action_index: int, advantage: float) -> Gradients:
    """Gradients of -log pi(action | x) * advantage w.r.t. all parameters.

    Descending these gradients performs the policy-gradient ascent step on
    the expected return.
    """
    if net.head != "softmax":
        raise ValueError("backward_policy requires a softmax-head network")
    if not 0 <= action_index < net.n_out:
        raise ValueError(f"action index {action_index} out of range [0, {net.n_out})")
    x = net._check_input(x)
    z1, h = net._hidden(x)
    probs = softmax(h @ net.w2 + net.b2)

    # d(-log pi[a] * A)/dlogits = (pi - onehot(a)) * A
    delta2 = probs * advantage
    delta2[action_index] -= advantage
    delta1 = (net.w2 @ delta2) * (z1 > 0.0)
    return Gradients(
        w1=np.outer(x, delta1),
        b1=delta1,
        w2=np.outer(h, delta2),
        b2=delta2.copy(),
    )


def backward_value(net: Mlp, x: np.ndarray, target: float) -> Gradients:
    """Gradients of (target - V(x))^2, with the target held constant."""
    if net.head != "scalar":
        raise ValueError("backward_value requires a scalar-head network")
    x = net._check_input(x)
    z1, h = net._hidden(x)
    value = float(h @ net.w2[:, 0] + net.b2[0])

    dvalue = 2.0 * (value - target)
    delta2 = np.array([dvalue])
    delta1 = (net.w2[:, 0] * dvalue) * (z1 > 0.0)
    return Gradients(
        w1=np.outer(x, delta1),
        b1=delta1,
        w2=(h * dvalue)[:, None],
        b2=delta2,
    )


def clip_gradients(grads: Gradients, clip_norm: float) -> Gradients:
    """Rescale so the global norm is at most clip_norm (no-op if already)."""
    if clip_norm <= 0:
        raise ValueError("clip_norm must be positive")
    norm = grads.global_norm()
    if np.isfinite(clip_norm) and norm > clip_norm:
        return grads.scaled(clip_norm / norm)
    return grads


def apply(net: Mlp, grads: Gradients, learning_rate: float, clip_norm: float = np.inf) -> None:
    """Plain gradient-descent step: theta <- theta - lr * g, after clipping."""
    g = clip_gradients(grads, clip_norm)
    net.w1 -= learning_rate * g.w1
    net.b1 -= learning_rate * g.b1
    net.w2 -= learning_rate * g.w2
    net.b2 -= learning_rate * g.b2


class AdamOptimizer:
    """Adaptive-moment descent, available behind the optimizer config flag.

    Plain descent (apply) is the default update rule; this exists because
    fixed learning rates in the 1e-4 range move a softmax policy far too
    slowly to be useful within a realistic training budget.
    """

    def __init__(self, net: Mlp, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in net.params()]
        self.v = [np.zeros_like(p) for p in net.params()]

    def step(self, net: Mlp, grads: Gradients, learning_rate: float, clip_norm: float = np.inf) -> None:
        g = clip_gradients(grads, clip_norm)
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v, grad in zip(net.params(), self.m, self.v, (g.w1, g.b1, g.w2, g.b2)):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            p -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def save_checkpoint(net: Mlp, path) -> None:
    """Write the network to a versioned npz file (bit-exact round trip)."""
    np.savez(
        path,
        version=np.array([CHECKPOINT_VERSION]),
        sizes=np.array([net.n_in, net.n_hidden, net.n_out]),
        head=np.array([net.head]),
        w1=net.w1,
        b1=net.b1,
        w2=net.w2,
        b2=net.b2,
    )


def load_checkpoint(path) -> Mlp:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"][0])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        n_in, n_hidden, n_out = (int(v) for v in data["sizes"])
        net = Mlp(n_in, n_hidden, n_out, head=str(data["head"][0]))
        net.w1 = data["w1"].astype(np.float64)
        net.b1 = data["b1"].astype(np.float64)
        net.w2 = data["w2"].astype(np.float64)
        net.b2 = data["b2"].astype(np.float64)
    return net
