"""
Neural Network Building Blocks

Dense layers with Leaky ReLU / linear / softmax activations, the shared
key-query-value attention block, the per-agent attention critic, Adam,
gradient clipping, a finite-difference gradient checker and the flat binary
checkpoint format. Everything is float64 numpy with hand-written reverse
mode: each forward returns a cache that its backward consumes.

Parameters live in a flat ``{name: ndarray}`` store per network, so the
optimizer, target tracking and checkpoints all work on plain dictionaries.
"""

import logging
import os
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import Config

logger = logging.getLogger(__name__)

Params = Dict[str, np.ndarray]

ACTIVATIONS = ("leaky_relu", "linear", "softmax")


class NNError(Exception):
    """Base exception for neural network errors."""
    pass


class ShapeError(NNError):
    """Raised when inputs, gradients or parameters have mismatched shapes."""
    pass


class CheckpointError(Exception):
    """Base exception for checkpoint file errors."""
    pass


# =============================================================================
# ELEMENTWISE FUNCTIONS
# =============================================================================

def leaky_relu(x: np.ndarray, slope: float = Config.LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x: np.ndarray, slope: float = Config.LEAKY_SLOPE) -> np.ndarray:
    return np.where(x > 0, 1.0, slope)


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def one_hot(indices: np.ndarray, size: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    encoded = np.zeros((len(indices), size))
    encoded[np.arange(len(indices)), indices] = 1.0
    return encoded


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


# =============================================================================
# DENSE LAYERS
# =============================================================================

class Dense:
    """Affine map plus activation, storing its weights in a shared parameter dict."""

    def __init__(self, params: Params, name: str, in_dim: int, out_dim: int, activation: str,
                 rng: np.random.Generator, use_bias: bool = True, slope: float = Config.LEAKY_SLOPE):
        if activation not in ACTIVATIONS:
            raise NNError(f"unknown activation '{activation}'")
        self.params = params
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.use_bias = use_bias
        self.slope = slope
        params[f"{name}.W"] = glorot_uniform(rng, in_dim, out_dim)
        if use_bias:
            params[f"{name}.b"] = np.zeros(out_dim)

    @property
    def weight(self) -> np.ndarray:
        return self.params[f"{self.name}.W"]

    @property
    def bias(self) -> Optional[np.ndarray]:
        return self.params[f"{self.name}.b"] if self.use_bias else None

    def parameter_names(self) -> List[str]:
        return [f"{self.name}.W"] + ([f"{self.name}.b"] if self.use_bias else [])

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Tuple]:
        x = np.atleast_2d(x)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.name}: expected input width {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.weight
        if self.use_bias:
            z = z + self.bias
        if self.activation == "leaky_relu":
            y = leaky_relu(z, self.slope)
        elif self.activation == "softmax":
            y = softmax(z)
        else:
            y = z
        return y, (x, z, y)

    def backward(self, d_out: np.ndarray, cache: Optional[Tuple], grads: Params,
                 from_logits: bool = False) -> np.ndarray:
        """Accumulate parameter gradients into ``grads`` and return the input gradient.

        ``from_logits`` treats ``d_out`` as the gradient of the pre-activation.
        """
        if cache is None:
            raise NNError(f"{self.name}: backward called without a recorded forward pass")
        x, z, y = cache
        if d_out.shape != y.shape:
            raise ShapeError(f"{self.name}: upstream gradient shape {d_out.shape} != output {y.shape}")
        if from_logits or self.activation == "linear":
            dz = d_out
        elif self.activation == "leaky_relu":
            dz = d_out * leaky_relu_grad(z, self.slope)
        else:
            dz = y * (d_out - np.sum(d_out * y, axis=-1, keepdims=True))

        _accumulate(grads, f"{self.name}.W", x.T @ dz)
        if self.use_bias:
            _accumulate(grads, f"{self.name}.b", dz.sum(axis=0))
        return dz @ self.weight.T


def _accumulate(grads: Params, key: str, value: np.ndarray):
    if key in grads:
        grads[key] = grads[key] + value
    else:
        grads[key] = value


class DenseNet:
    """
    Feed-forward stack: Leaky ReLU hidden layers and a linear or softmax output.

    Actors use a softmax output over their discrete actions.
    """

    def __init__(self, sizes: Sequence[int], output_activation: str, rng: np.random.Generator,
                 name: str = "net", slope: float = Config.LEAKY_SLOPE):
        if len(sizes) < 2:
            raise NNError("a network needs at least input and output sizes")
        if output_activation not in ("linear", "softmax"):
            raise NNError("softmax is only allowed as the final activation")
        self.params: Params = OrderedDict()
        self.layers: List[Dense] = []
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            last = k == len(sizes) - 2
            self.layers.append(Dense(self.params, f"{name}.{k}", fan_in, fan_out,
                                     output_activation if last else "leaky_relu", rng, slope=slope))

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, List[Tuple]]:
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def logits(self, x: np.ndarray) -> np.ndarray:
        """Pre-activation of the output layer."""
        _, caches = self.forward(x)
        return caches[-1][1]

    def backward(self, d_out: np.ndarray, caches: Optional[List[Tuple]], grads: Optional[Params] = None,
                 from_logits: bool = False) -> Tuple[np.ndarray, Params]:
        if caches is None or len(caches) != len(self.layers):
            raise NNError("backward needs the caches of a forward pass through this network")
        grads = OrderedDict() if grads is None else grads
        d = d_out
        for k in reversed(range(len(self.layers))):
            d = self.layers[k].backward(d, caches[k], grads, from_logits=from_logits and k == len(self.layers) - 1)
        return d, grads


# =============================================================================
# ATTENTION
# =============================================================================

class AttentionBlock:
    """
    Shared key, query and value transforms.

    For every agent i, scores over the other agents j are the unscaled dot
    products (W_k e_j) . (W_q s_i), normalized by a softmax that excludes i,
    and the contribution is x_i = sum_j w_ij leaky(W_v e_j).
    """

    def __init__(self, params: Params, embed_dim: int, attend_dim: int, rng: np.random.Generator,
                 slope: float = Config.LEAKY_SLOPE, name: str = "attention"):
        self.params = params
        self.name = name
        self.embed_dim = embed_dim
        self.attend_dim = attend_dim
        self.slope = slope
        params[f"{name}.W_k"] = glorot_uniform(rng, embed_dim, attend_dim)
        params[f"{name}.W_q"] = glorot_uniform(rng, embed_dim, attend_dim)
        params[f"{name}.W_v"] = glorot_uniform(rng, embed_dim, attend_dim)

    def parameter_names(self) -> List[str]:
        return [f"{self.name}.W_k", f"{self.name}.W_q", f"{self.name}.W_v"]

    def forward(self, embeddings: np.ndarray, queries: np.ndarray) -> Tuple[np.ndarray, np.ndarray, Tuple]:
        """
        Args:
            embeddings: (J, B, H) state-action embeddings e_j
            queries: (J, B, H) query embeddings, row i attends over the rows j != i

        Returns:
            contributions (J, B, attend_dim), weights (J, J, B) with zero diagonal, cache
        """
        if embeddings.ndim != 3 or embeddings.shape[-1] != self.embed_dim:
            raise ShapeError(f"embeddings must be (agents, batch, {self.embed_dim}), got {embeddings.shape}")
        if queries.shape != embeddings.shape:
            raise ShapeError(f"queries shape {queries.shape} != embeddings shape {embeddings.shape}")
        n_agents = embeddings.shape[0]
        if n_agents < 2:
            raise NNError("attention needs at least two agents")

        w_k = self.params[f"{self.name}.W_k"]
        w_q = self.params[f"{self.name}.W_q"]
        w_v = self.params[f"{self.name}.W_v"]
        keys = embeddings @ w_k
        selectors = queries @ w_q
        values_pre = embeddings @ w_v
        values = leaky_relu(values_pre, self.slope)

        scores = np.einsum("iba,jba->ijb", selectors, keys)
        self_mask = np.eye(n_agents, dtype=bool)[:, :, None]
        scores = np.where(self_mask, -np.inf, scores)
        weights = softmax(scores, axis=1)
        contributions = np.einsum("ijb,jba->iba", weights, values)
        cache = (embeddings, queries, keys, selectors, values_pre, values, weights)
        return contributions, weights, cache

    def backward(self, d_contrib: np.ndarray, cache: Optional[Tuple], grads: Params) -> Tuple[np.ndarray, np.ndarray]:
        """Accumulate W_k, W_q, W_v gradients; return (d_embeddings, d_queries)."""
        if cache is None:
            raise NNError("attention backward called without a recorded forward pass")
        embeddings, queries, keys, selectors, values_pre, values, weights = cache
        if d_contrib.shape != (embeddings.shape[0], embeddings.shape[1], self.attend_dim):
            raise ShapeError(f"upstream gradient shape {d_contrib.shape} does not match the attention output")

        d_weights = np.einsum("iba,jba->ijb", d_contrib, values)
        d_values = np.einsum("ijb,iba->jba", weights, d_contrib)
        d_scores = weights * (d_weights - np.sum(weights * d_weights, axis=1, keepdims=True))
        d_selectors = np.einsum("ijb,jba->iba", d_scores, keys)
        d_keys = np.einsum("ijb,iba->jba", d_scores, selectors)
        d_values_pre = d_values * leaky_relu_grad(values_pre, self.slope)

        w_k = self.params[f"{self.name}.W_k"]
        w_q = self.params[f"{self.name}.W_q"]
        w_v = self.params[f"{self.name}.W_v"]
        _accumulate(grads, f"{self.name}.W_k", np.einsum("jbh,jba->ha", embeddings, d_keys))
        _accumulate(grads, f"{self.name}.W_q", np.einsum("ibh,iba->ha", queries, d_selectors))
        _accumulate(grads, f"{self.name}.W_v", np.einsum("jbh,jba->ha", embeddings, d_values_pre))

        d_embeddings = d_keys @ w_k.T + d_values_pre @ w_v.T
        d_queries = d_selectors @ w_q.T
        return d_embeddings, d_queries


def attention_contribution(embeddings: np.ndarray, query_index: int, block: AttentionBlock,
                           queries: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Contribution x_i of the other agents to agent ``query_index`` and their weights.

    ``embeddings`` is (J, H) for one sample or (J, B, H) for a batch; by
    default agent i's own embedding is used as its query. The returned weights
    cover the J-1 other agents in ascending index order.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    single = embeddings.ndim == 2
    if single:
        embeddings = embeddings[:, None, :]
    if embeddings.shape[0] < 2:
        raise NNError(f"attention needs J >= 2 agents, got {embeddings.shape[0]}")
    if not 0 <= query_index < embeddings.shape[0]:
        raise NNError(f"query index {query_index} out of range")
    if queries is None:
        queries = embeddings
    elif single:
        queries = np.asarray(queries, dtype=np.float64)[:, None, :]

    contributions, weights, _ = block.forward(embeddings, queries)
    others = [j for j in range(embeddings.shape[0]) if j != query_index]
    x_i = contributions[query_index]
    w_i = weights[query_index, others]
    if single:
        return x_i[0], w_i[:, 0]
    return x_i, w_i


class AttentionCritic:
    """
    Centralized critics for all agents sharing one attention block.

    Agent i's Q vector over its own actions is f_i(g_i(o_i), x_i), where
    g_i embeds the observation, x_i attends over the other agents'
    state-action embeddings e_j = leaky(Dense([o_j, onehot(a_j)])) and f_i is
    a two-layer head with a linear output of width |A_i|.
    """

    def __init__(self, obs_sizes: Sequence[int], action_sizes: Sequence[int], hidden_dim: int,
                 attend_dim: int, rng: np.random.Generator, slope: float = Config.LEAKY_SLOPE,
                 name: str = "critic"):
        if len(obs_sizes) != len(action_sizes):
            raise NNError("need one action size per observation size")
        if len(obs_sizes) < 2:
            raise NNError("attention critic needs at least two agents")
        self.obs_sizes = list(obs_sizes)
        self.action_sizes = list(action_sizes)
        self.hidden_dim = hidden_dim
        self.attend_dim = attend_dim
        self.params: Params = OrderedDict()
        self.sa_embed: List[Dense] = []
        self.s_embed: List[Dense] = []
        self.heads: List[Tuple[Dense, Dense]] = []
        for i, (o_dim, a_dim) in enumerate(zip(obs_sizes, action_sizes)):
            self.sa_embed.append(Dense(self.params, f"{name}.sa_embed_{i}", o_dim + a_dim, hidden_dim,
                                       "leaky_relu", rng, slope=slope))
            self.s_embed.append(Dense(self.params, f"{name}.s_embed_{i}", o_dim, hidden_dim,
                                      "leaky_relu", rng, slope=slope))
        self.attention = AttentionBlock(self.params, hidden_dim, attend_dim, rng, slope=slope,
                                        name=f"{name}.attention")
        for i, a_dim in enumerate(action_sizes):
            self.heads.append((
                Dense(self.params, f"{name}.head_{i}.0", hidden_dim + attend_dim, hidden_dim, "leaky_relu",
                      rng, slope=slope),
                Dense(self.params, f"{name}.head_{i}.1", hidden_dim, a_dim, "linear", rng, slope=slope),
            ))

    @property
    def n_agents(self) -> int:
        return len(self.obs_sizes)

    def shared_parameter_names(self) -> List[str]:
        return self.attention.parameter_names()

    def forward(self, observations: Sequence[np.ndarray],
                actions: Sequence[np.ndarray]) -> Tuple[List[np.ndarray], Dict]:
        """
        Args:
            observations: per agent (B, obs_size_i)
            actions: per agent (B,) integer action indices

        Returns:
            per agent (B, |A_i|) Q values over its own actions with the others'
            actions held fixed, and the cache for ``backward``
        """
        if len(observations) != self.n_agents or len(actions) != self.n_agents:
            raise ShapeError(f"expected inputs for {self.n_agents} agents")
        sa_caches, s_caches, embeds, queries = [], [], [], []
        for i in range(self.n_agents):
            obs = np.atleast_2d(observations[i])
            sa_input = np.concatenate([obs, one_hot(actions[i], self.action_sizes[i])], axis=1)
            e, cache = self.sa_embed[i].forward(sa_input)
            embeds.append(e)
            sa_caches.append(cache)
            s, cache = self.s_embed[i].forward(obs)
            queries.append(s)
            s_caches.append(cache)

        contributions, weights, attention_cache = self.attention.forward(np.stack(embeds), np.stack(queries))

        q_values, head_caches = [], []
        for i, (hidden, output) in enumerate(self.heads):
            h, cache_0 = hidden.forward(np.concatenate([queries[i], contributions[i]], axis=1))
            q, cache_1 = output.forward(h)
            q_values.append(q)
            head_caches.append((cache_0, cache_1))

        cache = {"sa": sa_caches, "s": s_caches, "attention": attention_cache,
                 "heads": head_caches, "weights": weights}
        return q_values, cache

    def backward(self, d_q: Sequence[Optional[np.ndarray]], cache: Optional[Dict],
                 grads: Optional[Params] = None) -> Params:
        """Gradients of sum_i <d_q[i], Q_i>; shared attention gradients accumulate over all heads."""
        if cache is None:
            raise NNError("critic backward called without a recorded forward pass")
        grads = OrderedDict() if grads is None else grads
        batch = cache["attention"][0].shape[1]
        d_queries = np.zeros((self.n_agents, batch, self.hidden_dim))
        d_contrib = np.zeros((self.n_agents, batch, self.attend_dim))
        for i, (hidden, output) in enumerate(self.heads):
            if d_q[i] is None:
                continue
            cache_0, cache_1 = cache["heads"][i]
            d_h = output.backward(d_q[i], cache_1, grads)
            d_in = hidden.backward(d_h, cache_0, grads)
            d_queries[i] += d_in[:, :self.hidden_dim]
            d_contrib[i] += d_in[:, self.hidden_dim:]

        d_embeds, d_attn_queries = self.attention.backward(d_contrib, cache["attention"], grads)
        d_queries += d_attn_queries
        for i in range(self.n_agents):
            self.s_embed[i].backward(d_queries[i], cache["s"][i], grads)
            self.sa_embed[i].backward(d_embeds[i], cache["sa"][i], grads)
        return grads


def critic_forward(critic: AttentionCritic, observations: Sequence[np.ndarray],
                   actions: Sequence[np.ndarray], agent: int) -> np.ndarray:
    """Q vector of one agent; Q_i(o, a) is its entry at a_i."""
    q_values, _ = critic.forward(observations, actions)
    return q_values[agent]


# =============================================================================
# OPTIMIZATION
# =============================================================================

@dataclass
class OptimizerState:
    """Adam moments per parameter name."""
    lr: float
    beta1: float = Config.ADAM_BETA1
    beta2: float = Config.ADAM_BETA2
    eps: float = Config.ADAM_EPS
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Params, lr: float, **kwargs) -> "OptimizerState":
        state = cls(lr=lr, **kwargs)
        for name, value in params.items():
            state.m[name] = np.zeros_like(value)
            state.v[name] = np.zeros_like(value)
        return state


def optimizer_step(params: Params, grads: Params, state: OptimizerState) -> Params:
    """
    One bias-corrected Adam step, updating ``params`` in place.

    Parameters without a gradient entry keep their moments and values.
    """
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter '{name}'")
        if grad.shape != params[name].shape:
            raise ShapeError(f"{name}: gradient shape {grad.shape} != parameter shape {params[name].shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        params[name] -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def clip_grad_norm(grads: Params, max_norm: Optional[float], names: Optional[Sequence[str]] = None) -> float:
    """Scale the selected gradients in place so their joint L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    names = list(grads.keys()) if names is None else [n for n in names if n in grads]
    total = float(np.sqrt(sum(float(np.sum(grads[n] ** 2)) for n in names)))
    if max_norm is not None and max_norm > 0 and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for n in names:
            grads[n] = grads[n] * scale
    return total


# =============================================================================
# GRADIENT CHECKING
# =============================================================================

@dataclass
class GradCheckReport:
    """Largest relative error and the coordinates above tolerance."""
    max_relative_error: float
    n_checked: int
    tolerance: float
    flagged: List[Tuple[str, Tuple[int, ...], float, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.flagged


def grad_check(loss_fn: Callable[[], float], params: Params, analytic: Params,
               tolerance: float = 1e-4, step: float = 1e-5, floor: float = 1e-3,
               names: Optional[Sequence[str]] = None, max_per_tensor: Optional[int] = None,
               rng: Optional[np.random.Generator] = None) -> GradCheckReport:
    """
    Compare analytic gradients with central differences of ``loss_fn``.

    ``loss_fn`` re-evaluates the loss from the current contents of ``params``,
    which are perturbed in place and restored. The relative error of a
    coordinate is |a - n| / max(|a|, |n|, floor).
    """
    names = list(analytic.keys()) if names is None else list(names)
    rng = rng or np.random.default_rng(0)
    worst, checked, flagged = 0.0, 0, []
    for name in names:
        tensor = params[name]
        coordinates = list(np.ndindex(tensor.shape))
        if max_per_tensor is not None and len(coordinates) > max_per_tensor:
            picks = rng.choice(len(coordinates), size=max_per_tensor, replace=False)
            coordinates = [coordinates[k] for k in sorted(picks)]
        for index in coordinates:
            original = tensor[index]
            tensor[index] = original + step
            loss_plus = loss_fn()
            tensor[index] = original - step
            loss_minus = loss_fn()
            tensor[index] = original
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            value = float(analytic[name][index]) if name in analytic else 0.0
            error = abs(value - numeric) / max(abs(value), abs(numeric), floor)
            worst = max(worst, error)
            checked += 1
            if error > tolerance:
                flagged.append((name, index, value, numeric))
    if flagged:
        logger.warning(f"Gradient check flagged {len(flagged)} of {checked} coordinates (max rel error {worst:.2e})")
    return GradCheckReport(max_relative_error=worst, n_checked=checked, tolerance=tolerance, flagged=flagged)


# =============================================================================
# CHECKPOINTS
# =============================================================================

def save_checkpoint(path: str, tensors: Dict[str, np.ndarray]) -> str:
    """
    Write named float64 tensors to a flat binary file.

    Layout (little-endian): 8-byte magic, uint32 tensor count, then per tensor
    uint32 name length, UTF-8 name, uint32 ndim, ndim x uint64 dims and the
    row-major float64 data.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(Config.CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors.items():
            encoded = name.encode("utf-8")
            data = np.ascontiguousarray(tensor, dtype="<f8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<I", data.ndim))
            f.write(struct.pack(f"<{data.ndim}Q", *data.shape))
            f.write(data.tobytes(order="C"))
    logger.info(f"Saved {len(tensors)} tensors to {path}")
    return path


def load_checkpoint(path: str) -> "OrderedDict[str, np.ndarray]":
    """Read a file written by ``save_checkpoint``; tensors keep their file order."""
    if not os.path.exists(path):
        raise CheckpointError(Config.ERROR_MESSAGES["missing_checkpoint"].format(path=path))
    with open(path, "rb") as f:
        blob = f.read()

    magic = Config.CHECKPOINT_MAGIC
    if blob[:len(magic)] != magic:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic bytes)")
    offset = len(magic)

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise CheckpointError(f"{path} is truncated")
        values = struct.unpack_from(fmt, blob, offset)
        offset += size
        return values

    tensors = OrderedDict()
    (count,) = take("<I")
    for _ in range(count):
        (name_length,) = take("<I")
        if offset + name_length > len(blob):
            raise CheckpointError(f"{path} is truncated")
        name = blob[offset:offset + name_length].decode("utf-8")
        offset += name_length
        (ndim,) = take("<I")
        shape = take(f"<{ndim}Q") if ndim else ()
        n_bytes = int(np.prod(shape, dtype=np.int64)) * 8
        if offset + n_bytes > len(blob):
            raise CheckpointError(f"{path} is truncated in tensor '{name}'")
        if n_bytes:
            data = np.frombuffer(blob, dtype="<f8", count=n_bytes // 8, offset=offset)
            tensors[name] = data.astype(np.float64).reshape(shape)
        else:
            tensors[name] = np.zeros(shape)
        offset += n_bytes
    if offset != len(blob):
        raise CheckpointError(f"{path} has {len(blob) - offset} trailing bytes")
    return tensors
