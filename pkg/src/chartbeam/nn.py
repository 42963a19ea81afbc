"""From-scratch neural stack for precoder regression.

A frozen random-Fourier-feature layer feeds a small ReLU MLP whose 2A
real outputs are read as a complex precoder. Training minimizes one
minus the mean normalized correlation against target channels; gradients
are hand-derived (reverse mode through the MLP, Wirtinger chain rule
through the complexification), and the optimizer is Adam. Everything is
float64 and deterministic given its seeds.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLossError, ZeroChannelError, ZeroPrecoderError

logger = logging.getLogger(__name__)

ZERO_NORM_FLOOR = 1e-30


# ---------------------------------------------------------------------------
# random Fourier features (frozen)
# ---------------------------------------------------------------------------

@dataclass
class RFFLayer:
    omega: np.ndarray  # (F, D), never trained
    phase: np.ndarray  # (F,), never trained
    gamma: float

    @property
    def feature_count(self):
        return self.omega.shape[0]

    @property
    def input_dim(self):
        return self.omega.shape[1]


def rff_init(dim, features, gamma, seed):
    """Sample a Gaussian-kernel RFF layer: omega ~ N(0, 1/gamma^2), phase ~ U[0, 2pi)."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    rng = np.random.default_rng(seed)
    omega = rng.normal(0.0, 1.0 / gamma, size=(features, dim))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=features)
    return RFFLayer(omega=omega, phase=phase, gamma=float(gamma))


def rff_forward(layer, z):
    """Feature map sqrt(2/F) * cos(omega @ z + phase); rows of z are samples."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    f = layer.feature_count
    return np.sqrt(2.0 / f) * np.cos(z @ layer.omega.T + layer.phase)


# ---------------------------------------------------------------------------
# MLP with ReLU hidden layers
# ---------------------------------------------------------------------------

@dataclass
class MLPParams:
    weights: list  # (out, in) matrices
    biases: list

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]


def mlp_init(layer_sizes, seed):
    """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPParams(weights=weights, biases=biases)


def mlp_forward(params, x):
    """Affine/ReLU chain, final layer affine only.

    Returns (output, cache); the cache holds each layer's input and
    pre-activation for the backward pass.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != params.weights[0].shape[1]:
        raise ValueError(
            f"input dim {x.shape[1]} != first layer fan-in {params.weights[0].shape[1]}"
        )
    last = len(params.weights) - 1
    inputs, preacts = [], []
    a = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(a)
        z = a @ w.T + b
        preacts.append(z)
        a = z if i == last else np.maximum(z, 0.0)
    return a, {"inputs": inputs, "preacts": preacts}


def mlp_backward(params, cache, upstream):
    """Exact reverse-mode gradients; ReLU subgradient at 0 is 0.

    Returns ({'weights': [...], 'biases': [...]}, input_grad).
    """
    upstream = np.atleast_2d(upstream)
    last = len(params.weights) - 1
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.weights)
    delta = upstream
    for i in range(last, -1, -1):
        if i != last:
            delta = delta * (cache["preacts"][i] > 0.0)
        grads_w[i] = delta.T @ cache["inputs"][i]
        grads_b[i] = delta.sum(axis=0)
        delta = delta @ params.weights[i]
    return {"weights": grads_w, "biases": grads_b}, delta


# ---------------------------------------------------------------------------
# correlation loss (precoder misalignment)
# ---------------------------------------------------------------------------

def correlation_loss(w_batch, g_batch):
    """One minus the mean normalized correlation of precoders and targets.

    w_batch is (B, 2A) real (re then im halves); g_batch is (B, A)
    complex. Loss = 1 - mean |w_hat^H g|^2 / ||g||^2 with w_hat the
    unit-normalized complex precoder, so it lives in [0, 1]: 0 for
    perfectly aligned precoders, 1 for orthogonal ones. Also returns the
    analytic gradient w.r.t. w_batch.
    """
    w_batch = np.atleast_2d(np.asarray(w_batch, dtype=np.float64))
    g_batch = np.atleast_2d(np.asarray(g_batch, dtype=np.complex128))
    b, two_a = w_batch.shape
    a = two_a // 2
    if g_batch.shape != (b, a):
        raise ValueError(f"target shape {g_batch.shape} != ({b}, {a})")
    w_c = w_batch[:, :a] + 1j * w_batch[:, a:]
    w_norm2 = np.einsum("ba,ba->b", w_c.real, w_c.real) + np.einsum(
        "ba,ba->b", w_c.imag, w_c.imag)
    tiny = np.nonzero(np.sqrt(w_norm2) < ZERO_NORM_FLOOR)[0]
    if tiny.size:
        raise ZeroPrecoderError(index=int(tiny[0]))
    g_norm = np.linalg.norm(g_batch, axis=1)
    dead = np.nonzero(g_norm < ZERO_NORM_FLOOR)[0]
    if dead.size:
        raise ZeroChannelError(index=int(dead[0]))
    g_hat = g_batch / g_norm[:, None]
    c = np.einsum("ba,ba->b", w_c.conj(), g_hat)
    eta = np.abs(c) ** 2 / w_norm2
    loss = 1.0 - float(eta.mean())
    # d eta / d conj(w) = (g_hat * conj(c) - eta * w) / ||w||^2
    q = (g_hat * np.conj(c)[:, None] - eta[:, None] * w_c) / w_norm2[:, None]
    grad = -(2.0 / b) * np.concatenate([q.real, q.imag], axis=1)
    return loss, grad


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    zeros = lambda arrs: [np.zeros_like(p) for p in arrs]
    return AdamState(
        m={"weights": zeros(params.weights), "biases": zeros(params.biases)},
        v={"weights": zeros(params.weights), "biases": zeros(params.biases)},
        lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(state, params, grads):
    """Bias-corrected Adam update, in place; returns params."""
    state.t += 1
    correct1 = 1.0 - state.beta1**state.t
    correct2 = 1.0 - state.beta2**state.t
    for key, target in (("weights", params.weights), ("biases", params.biases)):
        for i, grad in enumerate(grads[key]):
            m = state.m[key][i]
            v = state.v[key][i]
            m *= state.beta1
            m += (1.0 - state.beta1) * grad
            v *= state.beta2
            v += (1.0 - state.beta2) * grad**2
            target[i] -= state.lr * (m / correct1) / (np.sqrt(v / correct2) + state.eps)
    return params


# ---------------------------------------------------------------------------
# the beamforming model and its training loop
# ---------------------------------------------------------------------------

@dataclass
class LBBModel:
    rff: RFFLayer
    mlp: MLPParams
    meta: dict = field(default_factory=dict)

    def forward(self, z):
        """Raw 2A-dimensional precoder outputs for latent inputs z."""
        return mlp_forward(self.mlp, rff_forward(self.rff, z))[0]


def build_model(dim_in, num_antennas, features=600, gamma=1.0,
                hidden=300, hidden_layers=3, seed=0):
    """Assemble the standard architecture: RFF -> (hidden ReLU)*3 -> 2A."""
    rff = rff_init(dim_in, features, gamma, seed)
    sizes = [features] + [hidden] * hidden_layers + [2 * num_antennas]
    mlp = mlp_init(sizes, seed + 1)
    return LBBModel(rff=rff, mlp=mlp,
                    meta={"dim_in": dim_in, "num_antennas": num_antennas,
                          "features": features, "gamma": gamma,
                          "hidden": hidden, "hidden_layers": hidden_layers,
                          "seed": seed})


def train(model, inputs, targets, epochs=30, batch_size=100, seed=0, lr=1e-3):
    """Mini-batch Adam on the correlation loss.

    Returns the per-epoch mean training loss (length == epochs). The RFF
    layer is frozen; only MLP weights and biases move.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.complex128)
    n = inputs.shape[0]
    if targets.shape[0] != n:
        raise ValueError("inputs and targets disagree on sample count")
    state = adam_init(model.mlp, lr=lr)
    rng = np.random.default_rng(seed)
    history = []
    for epoch in range(epochs):
        perm = rng.permutation(n)
        total = 0.0
        for b0 in range(0, n, batch_size):
            batch = perm[b0:b0 + batch_size]
            feats = rff_forward(model.rff, inputs[batch])
            out, cache = mlp_forward(model.mlp, feats)
            loss, dout = correlation_loss(out, targets[batch])
            if not np.isfinite(loss):
                raise NonFiniteLossError(epoch, b0 // batch_size)
            assert -1e-12 <= loss <= 1.0 + 1e-12, f"loss {loss} escaped [0, 1]"
            grads, _ = mlp_backward(model.mlp, cache, dout)
            adam_step(state, model.mlp, grads)
            total += loss * batch.size
        history.append(total / n)
    return history


# ---------------------------------------------------------------------------
# checkpoints: manifest + one ordered float64 blob
# ---------------------------------------------------------------------------

def _param_arrays(model):
    arrays = [model.rff.omega, model.rff.phase]
    for w, b in zip(model.mlp.weights, model.mlp.biases):
        arrays.extend([w, b])
    return arrays


def save_model(model, out_dir, extra=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    arrays = _param_arrays(model)
    blob = np.concatenate([np.ascontiguousarray(a, dtype="<f8").ravel() for a in arrays])
    blob.tofile(out_dir / "params.f64")
    manifest = {
        "kind": "model",
        "meta": model.meta,
        "layer_sizes": model.mlp.layer_sizes,
        "gamma": model.rff.gamma,
        "shapes": [list(a.shape) for a in arrays],
        "endianness": "little",
        "files": {"params": "params.f64"},
    }
    if extra:
        manifest.update(extra)
    with open(out_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)


def load_model(in_dir):
    with open(in_dir / "manifest.json") as f:
        manifest = json.load(f)
    if manifest.get("kind") != "model":
        raise ValueError(f"{in_dir} is not a model directory")
    blob = np.fromfile(in_dir / manifest["files"]["params"], dtype="<f8")
    arrays = []
    offset = 0
    for shape in manifest["shapes"]:
        size = int(np.prod(shape))
        arrays.append(blob[offset:offset + size].reshape(shape).copy())
        offset += size
    rff = RFFLayer(omega=arrays[0], phase=arrays[1], gamma=float(manifest["gamma"]))
    weights = arrays[2::2]
    biases = arrays[3::2]
    model = LBBModel(rff=rff, mlp=MLPParams(weights=weights, biases=biases),
                     meta=manifest.get("meta", {}))
    return model, manifest
