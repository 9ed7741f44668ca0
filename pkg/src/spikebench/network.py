"""Three-layer (input, hidden, output) LIF network with dense all-to-all weights."""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .neuron import INPUT_DRIVE, LifParams, SpikeRaster
from .sources import make_rng

WIDTHS = (16, 32, 64, 128, 256, 512, 1024)


@dataclass
class Network:
    w_ih: np.ndarray  # (hidden, input)
    w_ho: np.ndarray  # (output, hidden)
    bias_h: np.ndarray
    bias_o: np.ndarray
    params: LifParams = field(default_factory=LifParams)

    def __post_init__(self):
        self.w_ih = np.asarray(self.w_ih, dtype=float)
        self.w_ho = np.asarray(self.w_ho, dtype=float)
        self.bias_h = np.asarray(self.bias_h, dtype=float)
        self.bias_o = np.asarray(self.bias_o, dtype=float)
        n = self.w_ih.shape[0]
        if self.w_ih.shape != (n, n) or self.w_ho.shape != (n, n):
            raise ValueError("weight matrices must both be n x n")
        if self.bias_h.shape != (n,) or self.bias_o.shape != (n,):
            raise ValueError("bias vectors must have length n")

    @property
    def n(self) -> int:
        return self.w_ih.shape[0]

    def copy(self) -> "Network":
        return replace(
            self,
            w_ih=self.w_ih.copy(),
            w_ho=self.w_ho.copy(),
            bias_h=self.bias_h.copy(),
            bias_o=self.bias_o.copy(),
        )

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (self.w_ih, self.w_ho, self.bias_h, self.bias_o))


@dataclass
class ForwardTrace:
    input_raster: SpikeRaster
    hidden_raster: SpikeRaster
    output_raster: SpikeRaster
    z_hidden: np.ndarray  # (n, T) net input to the hidden layer
    z_output: np.ndarray  # (n, T)
    params: LifParams

    @property
    def T(self) -> int:
        return self.input_raster.T

    @property
    def dt(self) -> float:
        return self.input_raster.dt


def default_scale(n: int) -> float:
    return 0.5 / math.sqrt(n)


def init_network(
    n: int,
    seed: int = 0,
    scale: float | None = None,
    params: LifParams | None = None,
    strict_width: bool = True,
) -> Network:
    """Uniform weights in [-scale, scale] (default 0.5/sqrt(n)), zero biases."""
    if strict_width and n not in WIDTHS:
        raise ValueError(f"layer width {n} not in {WIDTHS}")
    if n < 1:
        raise ValueError(f"layer width must be positive, got {n}")
    if scale is None:
        scale = default_scale(n)
    if not scale > 0:
        raise ValueError(f"init scale must be > 0, got {scale!r}")
    rng = make_rng(seed, 7)
    w_ih = rng.uniform(-scale, scale, size=(n, n))
    w_ho = rng.uniform(-scale, scale, size=(n, n))
    return Network(w_ih, w_ho, np.zeros(n), np.zeros(n), params or LifParams())


def run_layer(z: np.ndarray, params: LifParams, u0: float | np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a layer over the columns of ``z``; returns (pre-reset potentials, spikes)."""
    n, T = z.shape
    d = params.decay
    th = params.threshold
    reset = params.reset
    # integrate time-major so each step writes one contiguous row; the
    # returned (n, T) arrays are transposed views
    drive = (1.0 - d) * z.T
    pre = np.empty((T, n))
    fired = np.empty((T, n), dtype=bool)
    u = np.full(n, reset if u0 is None else u0, dtype=float)
    for t in range(T):
        v = pre[t]
        np.multiply(u, d, out=v)
        v += drive[t]
        s = np.greater_equal(v, th, out=fired[t])
        u = np.where(s, reset, v)
    return pre.T, fired.view(np.uint8).T


def forward(net: Network, inp: SpikeRaster) -> ForwardTrace:
    """Simulate all three layers; input, hidden and output propagate within one step."""
    if inp.n != net.n:
        raise ValueError(f"input raster has {inp.n} neurons, network expects {net.n}")
    x = inp.spikes * INPUT_DRIVE
    z_h = net.w_ih @ x + net.bias_h[:, None]
    pre_h, s_h = run_layer(z_h, net.params)
    z_o = net.w_ho @ s_h + net.bias_o[:, None]
    pre_o, s_o = run_layer(z_o, net.params)
    return ForwardTrace(
        input_raster=inp,
        hidden_raster=SpikeRaster(s_h, pre_h, inp.dt),
        output_raster=SpikeRaster(s_o, pre_o, inp.dt),
        z_hidden=z_h,
        z_output=z_o,
        params=net.params,
    )


# checkpoint: header, then w_ih, w_ho, bias_h, bias_o as row-major little-endian float64
_MAGIC = b"SPKBNET\x00"
_VERSION = 1
_HEADER = struct.Struct("<8sII6dB7x")


def save_network(path, net: Network, lzc_threshold: float = math.nan, swapped: bool = False) -> None:
    p = net.params
    header = _HEADER.pack(
        _MAGIC, _VERSION, net.n, p.tau_m, p.threshold, p.reset, p.dt, p.decay, lzc_threshold, int(swapped)
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (net.w_ih, net.w_ho, net.bias_h, net.bias_o):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_network(path) -> tuple[Network, dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated network checkpoint")
    magic, version, n, tau_m, th, reset, dt, decay, lzc_th, swapped = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError("not a network checkpoint")
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * n * n + 2 * n:
        raise ValueError("checkpoint body size does not match its header")
    w_ih = body[: n * n].reshape(n, n)
    w_ho = body[n * n: 2 * n * n].reshape(n, n)
    bias_h = body[2 * n * n: 2 * n * n + n]
    bias_o = body[2 * n * n + n:]
    params = LifParams(tau_m=tau_m, threshold=th, reset=reset, dt=dt, decay=decay)
    net = Network(w_ih.copy(), w_ho.copy(), bias_h.copy(), bias_o.copy(), params)
    return net, {"lzc_threshold": lzc_th, "swapped": bool(swapped)}
