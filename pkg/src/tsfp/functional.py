"""Volumetric primitives: 3D convolution, 3D max-pooling, linear upsampling.

All ops take ``(C, T, H, W)`` or batched ``(N, C, T, H, W)`` tensors and
return the same rank they were given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ShapeError, Tensor

_AXES = ("time", "height", "width")


def _triple(v) -> tuple[int, int, int]:
    if isinstance(v, int):
        return (v, v, v)
    v = tuple(int(x) for x in v)
    if len(v) != 3:
        raise ValueError(f"expected 3 values, got {v}")
    return v


@dataclass(frozen=True)
class ConvSpec:
    in_channels: int
    out_channels: int
    kernel: tuple[int, int, int] = (3, 3, 3)
    stride: tuple[int, int, int] = (1, 1, 1)
    padding: tuple[int, int, int] = (0, 0, 0)
    separable: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kernel", _triple(self.kernel))
        object.__setattr__(self, "stride", _triple(self.stride))
        object.__setattr__(self, "padding", _triple(self.padding))
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        if min(self.kernel) < 1 or min(self.stride) < 1 or min(self.padding) < 0:
            raise ValueError(f"invalid kernel/stride/padding in {self}")

    def output_dims(self, dims) -> tuple[int, int, int]:
        out = []
        for name, n, k, s, p in zip(_AXES, dims, self.kernel, self.stride, self.padding):
            m = (n + 2 * p - k) // s + 1
            if n + 2 * p < k or m < 1:
                raise ShapeError(f"{name} axis: input {n} with pad {p} is smaller than kernel {k}", axis=name)
            out.append(m)
        return tuple(out)

    def weight_shapes(self) -> dict[str, tuple[int, ...]]:
        """Parameter shapes; separable specs factor into spatial then temporal."""
        kt, kh, kw = self.kernel
        if not self.separable:
            return {"w": (self.out_channels, self.in_channels, kt, kh, kw), "b": (self.out_channels,)}
        return {
            "spatial.w": (self.out_channels, self.in_channels, 1, kh, kw),
            "spatial.b": (self.out_channels,),
            "temporal.w": (self.out_channels, self.out_channels, kt, 1, 1),
            "temporal.b": (self.out_channels,),
        }

    def factor(self) -> tuple["ConvSpec", "ConvSpec"]:
        kt, kh, kw = self.kernel
        st, sh, sw = self.stride
        pt, ph, pw = self.padding
        spatial = ConvSpec(self.in_channels, self.out_channels, (1, kh, kw), (1, sh, sw), (0, ph, pw))
        temporal = ConvSpec(self.out_channels, self.out_channels, (kt, 1, 1), (st, 1, 1), (pt, 0, 0))
        return spatial, temporal


def _as5d(x: Tensor) -> tuple[np.ndarray, bool]:
    if x.ndim == 5:
        return x.data, False
    if x.ndim == 4:
        return x.data[None], True
    raise ShapeError(f"expected (C,T,H,W) or (N,C,T,H,W), got shape {x.shape}")


def conv3d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride=1, padding=0) -> Tensor:
    """Cross-correlation with a ``(O, C, kt, kh, kw)`` kernel."""
    data, squeeze = _as5d(x)
    stride, padding = _triple(stride), _triple(padding)
    if weight.ndim != 5:
        raise ShapeError(f"weight must be 5-D (O,C,kt,kh,kw), got {weight.shape}")
    out_ch, in_ch = weight.shape[:2]
    if data.shape[1] != in_ch:
        raise ShapeError(f"channel axis: input has {data.shape[1]} channels, weight expects {in_ch}", axis="channel")
    if bias is not None and bias.shape != (out_ch,):
        raise ShapeError(f"bias shape {bias.shape} != ({out_ch},)", axis="channel")
    spec = ConvSpec(in_ch, out_ch, weight.shape[2:], stride, padding)
    out_dims = spec.output_dims(data.shape[2:])

    pt, ph, pw = padding
    xp = np.pad(data, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw))) if any(padding) else data
    kt, kh, kw = spec.kernel
    st, sh, sw = stride
    win = sliding_window_view(xp, (kt, kh, kw), axis=(2, 3, 4))
    win = win[:, :, : (out_dims[0] - 1) * st + 1 : st, : (out_dims[1] - 1) * sh + 1 : sh, : (out_dims[2] - 1) * sw + 1 : sw]
    # win: (N, C, To, Ho, Wo, kt, kh, kw)
    out = np.tensordot(win, weight.data, axes=([1, 5, 6, 7], [1, 2, 3, 4]))  # (N,To,Ho,Wo,O)
    out = np.ascontiguousarray(np.moveaxis(out, -1, 1))
    if bias is not None:
        out += bias.data[None, :, None, None, None]
    out = out.astype(x.dtype, copy=False)

    def backward(g):
        g5 = g[None] if squeeze else g
        gw = np.tensordot(g5, win, axes=([0, 2, 3, 4], [0, 2, 3, 4])) if weight.requires_grad else None
        gb = g5.sum(axis=(0, 2, 3, 4)) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            # (N,To,Ho,Wo,C,kt,kh,kw)
            cols = np.tensordot(g5, weight.data, axes=([1], [0]))
            gxp = np.zeros_like(xp)
            To, Ho, Wo = out_dims
            for a in range(kt):
                for b in range(kh):
                    for c in range(kw):
                        gxp[:, :, a : a + (To - 1) * st + 1 : st, b : b + (Ho - 1) * sh + 1 : sh,
                            c : c + (Wo - 1) * sw + 1 : sw] += np.moveaxis(cols[..., a, b, c], -1, 1)
            T, H, W = data.shape[2:]
            gx = gxp[:, :, pt : pt + T, ph : ph + H, pw : pw + W]
            if squeeze:
                gx = gx[0]
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._make(out[0] if squeeze else out, parents, backward)


def conv3d_spec(x: Tensor, spec: ConvSpec, weights: dict[str, Tensor], activation=None) -> Tensor:
    """Apply ``spec`` with named weights; a separable spec runs spatial then
    temporal, applying ``activation`` after each factor."""
    from .tensor import relu

    act = activation or (lambda t: t)
    channels = x.shape[-4]
    if channels != spec.in_channels:
        raise ShapeError(f"channel axis: input has {channels} channels, spec expects {spec.in_channels}", axis="channel")
    for name, shape in spec.weight_shapes().items():
        if tuple(weights[name].shape) != shape:
            raise ShapeError(f"weight {name!r} has shape {weights[name].shape}, spec expects {shape}")
    if not spec.separable:
        return act(conv3d(x, weights["w"], weights["b"], spec.stride, spec.padding))
    spatial, temporal = spec.factor()
    y = act(conv3d(x, weights["spatial.w"], weights["spatial.b"], spatial.stride, spatial.padding))
    return act(conv3d(y, weights["temporal.w"], weights["temporal.b"], temporal.stride, temporal.padding))


def maxpool3d(x: Tensor, kernel, stride=None) -> Tensor:
    """Max over windows with floor semantics and no padding.

    The gradient of each window goes to its first maximal element in
    flattened (t, h, w) order.
    """
    data, squeeze = _as5d(x)
    kernel = _triple(kernel)
    stride = _triple(stride if stride is not None else kernel)
    dims = data.shape[2:]
    for name, n, k in zip(_AXES, dims, kernel):
        if k > n:
            raise ShapeError(f"{name} axis: pooling kernel {k} exceeds input size {n}", axis=name)
    out_dims = tuple((n - k) // s + 1 for n, k, s in zip(dims, kernel, stride))
    st, sh, sw = stride
    win = sliding_window_view(data, kernel, axis=(2, 3, 4))[:, :, ::st, ::sh, ::sw]
    win = win[:, :, : out_dims[0], : out_dims[1], : out_dims[2]]
    flat = win.reshape(win.shape[:5] + (-1,))
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        g5 = g[None] if squeeze else g
        kt, kh, kw = kernel
        da, rem = np.divmod(arg, kh * kw)
        db, dc = np.divmod(rem, kw)
        N, C = data.shape[:2]
        n_idx, c_idx, t_idx, h_idx, w_idx = np.indices(arg.shape, sparse=True)
        t = t_idx * st + da
        h = h_idx * sh + db
        w = w_idx * sw + dc
        lin = np.ravel_multi_index(
            np.broadcast_arrays(n_idx, c_idx, t, h, w), data.shape
        ).ravel()
        gx = np.bincount(lin, weights=g5.ravel(), minlength=data.size).reshape(data.shape)
        gx = gx.astype(data.dtype, copy=False)
        return (gx[0] if squeeze else gx,)

    return Tensor._make(np.ascontiguousarray(out[0] if squeeze else out), (x,), backward)


def linear_sample_indices(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-centre source indices (i0, i1) and weights for resizing an axis.

    Source coordinate ``(d + 0.5) * n_in / n_out - 0.5``, clamped at the borders.
    """
    if n_in < 1 or n_out < 1:
        raise ShapeError(f"resize sizes must be positive, got {n_in} -> {n_out}")
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    lam = src - i0
    return i0, i1, lam


def resize_axis(data: np.ndarray, axis: int, n_out: int) -> np.ndarray:
    """Linear interpolation along one axis; non-differentiable numpy helper."""
    n_in = data.shape[axis]
    if n_in == n_out:
        return data
    i0, i1, lam = linear_sample_indices(n_in, n_out)
    shape = [1] * data.ndim
    shape[axis] = n_out
    lam = lam.reshape(shape).astype(data.dtype)
    x0 = np.take(data, i0, axis=axis)
    x1 = np.take(data, i1, axis=axis)
    # x0 + lam*(x1-x0) keeps constants exact
    return x0 + lam * (x1 - x0)


def _resize_axis_matrix(n_in: int, n_out: int, dtype) -> np.ndarray:
    i0, i1, lam = linear_sample_indices(n_in, n_out)
    m = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(m, (rows, i0), 1.0 - lam)
    np.add.at(m, (rows, i1), lam)
    return m.astype(dtype)


def _upsample(x: Tensor, target: tuple[int, ...], axes: tuple[int, ...]) -> Tensor:
    data = x.data
    sizes = [data.shape[a] for a in axes]
    out = data
    for a, n in zip(axes, target):
        out = resize_axis(out, a, n)
    if out is data:
        out = data.copy()

    def backward(g):
        for a, n_in, n_out in zip(axes, sizes, target):
            if n_in == n_out:
                continue
            m = _resize_axis_matrix(n_in, n_out, g.dtype)
            g = np.moveaxis(np.tensordot(g, m, axes=([a], [0])), -1, a)
        return (g,)

    return Tensor._make(out, (x,), backward)


def upsample_trilinear(x: Tensor, target) -> Tensor:
    """Resize the (T, H, W) axes to ``target`` by linear interpolation."""
    target = tuple(int(v) for v in target)
    if len(target) != 3 or min(target) < 1:
        raise ShapeError(f"target must be three positive sizes, got {target}")
    if x.ndim not in (4, 5):
        raise ShapeError(f"expected (C,T,H,W) or (N,C,T,H,W), got shape {x.shape}")
    axes = tuple(range(x.ndim - 3, x.ndim))
    return _upsample(x, target, axes)


def upsample_bilinear(x: Tensor, target) -> Tensor:
    """Resize (H, W) of a tensor whose time axis has already collapsed to 1."""
    target = tuple(int(v) for v in target)
    if len(target) != 2 or min(target) < 1:
        raise ShapeError(f"target must be two positive sizes, got {target}")
    if x.ndim not in (4, 5):
        raise ShapeError(f"expected (C,1,H,W) or (N,C,1,H,W), got shape {x.shape}")
    if x.shape[-3] != 1:
        raise ShapeError(f"bilinear upsampling needs time axis 1, got {x.shape[-3]}", axis="time")
    axes = (x.ndim - 2, x.ndim - 1)
    return _upsample(x, target, axes)


def channel_dot(features: Tensor, vector: Tensor) -> Tensor:
    """Per-location dot product over channels.

    ``features`` is (C,T,H,W) with ``vector`` (C,), or (N,C,T,H,W) with (N,C);
    the result keeps a singleton channel axis.
    """
    f = features.data
    v = vector.data
    if features.ndim == 4:
        if v.shape != (f.shape[0],):
            raise ShapeError(f"channel_dot: vector {v.shape} vs features {f.shape}", axis="channel")
        out = np.tensordot(v, f, axes=([0], [0]))[None]
        return Tensor._make(
            out, (features, vector),
            lambda g: (v[:, None, None, None] * g, np.tensordot(f, g[0], axes=([1, 2, 3], [0, 1, 2]))),
        )
    if features.ndim == 5 and v.shape == f.shape[:2]:
        out = np.einsum("nc,ncthw->nthw", v, f)[:, None]
        return Tensor._make(
            out, (features, vector),
            lambda g: (v[:, :, None, None, None] * g, np.einsum("ncthw,nthw->nc", f, g[:, 0])),
        )
    raise ShapeError(f"channel_dot: vector {v.shape} vs features {f.shape}", axis="channel")
