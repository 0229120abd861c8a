"""Multilinear lookup on rectilinear grids.

Evaluated once per channel per derivative call, so the scalar path avoids
numpy overhead. Queries outside the grid are clamped to the boundary;
callers are responsible for reporting the clamp.
"""

from __future__ import annotations

from bisect import bisect_right
from itertools import product

import numpy as np

from .events import TableError


class GridTable:
    def __init__(self, axes, values, name="table"):
        self.name = name
        self.axes = [np.asarray(a, dtype=float).reshape(-1) for a in axes]
        vals = np.asarray(values, dtype=float)
        shape = tuple(len(a) for a in self.axes)
        if vals.shape != shape:
            raise TableError(f"{name}: values shape {vals.shape} does not match axes {shape}",
                             code="E_TABLE")
        if not np.all(np.isfinite(vals)):
            raise TableError(f"{name}: non-finite entries", code="E_TABLE")
        for k, a in enumerate(self.axes):
            if len(a) == 0 or not np.all(np.isfinite(a)):
                raise TableError(f"{name}: axis {k} empty or non-finite", code="E_TABLE")
            if len(a) > 1 and not np.all(np.diff(a) > 0):
                raise TableError(f"{name}: axis {k} not strictly increasing", code="E_TABLE")
        self.values = vals
        self._axes = [a.tolist() for a in self.axes]
        self._flat = vals.ravel().tolist()
        strides = []
        s = 1
        for n in reversed(shape):
            strides.append(s)
            s *= n
        self._strides = list(reversed(strides))
        self._corners = list(product((0, 1), repeat=len(shape)))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def bounds(self, k):
        a = self._axes[k]
        return a[0], a[-1]

    def same_grid(self, other: "GridTable") -> bool:
        return self._axes == other._axes

    def stencil(self, *x):
        """Flat offsets and weights of the corners bracketing ``x``.

        Tables on the same grid can share one stencil through :meth:`apply`.
        """
        idx = []
        wts = []
        for a, xi in zip(self._axes, x):
            n = len(a)
            if n == 1:
                idx.append(0)
                wts.append(0.0)
                continue
            if xi <= a[0]:
                i, t = 0, 0.0
            elif xi >= a[-1]:
                i, t = n - 2, 1.0
            else:
                i = bisect_right(a, xi) - 1
                if i > n - 2:
                    i = n - 2
                t = (xi - a[i]) / (a[i + 1] - a[i])
            idx.append(i)
            wts.append(t)
        out = []
        strides = self._strides
        for corner in self._corners:
            w = 1.0
            off = 0
            for c, i, t, st in zip(corner, idx, wts, strides):
                if c:
                    if t == 0.0:
                        w = 0.0
                        break
                    w *= t
                    off += (i + 1) * st
                else:
                    w *= 1.0 - t
                    off += i * st
            if w != 0.0:
                out.append((off, w))
        return out

    def apply(self, stencil) -> float:
        flat = self._flat
        total = 0.0
        for off, w in stencil:
            total += w * flat[off]
        return total

    def __call__(self, *x) -> float:
        return self.apply(self.stencil(*x))

    def to_dict(self):
        return {"axes": [a.tolist() for a in self.axes], "values": self.values.tolist()}
