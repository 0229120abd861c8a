"""Bernstein-polynomial paths and their rotation-minimizing (parallel transport) frame."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .events import DegeneratePathError, EventLog, record

EPS_SPEED = 1e-6


def de_casteljau(points: np.ndarray, tau: float) -> np.ndarray:
    b = np.array(points, dtype=float, copy=True)
    n = len(b)
    for r in range(1, n):
        b[: n - r] = (1.0 - tau) * b[: n - r] + tau * b[1: n - r + 1]
    return b[0]


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (much cheaper than ``np.cross`` for one pair)."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def skew(w) -> np.ndarray:
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def vee(S) -> np.ndarray:
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


@dataclass(frozen=True)
class TransportFrame:
    R: np.ndarray  # columns t1, t2, t3 in inertial axes
    omega: np.ndarray  # angular rate per unit virtual time, T axes

    @property
    def t1(self):
        return self.R[:, 0]

    @property
    def t2(self):
        return self.R[:, 1]

    @property
    def t3(self):
        return self.R[:, 2]


class BernsteinPath:
    """Bezier curve over virtual time ``gamma`` in ``[0, T_f]``."""

    def __init__(self, control_points, T_f: float, frame_samples: int = 512,
                 log: EventLog | None = None):
        P = np.asarray(control_points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 3 or len(P) < 2:
            raise ValueError("need at least two 3-D control points")
        if not T_f > 0:
            raise ValueError("T_f must be positive")
        self.points = P
        self.T_f = float(T_f)
        self.degree = len(P) - 1
        self.frame_samples = int(frame_samples)
        self.log = log
        n = self.degree
        self._d1 = n * np.diff(P, axis=0) / self.T_f
        self._d2 = (n * (n - 1) * np.diff(P, n=2, axis=0) / self.T_f**2) if n >= 2 else None

    def _tau(self, gamma: float) -> float:
        if gamma < 0.0 or gamma > self.T_f:
            record(self.log, "W_GAMMA_CLAMP", f"virtual time {gamma:.4f} clamped to [0, {self.T_f}]")
            gamma = min(max(gamma, 0.0), self.T_f)
        return gamma / self.T_f

    def position(self, gamma: float) -> np.ndarray:
        return de_casteljau(self.points, self._tau(gamma))

    def derivative(self, gamma: float) -> np.ndarray:
        return de_casteljau(self._d1, self._tau(gamma))

    def second_derivative(self, gamma: float) -> np.ndarray:
        if self._d2 is None:
            return np.zeros(3)
        return de_casteljau(self._d2, self._tau(gamma))

    def evaluate(self, gamma: float):
        return self.position(gamma), self.derivative(gamma), self.second_derivative(gamma)

    def speed(self, gamma: float) -> float:
        return float(np.linalg.norm(self.derivative(gamma)))

    def tangent(self, gamma: float) -> np.ndarray:
        d = self.derivative(gamma)
        nd = np.linalg.norm(d)
        if nd <= EPS_SPEED:
            raise DegeneratePathError(f"path speed {nd:.3e} at gamma={gamma:.4f}")
        return d / nd

    # -- parallel transport frame -------------------------------------------

    @cached_property
    def _frame_grid(self):
        N = self.frame_samples
        gam = np.linspace(0.0, self.T_f, N)
        pts = np.array([de_casteljau(self.points, g / self.T_f) for g in gam])
        der = np.array([de_casteljau(self._d1, g / self.T_f) for g in gam])
        sp = np.linalg.norm(der, axis=1)
        if sp.min() <= EPS_SPEED:
            k = int(np.argmin(sp))
            raise DegeneratePathError(f"path speed {sp[k]:.3e} at gamma={gam[k]:.4f}")
        T = der / sp[:, None]
        R2 = np.empty_like(T)
        R2[0] = initial_normal(T[0])
        # Double reflection propagation.
        for i in range(N - 1):
            v1 = pts[i + 1] - pts[i]
            c1 = v1 @ v1
            if c1 > 0:
                rL = R2[i] - (2.0 / c1) * (v1 @ R2[i]) * v1
                tL = T[i] - (2.0 / c1) * (v1 @ T[i]) * v1
            else:
                rL, tL = R2[i], T[i]
            v2 = T[i + 1] - tL
            c2 = v2 @ v2
            r = rL - (2.0 / c2) * (v2 @ rL) * v2 if c2 > 0 else rL
            r = r - (r @ T[i + 1]) * T[i + 1]
            R2[i + 1] = r / np.linalg.norm(r)
        R3 = np.cross(T, R2)
        frames = np.stack([T, R2, R3], axis=2)
        h = gam[1] - gam[0]
        omega = np.zeros((N, 3))
        for k in range(N):
            lo, hi = max(k - 1, 0), min(k + 1, N - 1)
            dR = (frames[hi] - frames[lo]) / ((hi - lo) * h)
            S = frames[k].T @ dR
            omega[k] = vee(0.5 * (S - S.T))
        return gam, frames, omega

    def frame(self, gamma: float) -> TransportFrame:
        g = min(max(gamma, 0.0), self.T_f)
        last = self.__dict__.get("_last_frame")
        if last is not None and last[0] == g:
            return last[1]
        gam, frames, omega = self._frame_grid
        t1 = self.tangent(g)
        h = gam[1] - gam[0]
        k = min(int(g / h), len(gam) - 2)
        a = (g - gam[k]) / h
        r2 = (1.0 - a) * frames[k][:, 1] + a * frames[k + 1][:, 1]
        r2 = r2 - (r2 @ t1) * t1
        r2 /= np.linalg.norm(r2)
        R = np.column_stack([t1, r2, cross3(t1, r2)])
        w = (1.0 - a) * omega[k] + a * omega[k + 1]
        R.flags.writeable = False  # shared through the cache
        w.flags.writeable = False
        out = TransportFrame(R, w)
        self._last_frame = (g, out)
        return out


def initial_normal(t1: np.ndarray) -> np.ndarray:
    """Horizontal normal to starboard of ``t1`` (``e_z x t1``), else north.

    With z down this makes ``t3 = t1 x t2`` point downward, so a level
    path has the same axes as a vehicle on it.
    """
    for ref in (np.array([0.0, 0.0, 1.0]), np.array([-1.0, 0.0, 0.0])):
        r = np.cross(ref, t1)
        n = np.linalg.norm(r)
        if n > 1e-6:
            return r / n
    raise DegeneratePathError("cannot build an initial normal")


def eval_path(path: BernsteinPath, gamma: float):
    return path.evaluate(gamma)


def transport_frame(path: BernsteinPath, gamma: float) -> TransportFrame:
    return path.frame(gamma)

