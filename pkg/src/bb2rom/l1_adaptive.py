"""Discrete-time L1 adaptive augmentation of the pitch/yaw-rate loop.

Piecewise-constant adaptation with an output predictor and a low-pass
filtered cancellation channel. All discretizations are exact (matrix
exponentials), so signals only depend on the sample time ``T_s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .events import DesignError

HURWITZ_MARGIN = 0.0
MINREAL_TOL = 1e-9


def _as2d(a, name):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if not np.all(np.isfinite(a)):
        raise DesignError(f"{name} contains non-finite entries")
    return a


def is_hurwitz(A) -> bool:
    return bool(np.all(np.linalg.eigvals(A).real < -HURWITZ_MARGIN))


def integral_expm(A, T: float, B=None):
    """Return ``(e^{AT}, int_0^T e^{As} ds B)`` from one block exponential."""
    A = np.atleast_2d(A)
    n = A.shape[0]
    B = np.eye(n) if B is None else np.atleast_2d(B)
    m = B.shape[1]
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = A
    blk[:n, n:] = B
    E = linalg.expm(blk * T)
    return E[:n, :n], E[:n, n:]


def ctrb(A, B):
    n = A.shape[0]
    cols = [B]
    for _ in range(n - 1):
        cols.append(A @ cols[-1])
    return np.hstack(cols)


def obsv(A, C):
    return ctrb(A.T, C.T).T


def _rank(M, tol=MINREAL_TOL):
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def transmission_zeros(A, B, C, D=None):
    """Finite invariant zeros of a square system (generalized eigenvalues)."""
    n, m = A.shape[0], B.shape[1]
    p = C.shape[0]
    D = np.zeros((p, m)) if D is None else D
    S = np.block([[A, B], [C, D]])
    E = np.zeros_like(S)
    E[:n, :n] = np.eye(n)
    w = linalg.eigvals(S, E)
    return w[np.isfinite(w)]


@dataclass(frozen=True)
class PlantModel:
    A_p: np.ndarray
    B_p: np.ndarray
    C_p: np.ndarray

    def __post_init__(self):
        A, B, C = (_as2d(x, k) for x, k in ((self.A_p, "A_p"), (self.B_p, "B_p"), (self.C_p, "C_p")))
        object.__setattr__(self, "A_p", A)
        object.__setattr__(self, "B_p", B)
        object.__setattr__(self, "C_p", C)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape != (n, 2) or C.shape != (2, n):
            raise DesignError("plant must be n x n, n x 2, 2 x n")
        if _rank(ctrb(A, B)) < n:
            raise DesignError("plant (A_p, B_p) is not controllable")
        if _rank(obsv(A, C)) < n:
            raise DesignError("plant (A_p, C_p) is not observable")


@dataclass(frozen=True)
class DesiredModel:
    """Desired rate response ``M(s) = C_m (sI - A_m)^-1 B_m``."""

    A_m: np.ndarray
    B_m: np.ndarray
    C_m: np.ndarray
    T_s: float = 0.01

    def __post_init__(self):
        A = _as2d(self.A_m, "A_m")
        B = _as2d(self.B_m, "B_m")
        C = _as2d(self.C_m, "C_m")
        object.__setattr__(self, "A_m", A)
        object.__setattr__(self, "B_m", B)
        object.__setattr__(self, "C_m", C)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n or C.shape[0] != B.shape[1]:
            raise DesignError("inconsistent desired model dimensions")
        if not self.T_s > 0:
            raise DesignError("T_s must be positive")
        if not is_hurwitz(A):
            eig = np.linalg.eigvals(A)
            raise DesignError(f"A_m is not Hurwitz (max Re eig = {eig.real.max():.4g})",
                              context={"eigenvalues": eig.tolist()})
        CB = C @ B
        if abs(np.linalg.det(CB)) < 1e-12 * max(1.0, np.abs(CB).max() ** CB.shape[0]):
            raise DesignError("C_m B_m is singular")
        z = transmission_zeros(A, B, C)
        if np.any(z.real >= 0):
            raise DesignError(f"M(s) has a non-minimum-phase zero: {z[z.real >= 0]}")

    @property
    def n(self) -> int:
        return self.A_m.shape[0]

    @property
    def m(self) -> int:
        return self.B_m.shape[1]

    @property
    def K_g(self) -> np.ndarray:
        return -np.linalg.inv(self.C_m @ np.linalg.solve(self.A_m, self.B_m))

    def dc_gain(self) -> np.ndarray:
        return -self.C_m @ np.linalg.solve(self.A_m, self.B_m)


def second_order_model(omega_n=(0.5, 0.5), zeta=(0.9, 0.9), zero=(1.0, 1.0), T_s=0.01) -> DesiredModel:
    """Decoupled channels ``omega^2 (s/z + 1) / (s^2 + 2 zeta omega s + omega^2)``.

    Unit DC gain per channel; the finite zero gives relative degree one so
    that ``C_m B_m`` is nonsingular.
    """
    A = np.zeros((4, 4))
    B = np.zeros((4, 2))
    C = np.zeros((2, 4))
    for k in range(2):
        w, zt, zz = float(omega_n[k]), float(zeta[k]), float(zero[k])
        if not (w > 0 and zt > 0 and zz > 0):
            raise DesignError("second-order channel parameters must be positive")
        i = 2 * k
        A[i:i + 2, i:i + 2] = [[-2 * zt * w, 1.0], [-w * w, 0.0]]
        B[i:i + 2, k] = [w * w / zz, w * w]
        C[k, i] = 1.0
    return DesiredModel(A, B, C, T_s)


def embedding_stacked(n: int, m: int = 2) -> np.ndarray:
    """Stack ``[I_m; 0]``: the output error placed in the leading Lambda coordinates."""
    E = np.zeros((n, m))
    E[:m, :m] = np.eye(m)
    return E


@dataclass(frozen=True)
class AdaptationMatrices:
    Q: np.ndarray
    P: np.ndarray
    sqrtP: np.ndarray
    D: np.ndarray
    Lam: np.ndarray
    Phi: np.ndarray
    expLam: np.ndarray  # e^{Lambda A_m Lambda^-1 T_s}
    E: np.ndarray
    gain: np.ndarray  # -Phi^-1 expLam E
    expA: np.ndarray  # e^{A_m T_s}
    intA: np.ndarray  # A_m^-1 (e^{A_m T_s} - I)
    expA_inv: np.ndarray  # e^{-A_m T_s}


def build_adaptation_matrices(desired: DesiredModel, Q=None, embedding: str = "stacked") -> AdaptationMatrices:
    """Lyapunov, square root, null-space completion and the sampled propagators.

    ``embedding="stacked"`` uses ``[I; 0]`` in Lambda coordinates;
    ``"lambda_inverse"`` applies ``Lambda^-1`` to the stacked vector instead.
    """
    A, C = desired.A_m, desired.C_m
    n, T = desired.n, desired.T_s
    Q = np.eye(n) if Q is None else _as2d(Q, "Q")
    if Q.shape != (n, n) or not np.allclose(Q, Q.T) or np.linalg.eigvalsh(Q).min() <= 0:
        raise DesignError("Q must be symmetric positive definite")
    P = linalg.solve_continuous_lyapunov(A.T, -Q)
    P = 0.5 * (P + P.T)
    sqrtP = np.real(linalg.sqrtm(P))
    sqrtP = 0.5 * (sqrtP + sqrtP.T)
    Csp = C @ np.linalg.inv(sqrtP)
    D = linalg.null_space(Csp).T
    Lam = np.vstack([C, D @ sqrtP])
    if Lam.shape != (n, n) or abs(np.linalg.det(Lam)) < 1e-12:
        raise DesignError("Lambda is singular or not square")
    Abar = Lam @ A @ np.linalg.inv(Lam)
    expLam, Phi = integral_expm(Abar, T, Lam)
    if np.linalg.cond(Phi) > 1e12:
        raise DesignError("Phi(T_s) is numerically singular")
    E = embedding_stacked(n, desired.m)
    if embedding == "lambda_inverse":
        E = np.linalg.solve(Lam, E)
    elif embedding != "stacked":
        raise DesignError(f"unknown embedding {embedding!r}")
    gain = -np.linalg.solve(Phi, expLam @ E)
    expA, intA = integral_expm(A, T)
    return AdaptationMatrices(Q, P, sqrtP, D, Lam, Phi, expLam, E, gain, expA, intA,
                              linalg.expm(-A * T))


def adaptation_step(mats: AdaptationMatrices, y_hat, y) -> np.ndarray:
    return mats.gain @ (np.asarray(y_hat, float) - np.asarray(y, float))


def predictor_step(mats: AdaptationMatrices, desired: DesiredModel, x_hat, u_d, sigma_hat):
    x_next = mats.expA @ x_hat + mats.intA @ (desired.B_m @ u_d + sigma_hat)
    return x_next, desired.C_m @ x_next


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def freqresp(self, s: complex) -> np.ndarray:
        n = self.order
        return self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B) + self.D

    def dc_gain(self) -> np.ndarray:
        return self.D - self.C @ np.linalg.solve(self.A, self.B)


def series(first: StateSpace, second: StateSpace) -> StateSpace:
    """``second(s) @ first(s)``."""
    n1, n2 = first.order, second.order
    A = np.block([[first.A, np.zeros((n1, n2))], [second.B @ first.C, second.A]])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    return StateSpace(A, B, C, second.D @ first.D)


def _restrict(ss: StateSpace, basis: np.ndarray) -> StateSpace:
    return StateSpace(basis.T @ ss.A @ basis, basis.T @ ss.B, ss.C @ basis, ss.D)


def minimal_realization(ss: StateSpace, tol: float = MINREAL_TOL) -> StateSpace:
    """Remove uncontrollable then unobservable modes (orthogonal projections)."""
    n = ss.order
    if n == 0:
        return ss
    U, s, _ = np.linalg.svd(ctrb(ss.A, ss.B))
    r = int(np.sum(s > tol * max(1.0, s[0])))
    red = _restrict(ss, U[:, :r])
    if r == 0:
        return red
    _, s2, Vt = np.linalg.svd(obsv(red.A, red.C))
    r2 = int(np.sum(s2 > tol * max(1.0, s2[0])))
    return _restrict(red, Vt[:r2].T)


def lowpass_filter(bandwidth, m: int = 2) -> StateSpace:
    """Diagonal ``w / (s + w)`` filter."""
    w = np.broadcast_to(np.asarray(bandwidth, float), (m,))
    if np.any(w <= 0):
        raise DesignError("filter bandwidth must be positive")
    return StateSpace(-np.diag(w), np.diag(w), np.eye(m), np.zeros((m, m)))


def build_filter(desired: DesiredModel, C_spec: StateSpace | float = 5.0, tol: float = MINREAL_TOL) -> StateSpace:
    """Minimal realization of ``O(s) = C(s) M^-1(s) C_m (sI - A_m)^-1``.

    ``M^-1(s) C_m (sI - A_m)^-1`` is realized exactly through the input that
    reproduces a given output: with ``Pi = I - B (CB)^-1 C`` it is
    ``{Pi A, Pi, (CB)^-1 C A, (CB)^-1 C}``.
    """
    Cf = lowpass_filter(C_spec, desired.m) if not isinstance(C_spec, StateSpace) else C_spec
    if np.abs(Cf.D).max(initial=0.0) > 0:
        raise DesignError("C(s) must be strictly proper")
    if Cf.order and not is_hurwitz(Cf.A):
        raise DesignError("C(s) must be stable")
    if np.abs(Cf.dc_gain() - np.eye(desired.m)).max() > 1e-10:
        raise DesignError("C(0) must equal the identity")
    A, B, C = desired.A_m, desired.B_m, desired.C_m
    CB = C @ B
    try:
        CBi = np.linalg.inv(CB)
    except np.linalg.LinAlgError as exc:
        raise DesignError("M(s) inverse is improper (C_m B_m singular)") from exc
    Pi = np.eye(desired.n) - B @ CBi @ C
    G = StateSpace(Pi @ A, Pi, CBi @ C @ A, CBi @ C)
    O = minimal_realization(series(G, Cf), tol)
    if O.order and not is_hurwitz(O.A):
        raise DesignError("filter realization has unstable modes")
    return O


@dataclass(frozen=True)
class FilterDiscretization:
    expA: np.ndarray
    intA: np.ndarray


def control_step(filt: StateSpace, mats: AdaptationMatrices, desired: DesiredModel, omega_c,
                 sigma_hat, x_u, disc: FilterDiscretization | None = None):
    """Return ``(u_d[i], x_u[i+1])``."""
    if disc is None:
        disc = FilterDiscretization(*integral_expm(filt.A, desired.T_s))
    u = desired.K_g @ np.asarray(omega_c, float) - filt.C @ x_u
    x_next = disc.expA @ x_u + disc.intA @ (filt.B @ (mats.expA_inv @ sigma_hat))
    return u, x_next


@dataclass
class L1State:
    sigma_hat: np.ndarray
    x_hat: np.ndarray
    x_u: np.ndarray
    u_d: np.ndarray
    y_hat: np.ndarray
    samples: int = 0


@dataclass
class L1Controller:
    """Sampled augmentation: call :meth:`sample` once every ``T_s``."""

    desired: DesiredModel
    Q: np.ndarray | None = None
    bandwidth: float = 5.0
    embedding: str = "stacked"
    mats: AdaptationMatrices = field(init=False)
    filt: StateSpace = field(init=False)
    state: L1State | None = field(init=False, default=None)

    def __post_init__(self):
        self.mats = build_adaptation_matrices(self.desired, self.Q, self.embedding)
        self.filt = build_filter(self.desired, self.bandwidth)
        self._disc = FilterDiscretization(*integral_expm(self.filt.A, self.desired.T_s))
        self._Cpinv = np.linalg.pinv(self.desired.C_m)

    @property
    def T_s(self) -> float:
        return self.desired.T_s

    def reset(self, y0) -> None:
        n, m = self.desired.n, self.desired.m
        x_hat = self._Cpinv @ np.asarray(y0, float)
        self.state = L1State(np.zeros(n), x_hat, np.zeros(self.filt.order), np.zeros(m),
                             self.desired.C_m @ x_hat)

    def sample(self, omega_c, y) -> np.ndarray:
        """Process sample ``y_d[i]`` and return the held input ``u_d[i]``."""
        if self.state is None:
            self.reset(y)
        st = self.state
        st.sigma_hat = adaptation_step(self.mats, st.y_hat, y)
        st.u_d, st.x_u = control_step(self.filt, self.mats, self.desired, omega_c,
                                      st.sigma_hat, st.x_u, self._disc)
        st.x_hat, st.y_hat = predictor_step(self.mats, self.desired, st.x_hat, st.u_d, st.sigma_hat)
        st.samples += 1
        return st.u_d.copy()


def lyapunov_residual(A, P, Q) -> float:
    return float(np.abs(A.T @ P + P @ A + Q).max())

