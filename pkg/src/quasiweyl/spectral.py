"""Complex linear ODE integration and Weyl matrices.

The first-order system v' = (F(x) + lambda*E) v, with E carrying the spectral
parameter in its bottom-left corner, is integrated with a fixed-step
classical Runge-Kutta scheme. F(x) does not depend on lambda, so it is
sampled once on the half-step grid and reused across a spectral sweep; the
integrator is deterministic (identical inputs give bit-identical outputs).

Weyl matrices:

* finite interval [0, 1]: the columns of the fundamental matrix C (with
  C(0) = U^{-1}) are recombined so that the k-th Weyl solution satisfies the
  first k left forms and the trailing right forms; M[s, k] = U_s(Phi_k).
* truncated half-line [0, X]: exponential modes are seeded at X with free
  quasi-derivative vectors and integrated backward. For coefficients
  supported inside [0, X] the seeds are exact there, and the determinant
  ratios that produce the Weyl functions are invariant under contamination
  of a mode by the faster-decaying ones, which is what makes single-pass
  shooting viable. M[s, k] = U_s(Phi_k) here as well.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .model import (
    BoundaryForm,
    CoefficientFunction,
    CoefficientSet,
    Geometry,
    NonDifferentiableKind,
    SectorContext,
    finite_interval,
    order_roots,
    principal_rho,
    truncated_half_line,
)
from .regularize import regularize

__all__ = [
    "IntegrationOverflow",
    "SingularAtLambda",
    "ConditioningWarning",
    "SampledSystem",
    "sample_system",
    "integrate_system",
    "FundamentalMatrix",
    "fundamental_matrix",
    "WeylSample",
    "weyl_matrix_finite",
    "weyl_matrix_halfline",
    "BirkhoffMode",
    "birkhoff_mode",
    "AsymptoticProbe",
    "asymptotic_probe",
    "weyl_limit_constant",
    "sturm_liouville_potential",
    "f2_system",
    "POLE_THRESHOLD",
    "WARN_THRESHOLD",
    "EXPONENT_GUARD",
]


class IntegrationOverflow(OverflowError):
    """State norm exceeded the configured bound (exponential blow-up)."""


class SingularAtLambda(ValueError):
    """The shooting system is singular: lambda sits at a pole of M."""


class ConditioningWarning(UserWarning):
    pass


POLE_THRESHOLD = 1e12
WARN_THRESHOLD = 1e8
EXPONENT_GUARD = 40.0

SystemLike = Union[CoefficientSet, Callable[[float], np.ndarray]]


def resolve_system(system: SystemLike, n: int | None = None):
    """Accept a coefficient set or a raw matrix-valued callable."""
    if isinstance(system, CoefficientSet):
        _, f_eval = regularize(system)
        return f_eval, system.orders.n
    if n is None:
        raise ValueError("matrix callables need the system size n")
    return system, n


# ---------------------------------------------------------------------------
# Fixed-step RK4 on a sampled coefficient grid
# ---------------------------------------------------------------------------


@dataclass
class SampledSystem:
    """F sampled on the half-step grid of [a, b] (direction-aware)."""

    n: int
    a: float
    b: float
    steps: int
    values: np.ndarray  # (2*steps + 1, n, n)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.steps

    def grid(self) -> np.ndarray:
        return self.a + (self.b - self.a) * np.arange(self.steps + 1) / self.steps

    def reversed(self) -> "SampledSystem":
        return SampledSystem(self.n, self.b, self.a, self.steps, self.values[::-1])


def sample_system(f_eval, n: int, a: float, b: float, steps: int) -> SampledSystem:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    pts = a + (b - a) * np.arange(2 * steps + 1) / (2 * steps)
    vals = np.empty((2 * steps + 1, n, n), dtype=complex)
    for i, x in enumerate(pts):
        vals[i] = f_eval(float(x))
    return SampledSystem(n, a, b, steps, vals)


def _rk4(
    sampled: SampledSystem,
    lam: complex,
    v0: np.ndarray,
    max_norm: float = 1e120,
    record: bool = False,
):
    """Classical RK4 on v' = (F(x) + lam*E) v; v may be a vector or matrix."""
    h = sampled.h
    F = sampled.values
    v = np.array(v0, dtype=complex)
    out = None
    if record:
        out = np.empty((sampled.steps + 1,) + v.shape, dtype=complex)
        out[0] = v

    def rhs(A, w):
        k = A @ w
        k[-1] += lam * w[0]
        return k

    half = h / 2.0
    for i in range(sampled.steps):
        A0 = F[2 * i]
        A1 = F[2 * i + 1]
        A2 = F[2 * i + 2]
        k1 = rhs(A0, v)
        k2 = rhs(A1, v + half * k1)
        k3 = rhs(A1, v + half * k2)
        k4 = rhs(A2, v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > max_norm:
            raise IntegrationOverflow(
                f"state norm exceeded {max_norm:g} at step {i + 1} of {sampled.steps}"
            )
        if record:
            out[i + 1] = v
    return (v, out) if record else v


def integrate_system(
    f_eval,
    lam: complex,
    x0: float,
    x1: float,
    v0: Sequence[complex],
    steps: int,
    *,
    n: int | None = None,
    max_norm: float = 1e120,
    sampled: SampledSystem | None = None,
) -> np.ndarray:
    """Propagate one state vector from x0 to x1 (backward allowed)."""
    v0 = np.asarray(v0, dtype=complex)
    if sampled is None:
        size = n or v0.shape[0]
        sampled = sample_system(f_eval, size, x0, x1, steps)
    return _rk4(sampled, lam, v0, max_norm=max_norm)


# ---------------------------------------------------------------------------
# Fundamental matrix
# ---------------------------------------------------------------------------


@dataclass
class FundamentalMatrix:
    """Fundamental system C on a grid, normalized by U C(0) = I."""

    lam: complex
    grid: np.ndarray
    values: np.ndarray  # (N+1, n, n)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def at(self, x: float) -> np.ndarray:
        idx = int(round((x - self.grid[0]) / (self.grid[1] - self.grid[0])))
        if not 0 <= idx < len(self.grid) or abs(self.grid[idx] - x) > 1e-9:
            raise ValueError(f"x = {x} is not on the integration grid")
        return self.values[idx]

    def determinants(self) -> np.ndarray:
        return np.linalg.det(self.values)

    def det_drift(self) -> float:
        """Max relative deviation of det C along the grid (Liouville check)."""
        dets = self.determinants()
        return float(np.max(np.abs(dets - dets[0])) / abs(dets[0]))


def fundamental_matrix(
    system: SystemLike,
    lam: complex,
    U: BoundaryForm,
    X: float,
    steps: int,
    *,
    n: int | None = None,
    max_norm: float = 1e120,
    sampled: SampledSystem | None = None,
) -> FundamentalMatrix:
    """Integrate the full matrix system from C(0) = U^{-1} up to X."""
    f_eval, size = resolve_system(system, n or U.n)
    if sampled is None:
        sampled = sample_system(f_eval, size, 0.0, X, steps)
    C0 = U.matrix_inverse()
    _, path = _rk4(sampled, lam, C0, max_norm=max_norm, record=True)
    return FundamentalMatrix(lam=lam, grid=sampled.grid(), values=path)


# ---------------------------------------------------------------------------
# Weyl matrices
# ---------------------------------------------------------------------------


@dataclass
class WeylSample:
    """lambda with its Weyl matrix M, M[s, k] = U_s(Phi_k).

    M is unit lower triangular up to solver error. On the half-line this is
    the transition matrix from the fundamental system to the Weyl system;
    on the finite interval its inverse plays that role.
    """

    lam: complex
    rho: complex
    M: np.ndarray
    geometry: Geometry
    cond: float
    flags: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def triangularity_defect(self) -> float:
        """Max deviation of the unit-lower-triangular pattern."""
        n = self.n
        defect = 0.0
        for s in range(n):
            for k in range(n):
                if s < k:
                    defect = max(defect, abs(self.M[s, k]))
                elif s == k:
                    defect = max(defect, abs(self.M[s, k] - 1.0))
        return defect


def _classify_condition(
    cond: float, pole_threshold: float, warn_threshold: float, raise_on_pole: bool
) -> tuple[str, ...]:
    if cond > pole_threshold or not math.isfinite(cond):
        if raise_on_pole:
            raise SingularAtLambda(f"shooting system condition number {cond:.3g}")
        return ("pole",)
    if cond > warn_threshold:
        warnings.warn(f"shooting system condition number {cond:.3g}", ConditioningWarning)
        return ("ill_conditioned",)
    return ()


def finite_weyl_coefficients(
    system: SystemLike,
    lam: complex,
    U: BoundaryForm,
    V: BoundaryForm,
    steps: int = 4000,
    *,
    sampled: SampledSystem | None = None,
    max_norm: float = 1e120,
) -> tuple[np.ndarray, FundamentalMatrix, float]:
    """Expansion coefficients E with Phi(x) = C(x) E on the unit interval.

    Column k of E holds the fundamental-basis coefficients of the k-th Weyl
    solution: it equals e_k plus a tail determined by the right-end forms
    V_l(Phi_k) = 0, l > k.
    """
    n = U.n
    C = fundamental_matrix(system, lam, U, 1.0, steps, n=n, sampled=sampled, max_norm=max_norm)
    W = V.apply(C.values[-1])  # W[l, r] = V_{l+1}(C_{r+1})
    E = np.eye(n, dtype=complex)
    cond = 1.0
    for k in range(1, n):
        A = W[k:, k:]
        b = W[k:, k - 1]
        cond = max(cond, float(np.linalg.cond(A)))
        try:
            tail = np.linalg.solve(A, -b)
        except np.linalg.LinAlgError as exc:
            raise SingularAtLambda(str(exc)) from exc
        E[k:, k - 1] = tail
    return E, C, cond


def weyl_matrix_finite(
    system: SystemLike,
    lam: complex,
    U: BoundaryForm,
    V: BoundaryForm,
    steps: int = 4000,
    *,
    sampled: SampledSystem | None = None,
    max_norm: float = 1e120,
    pole_threshold: float = POLE_THRESHOLD,
    warn_threshold: float = WARN_THRESHOLD,
    raise_on_pole: bool = True,
) -> WeylSample:
    """Weyl matrix for the boundary value problem on [0, 1]."""
    E, C, cond = finite_weyl_coefficients(
        system, lam, U, V, steps, sampled=sampled, max_norm=max_norm
    )
    flags = _classify_condition(cond, pole_threshold, warn_threshold, raise_on_pole)
    phi0 = C.values[0] @ E
    M = U.apply(phi0)
    rho = principal_rho(lam, U.n) if lam != 0 else 0.0
    return WeylSample(lam=lam, rho=rho, M=M, geometry=finite_interval(), cond=cond, flags=flags)


# ---------------------------------------------------------------------------
# Half-line machinery
# ---------------------------------------------------------------------------


@dataclass
class BirkhoffMode:
    """Numerical stand-in for the solution with pure-mode behavior e^{rho w x}."""

    rho: complex
    index: int
    omega: complex
    grid: np.ndarray
    values: np.ndarray  # (N+1, n), ascending in x

    def at(self, x: float) -> np.ndarray:
        idx = int(round((x - self.grid[0]) / (self.grid[1] - self.grid[0])))
        if not 0 <= idx < len(self.grid) or abs(self.grid[idx] - x) > 1e-9:
            raise ValueError(f"x = {x} is not on the integration grid")
        return self.values[idx]

    def grid_point(self, x: float) -> tuple[float, np.ndarray]:
        """Nearest grid abscissa and the state there."""
        idx = int(round((x - self.grid[0]) / (self.grid[1] - self.grid[0])))
        idx = min(max(idx, 0), len(self.grid) - 1)
        return float(self.grid[idx]), self.values[idx]


def _free_mode_vector(rho_omega: complex, n: int) -> np.ndarray:
    return np.array([rho_omega**j for j in range(n)], dtype=complex)


def _check_exponent_guard(ctx: SectorContext, X: float, guard: float):
    worst = max(abs((ctx.rho * w).real) for w in ctx.roots) * X
    if worst > guard:
        raise IntegrationOverflow(
            f"|Re(rho*omega)|*X = {worst:.2f} exceeds the exponent guard {guard:g}"
        )


def birkhoff_mode(
    system: SystemLike,
    rho: complex,
    l: int,
    X: float,
    steps: int,
    *,
    n: int | None = None,
    direction: str = "auto",
    exponent_guard: float = EXPONENT_GUARD,
    max_norm: float = 1e120,
    sampled_backward: SampledSystem | None = None,
) -> BirkhoffMode:
    """Integrate the l-th exponential mode across [0, X].

    ``auto`` starts at the endpoint where the mode is smallest: decaying
    modes (Re(rho*omega_l) <= 0) are seeded at X with the free-system
    quasi-derivative vector and integrated backward, growing modes at 0 and
    integrated forward. The seed is normalized to unit magnitude.
    """
    f_eval, size = resolve_system(system, n)
    ctx = order_roots(rho, size)
    if not 1 <= l <= size:
        raise ValueError(f"mode index l = {l} outside 1..{size}")
    w = ctx.omega(l)
    _check_exponent_guard(ctx, X, exponent_guard)
    if direction == "auto":
        direction = "backward" if (rho * w).real <= 0 else "forward"
    if direction not in ("backward", "forward"):
        raise ValueError("direction must be 'auto', 'backward' or 'forward'")

    start = X if direction == "backward" else 0.0
    seed = _free_mode_vector(rho * w, size)
    # keep the phase of e^{rho w start} but drop its magnitude before
    # normalizing, so deeply decayed seeds do not underflow to zero
    seed = seed * np.exp(1j * (rho * w * start).imag)
    seed = seed / np.linalg.norm(seed)

    if direction == "backward":
        sampled = sampled_backward or sample_system(f_eval, size, X, 0.0, steps)
        _, path = _rk4(sampled, rho**size, seed, max_norm=max_norm, record=True)
        grid = sampled.grid()[::-1]
        values = path[::-1]
    else:
        sampled = sample_system(f_eval, size, 0.0, X, steps)
        _, path = _rk4(sampled, rho**size, seed, max_norm=max_norm, record=True)
        grid = sampled.grid()
        values = path
    return BirkhoffMode(rho=rho, index=l, omega=w, grid=np.ascontiguousarray(grid), values=np.ascontiguousarray(values))


def _expansion_coefficients(B: np.ndarray, k: int) -> tuple[np.ndarray, complex, float]:
    """Cramer coefficients a_{k,l} from the form values B[j, r] = U_{j+1}(y_{r+1}).

    a_{k,l} = (-1)^{k+l} det(B[:k-1, {1..k} minus l]) / det(B[:k, :k]).
    """
    D = B[:k, :k]
    det_k = np.linalg.det(D)
    cond_k = float(np.linalg.cond(D)) if k > 0 else 1.0
    a = np.empty(k, dtype=complex)
    for l in range(1, k + 1):
        if k == 1:
            minor = 1.0 + 0.0j
        else:
            cols = [c for c in range(k) if c != l - 1]
            minor = np.linalg.det(B[: k - 1, cols])
        a[l - 1] = (-1) ** (k + l) * minor / det_k
    return a, det_k, cond_k


def weyl_matrix_halfline(
    system: SystemLike,
    lam: complex,
    U: BoundaryForm,
    X: float,
    steps: int = 4000,
    *,
    rho: complex | None = None,
    exponent_guard: float = EXPONENT_GUARD,
    max_norm: float = 1e120,
    pole_threshold: float = POLE_THRESHOLD,
    warn_threshold: float = WARN_THRESHOLD,
    raise_on_pole: bool = True,
    sampled_backward: SampledSystem | None = None,
) -> WeylSample:
    """Weyl matrix on the truncated half-line via mode expansions.

    All n-1 needed modes are seeded at the truncation point X and integrated
    backward; for coefficients supported inside [0, X] the free seeds are
    exact there. The k-th Weyl solution is the mode combination fixed by the
    first k boundary forms, and M[s, k] = U_s(Phi_k).
    """
    n = U.n
    if isinstance(system, CoefficientSet):
        for nu, s in enumerate(system.sigma):
            if not s.absolutely_integrable:
                raise ValueError(f"sigma_{nu} is not integrable on the half-line")
    f_eval, _ = resolve_system(system, n)
    if rho is None:
        rho = principal_rho(lam, n)
    elif abs(rho**n - lam) > 1e-8 * max(1.0, abs(lam)):
        raise ValueError("rho**n does not match lambda")
    ctx = order_roots(rho, n)
    _check_exponent_guard(ctx, X, exponent_guard)

    sampled_back = sampled_backward or sample_system(f_eval, n, X, 0.0, steps)
    modes = [
        birkhoff_mode(
            f_eval,
            rho,
            l,
            X,
            steps,
            n=n,
            direction="backward",
            exponent_guard=exponent_guard,
            max_norm=max_norm,
            sampled_backward=sampled_back,
        )
        for l in range(1, n)
    ]
    Y0 = np.column_stack([mode.values[0] for mode in modes])  # states at x = 0
    # Columns carry magnitudes up to e^{|Re rho w| X}; renormalize so the
    # condition numbers measure degeneracy, not scale.
    scales = np.linalg.norm(Y0, axis=0)
    Y0n = Y0 / scales
    B = U.apply(Y0n)

    M = np.eye(n, dtype=complex)
    cond = 1.0
    for k in range(1, n):
        a, det_k, cond_k = _expansion_coefficients(B, k)
        cond = max(cond, cond_k)
        if det_k == 0:
            raise SingularAtLambda("vanishing boundary-form determinant")
        phi0 = Y0n[:, :k] @ a
        M[:, k - 1] = U.apply(phi0)
    flags = _classify_condition(cond, pole_threshold, warn_threshold, raise_on_pole)
    return WeylSample(
        lam=lam,
        rho=rho,
        M=M,
        geometry=truncated_half_line(X),
        cond=cond,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# Asymptotics along a ray
# ---------------------------------------------------------------------------


def weyl_limit_constant(permutation: Sequence[int], roots: Sequence[complex], k: int) -> complex:
    """Limit constant d_{k-1,k-1} / d_{k,k} with d built from the ordered
    roots raised to the boundary-form orders."""

    def d(size: int) -> complex:
        if size == 0:
            return 1.0 + 0.0j
        mat = np.array(
            [[roots[l] ** permutation[s] for s in range(size)] for l in range(size)],
            dtype=complex,
        )
        return np.linalg.det(mat)

    return d(k - 1) / d(k)


@dataclass
class AsymptoticProbe:
    """Measured mode ratios along a ray against their exact limit."""

    k: int
    j: int
    phi: float
    x: float
    magnitudes: tuple[float, ...]
    ratios: tuple[complex, ...]
    limit: complex

    def relative_errors(self) -> tuple[float, ...]:
        return tuple(abs(r - self.limit) / abs(self.limit) for r in self.ratios)


def asymptotic_probe(
    system: SystemLike,
    U: BoundaryForm,
    k: int,
    j: int,
    phi: float,
    magnitudes: Sequence[float],
    x: float,
    *,
    X: float,
    steps: int = 4000,
    exponent_guard: float = EXPONENT_GUARD,
    max_norm: float = 1e120,
) -> AsymptoticProbe:
    """Track Phi_k^[j](x) * rho^{p_k} (rho w_k)^{-j} e^{-rho w_k x} along a ray.

    The ray arg(rho) = phi must lie strictly inside a sector so the root
    ordering is stable across the sweep.
    """
    n = U.n
    f_eval, _ = resolve_system(system, n)
    if not 1 <= k <= n:
        raise ValueError("k outside 1..n")
    if not 0 <= j <= n - 1:
        raise ValueError("j outside 0..n-1")
    ratios = []
    limit = None
    for mag in magnitudes:
        rho = mag * complex(math.cos(phi), math.sin(phi))
        ctx = order_roots(rho, n)
        _check_exponent_guard(ctx, X, exponent_guard)
        sampled_back = sample_system(f_eval, n, X, 0.0, steps)
        modes = [
            birkhoff_mode(
                f_eval,
                rho,
                l,
                X,
                steps,
                n=n,
                direction="backward",
                exponent_guard=exponent_guard,
                max_norm=max_norm,
                sampled_backward=sampled_back,
            )
            for l in range(1, k + 1)
        ]
        Y0 = np.column_stack([mode.values[0] for mode in modes])
        scales = np.linalg.norm(Y0, axis=0)
        B = U.apply(Y0 / scales)
        a, det_k, _ = _expansion_coefficients(B, k)
        if det_k == 0:
            raise SingularAtLambda("vanishing boundary-form determinant")
        a = a / scales
        x_grid, _ = modes[0].grid_point(x)
        phi_j = sum(a[l] * modes[l].at(x_grid)[j] for l in range(k))
        w_k = ctx.omega(k)
        p_k = U.permutation[k - 1]
        ratio = phi_j * rho**p_k * (rho * w_k) ** (-j) * np.exp(-rho * w_k * x_grid)
        ratios.append(complex(ratio))
        if limit is None:
            limit = complex(weyl_limit_constant(U.permutation, ctx.roots, k))
    return AsymptoticProbe(
        k=k,
        j=j,
        phi=phi,
        x=x,
        magnitudes=tuple(float(m) for m in magnitudes),
        ratios=tuple(ratios),
        limit=limit,
    )


# ---------------------------------------------------------------------------
# Second-order counterexample kit
# ---------------------------------------------------------------------------


def sturm_liouville_potential(
    a: CoefficientFunction, b: CoefficientFunction
) -> CoefficientFunction:
    """Potential q = a' + a^2 + b of the scalar equation hidden behind the
    general 2x2 system [[a, 1], [b, -a]]."""
    try:
        da = a.derivative()
    except Exception as exc:  # pragma: no cover
        raise NonDifferentiableKind(str(exc)) from exc
    return da + a * a + b


def f2_system(a: CoefficientFunction, b: CoefficientFunction) -> Callable[[float], np.ndarray]:
    """Evaluator for the general trace-free 2x2 system [[a, 1], [b, -a]]."""

    def f_eval(x: float) -> np.ndarray:
        av = complex(a(x))
        bv = complex(b(x))
        return np.array([[av, 1.0], [bv, -av]], dtype=complex)

    return f_eval
