"""Core domain types.

* Singularity-order index tuples and their validation.
* Coefficient functions in exact representations (constants, polynomials,
  piecewise-linear interpolants, compactly supported polynomial bumps) with
  exact derivative / integral transforms.
* Factored boundary forms U = P * L (permutation times unit lower triangular).
* Sector bookkeeping and root ordering for the spectral parameter.

Everything is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence, Union

import numpy as np

from .symbolic import Polynomial, Rational, _frac

__all__ = [
    "OrderOutOfRange",
    "LengthMismatch",
    "NotAPermutation",
    "NotUnitLowerTriangular",
    "ZeroRho",
    "DomainViolation",
    "NonIntegrableTail",
    "NonDifferentiableKind",
    "SingularityOrders",
    "validate_orders",
    "order_bound",
    "all_order_tuples",
    "singular_set",
    "CoefficientFunction",
    "CoefficientSet",
    "BoundaryForm",
    "validate_boundary_form",
    "SectorContext",
    "order_roots",
    "sector_of",
    "principal_rho",
    "rho_in_sector",
    "Geometry",
    "finite_interval",
    "truncated_half_line",
]


class OrderOutOfRange(ValueError):
    """A singularity order violates its admissible bound."""

    def __init__(self, nu: int, value: int, bound: int):
        self.nu = nu
        self.value = value
        self.bound = bound
        super().__init__(f"order i_{nu} = {value} outside [0, {bound}]")


class LengthMismatch(ValueError):
    pass


class NotAPermutation(ValueError):
    pass


class NotUnitLowerTriangular(ValueError):
    pass


class ZeroRho(ValueError):
    pass


class DomainViolation(ValueError):
    """Evaluation requested outside a coefficient's domain."""


class NonIntegrableTail(ValueError):
    """A half-line tail integral was requested for a non-integrable kind."""


class NonDifferentiableKind(ValueError):
    pass


# ---------------------------------------------------------------------------
# Singularity orders
# ---------------------------------------------------------------------------


def order_bound(n: int, nu: int) -> int:
    """Admissible upper bound for the order at position nu (0-based)."""
    m, tau = n // 2, n % 2
    k, j = divmod(nu, 2)
    return m - k - j


@dataclass(frozen=True)
class SingularityOrders:
    """Validated index tuple (i_0, ..., i_{n-2}) with derived n = 2m + tau."""

    n: int
    m: int
    tau: int
    orders: tuple[int, ...]

    def bound(self, nu: int) -> int:
        return order_bound(self.n, nu)

    def __iter__(self) -> Iterator[int]:
        return iter(self.orders)


def validate_orders(n: int, orders: Sequence[int]) -> SingularityOrders:
    """Check the two bound families 0 <= i_{2k+j} <= m - k - j."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    orders = tuple(int(i) for i in orders)
    if len(orders) != n - 1:
        raise LengthMismatch(f"expected {n - 1} orders for n = {n}, got {len(orders)}")
    for nu, i in enumerate(orders):
        bound = order_bound(n, nu)
        if not 0 <= i <= bound:
            raise OrderOutOfRange(nu, i, bound)
    return SingularityOrders(n=n, m=n // 2, tau=n % 2, orders=orders)


def all_order_tuples(n: int) -> Iterator[tuple[int, ...]]:
    """Enumerate every admissible order tuple for the given n."""
    ranges = [range(order_bound(n, nu) + 1) for nu in range(n - 1)]
    return itertools.product(*ranges)


def singular_set(orders: SingularityOrders) -> frozenset[int]:
    """Positions whose order attains its maximum; empty for odd n."""
    if orders.tau == 1:
        return frozenset()
    members = set()
    for nu, i in enumerate(orders.orders):
        if i == orders.bound(nu):
            members.add(nu)
    return frozenset(members)


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Piecewise:
    """Compactly supported exact piecewise polynomial.

    ``breaks`` holds K+1 increasing rational breakpoints and ``parts`` the K
    polynomials valid on the closed pieces; the function is zero outside
    [breaks[0], breaks[-1]]. Evaluation at an interior breakpoint uses the
    right piece, at the last breakpoint the left piece (one-sided limits of
    the representation).
    """

    breaks: tuple[Fraction, ...]
    parts: tuple[Polynomial, ...]

    def __post_init__(self):
        if len(self.breaks) != len(self.parts) + 1:
            raise ValueError("breakpoint/piece count mismatch")
        for a, b in zip(self.breaks, self.breaks[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")

    @property
    def support(self) -> tuple[Fraction, Fraction]:
        return self.breaks[0], self.breaks[-1]

    def __call__(self, x):
        if x < self.breaks[0] or x > self.breaks[-1]:
            return 0 * x if not isinstance(x, (int, Fraction)) else Fraction(0)
        idx = bisect.bisect_right(self.breaks, x) - 1
        idx = min(idx, len(self.parts) - 1)
        return self.parts[idx](x)

    def map_parts(self, fn: Callable[[Polynomial], Polynomial]) -> "_Piecewise":
        return _Piecewise(self.breaks, tuple(fn(p) for p in self.parts))

    def simplified(self) -> "_Piecewise | None":
        """Drop leading/trailing zero pieces; None if identically zero."""
        parts = list(self.parts)
        breaks = list(self.breaks)
        while parts and parts[0].is_zero:
            parts.pop(0)
            breaks.pop(0)
        while parts and parts[-1].is_zero:
            parts.pop()
            breaks.pop()
        if not parts:
            return None
        return _Piecewise(tuple(breaks), tuple(parts))

    def total_integral(self) -> Fraction:
        return sum(
            (p.definite_integral(a, b) for p, a, b in zip(self.parts, self.breaks, self.breaks[1:])),
            Fraction(0),
        )


def _merge_piecewise(
    f: _Piecewise | None,
    g: _Piecewise | None,
    combine: Callable[[Polynomial, Polynomial], Polynomial],
) -> _Piecewise | None:
    """Pointwise combination on the union of breakpoints (zero padding)."""
    if f is None and g is None:
        return None
    pts = sorted({*(f.breaks if f else ()), *(g.breaks if g else ())})

    def piece_of(h: _Piecewise | None, a: Fraction) -> Polynomial:
        if h is None or a < h.breaks[0] or a >= h.breaks[-1]:
            return Polynomial()
        idx = bisect.bisect_right(h.breaks, a) - 1
        return h.parts[idx]

    parts = tuple(combine(piece_of(f, a), piece_of(g, a)) for a in pts[:-1])
    return _Piecewise(tuple(pts), parts).simplified()


HALF_LINE = "half_line"

Domain = Union[None, float, Fraction]  # None marks the half-line


@dataclass(frozen=True)
class CoefficientFunction:
    """Exact scalar coefficient: a global polynomial part plus a compactly
    supported piecewise-polynomial part.

    ``domain`` is the right endpoint of a finite interval [0, X], or None for
    the half-line. The split representation is closed under the sums,
    products, derivatives and the integral transforms used by the
    order-shifting correspondences.
    """

    kind: str
    base: Polynomial
    pieces: _Piecewise | None
    domain: Domain = None

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(value: Rational, domain: Domain = None) -> "CoefficientFunction":
        return CoefficientFunction("constant", Polynomial.constant(value), None, domain)

    @staticmethod
    def zero(domain: Domain = None) -> "CoefficientFunction":
        return CoefficientFunction("constant", Polynomial(), None, domain)

    @staticmethod
    def polynomial(coeffs: Iterable[Rational], domain: Domain = None) -> "CoefficientFunction":
        return CoefficientFunction("polynomial", Polynomial(coeffs), None, domain)

    @staticmethod
    def bump(
        support: tuple[Rational, Rational],
        profile: Iterable[Rational],
        domain: Domain = None,
    ) -> "CoefficientFunction":
        """Polynomial profile on [a, b], zero outside."""
        a, b = _frac(support[0]), _frac(support[1])
        pw = _Piecewise((a, b), (Polynomial(profile),)).simplified()
        return CoefficientFunction("bump", Polynomial(), pw, domain)

    @staticmethod
    def piecewise_linear(
        xs: Sequence[Rational], values: Sequence[Rational], domain: Domain = None
    ) -> "CoefficientFunction":
        """Linear interpolation through (xs, values); zero outside the grid."""
        if len(xs) != len(values) or len(xs) < 2:
            raise ValueError("need matching abscissae/values with at least two points")
        breaks = tuple(_frac(x) for x in xs)
        parts = []
        for (x0, x1, v0, v1) in zip(breaks, breaks[1:], values, values[1:]):
            v0, v1 = _frac(v0), _frac(v1)
            slope = (v1 - v0) / (x1 - x0)
            parts.append(Polynomial((v0 - slope * x0, slope)))
        pw = _Piecewise(breaks, tuple(parts)).simplified()
        return CoefficientFunction("piecewise_linear", Polynomial(), pw, domain)

    @staticmethod
    def piecewise_polynomial(
        base: Polynomial, pieces: _Piecewise | None, domain: Domain = None
    ) -> "CoefficientFunction":
        kind = "piecewise_polynomial"
        if pieces is None:
            kind = "constant" if base.degree <= 0 else "polynomial"
        return CoefficientFunction(kind, base, pieces, domain)

    # -- evaluation ---------------------------------------------------

    def __call__(self, x):
        exact = isinstance(x, (int, Fraction))
        if x < -1e-9 or (self.domain is not None and x > self.domain + 1e-9):
            raise DomainViolation(f"x = {x} outside coefficient domain")
        val = self.base(x)
        if self.pieces is not None:
            val = val + self.pieces(x)
        return val if exact else float(val)

    def value_at_zero(self) -> Fraction:
        """Right limit of the representation at the left endpoint."""
        return self.base(Fraction(0)) + (self.pieces(Fraction(0)) if self.pieces else Fraction(0))

    # -- structure ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.base.is_zero and self.pieces is None

    @property
    def on_half_line(self) -> bool:
        return self.domain is None

    @property
    def absolutely_integrable(self) -> bool:
        """L1 membership over the whole domain."""
        if self.domain is not None:
            return True
        return self.base.is_zero

    @property
    def square_integrable(self) -> bool:
        if self.domain is not None:
            return True
        return self.base.is_zero

    def support_end(self) -> Fraction | None:
        """Right end of the support, or None when the base part never dies."""
        if not self.base.is_zero:
            return None if self.domain is None else _frac_or(self.domain)
        if self.pieces is None:
            return Fraction(0)
        return self.pieces.support[1]

    # -- arithmetic -----------------------------------------------------

    def _check_same_domain(self, other: "CoefficientFunction") -> Domain:
        if self.domain != other.domain:
            raise ValueError("coefficient domains differ")
        return self.domain

    def __add__(self, other: "CoefficientFunction") -> "CoefficientFunction":
        dom = self._check_same_domain(other)
        pw = _merge_piecewise(self.pieces, other.pieces, lambda p, q: p + q)
        return CoefficientFunction.piecewise_polynomial(self.base + other.base, pw, dom)

    def __neg__(self) -> "CoefficientFunction":
        pw = self.pieces.map_parts(lambda p: -p) if self.pieces else None
        return CoefficientFunction.piecewise_polynomial(-self.base, pw, self.domain)

    def __sub__(self, other: "CoefficientFunction") -> "CoefficientFunction":
        return self + (-other)

    def __mul__(self, other) -> "CoefficientFunction":
        if not isinstance(other, CoefficientFunction):
            pw = self.pieces.map_parts(lambda p: other * p) if self.pieces else None
            return CoefficientFunction.piecewise_polynomial(other * self.base, pw, self.domain)
        dom = self._check_same_domain(other)
        base = self.base * other.base
        cross1 = self.pieces.map_parts(lambda p: p * other.base) if self.pieces else None
        cross2 = other.pieces.map_parts(lambda p: p * self.base) if other.pieces else None
        quad = _merge_piecewise(self.pieces, other.pieces, lambda p, q: p * q)
        pw = _merge_piecewise(_merge_piecewise(cross1, cross2, lambda p, q: p + q), quad, lambda p, q: p + q)
        return CoefficientFunction.piecewise_polynomial(base, pw, dom)

    __rmul__ = __mul__

    # -- calculus -------------------------------------------------------

    def derivative(self) -> "CoefficientFunction":
        """Piecewise derivative of the representation."""
        pw = self.pieces.map_parts(lambda p: p.derivative()) if self.pieces else None
        if pw is not None:
            pw = pw.simplified()
        return CoefficientFunction.piecewise_polynomial(self.base.derivative(), pw, self.domain)

    def cumulative(self) -> "CoefficientFunction":
        """The running integral from 0, as an exact coefficient function."""
        base_part = self.base.antiderivative()
        if self.pieces is None:
            return CoefficientFunction.piecewise_polynomial(base_part, None, self.domain)
        total = self.pieces.total_integral()
        tail = self._tail_piecewise()
        # integral from 0 of the compact part = total - tail(x)
        neg_tail = tail.map_parts(lambda p: -p) if tail else None
        return CoefficientFunction.piecewise_polynomial(
            base_part + Polynomial.constant(total), neg_tail, self.domain
        )

    def _tail_piecewise(self) -> _Piecewise | None:
        """T(x) = integral of the compact part over [x, support end]."""
        if self.pieces is None:
            return None
        pw = self.pieces
        breaks = list(pw.breaks)
        parts: list[Polynomial] = []
        remaining = Fraction(0)
        # Walk pieces right to left, accumulating the mass to the right.
        for piece, a, b in zip(reversed(pw.parts), reversed(breaks[:-1]), reversed(breaks[1:])):
            prim = piece.antiderivative()
            # T(x) = remaining + prim(b) - prim(x) on [a, b]
            parts.append(Polynomial.constant(remaining + prim(b)) - prim)
            remaining += piece.definite_integral(a, b)
        parts.reverse()
        if breaks[0] > 0:
            # constant plateau between 0 and the start of the support
            breaks.insert(0, Fraction(0))
            parts.insert(0, Polynomial.constant(remaining))
        return _Piecewise(tuple(breaks), tuple(parts)).simplified()

    def tail_integral(self) -> "CoefficientFunction":
        """x -> integral over [x, infinity); exact, half-line kinds only."""
        if self.domain is not None:
            raise NonIntegrableTail("tail integrals require a half-line coefficient")
        if not self.base.is_zero:
            raise NonIntegrableTail("polynomial part is not integrable on the half-line")
        return CoefficientFunction.piecewise_polynomial(Polynomial(), self._tail_piecewise(), None)

    def total_integral(self) -> Fraction:
        """Integral over the whole domain; exact."""
        if self.domain is None:
            if not self.base.is_zero:
                raise NonIntegrableTail("polynomial part is not integrable on the half-line")
            return self.pieces.total_integral() if self.pieces else Fraction(0)
        return self.cumulative()(_frac_or(self.domain))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CoefficientFunction)
            and self.base == other.base
            and self.pieces == other.pieces
            and self.domain == other.domain
        )

    def __hash__(self):
        return hash((self.base, self.pieces, self.domain))


def _frac_or(x) -> Fraction:
    if isinstance(x, (int, Fraction)):
        return _frac(x)
    return Fraction(x).limit_denominator(10**12)


# ---------------------------------------------------------------------------
# Coefficient sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefficientSet:
    """The n-1 coefficients of an expression, paired with its orders."""

    orders: SingularityOrders
    sigma: tuple[CoefficientFunction, ...]

    def __post_init__(self):
        if len(self.sigma) != self.orders.n - 1:
            raise LengthMismatch(
                f"expected {self.orders.n - 1} coefficients, got {len(self.sigma)}"
            )
        doms = {s.domain for s in self.sigma}
        if len(doms) > 1:
            raise ValueError("all coefficients must share one domain")
        for nu in singular_set(self.orders):
            if not self.sigma[nu].square_integrable:
                raise ValueError(
                    f"sigma_{nu} must be square integrable (its order attains the bound)"
                )

    @property
    def n(self) -> int:
        return self.orders.n

    @property
    def domain(self) -> Domain:
        return self.sigma[0].domain

    def support_end(self) -> Fraction | None:
        ends = [s.support_end() for s in self.sigma]
        if any(e is None for e in ends):
            return None
        return max(ends) if ends else Fraction(0)


# ---------------------------------------------------------------------------
# Boundary forms
# ---------------------------------------------------------------------------


def _as_complex_matrix(rows) -> np.ndarray:
    M = np.array(rows, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    return M


@dataclass(frozen=True)
class BoundaryForm:
    """Factored boundary-condition matrix U = P * L.

    ``permutation`` lists p_1, ..., p_n (each a quasi-derivative order in
    0..n-1); the s-th form is y^[p_s](0) plus a combination of lower
    quasi-derivatives encoded in the unit lower-triangular factor.
    """

    permutation: tuple[int, ...]
    lower: np.ndarray = field(compare=False)

    def __post_init__(self):
        self.lower.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.permutation)

    def permutation_matrix(self) -> np.ndarray:
        n = self.n
        P = np.zeros((n, n))
        for k, p in enumerate(self.permutation):
            P[k, p] = 1.0
        return P

    def matrix(self) -> np.ndarray:
        """Assembled dense U = P * L."""
        return self.permutation_matrix() @ self.lower

    def matrix_inverse(self) -> np.ndarray:
        return np.linalg.solve(self.matrix(), np.eye(self.n, dtype=complex))

    def apply(self, y0: np.ndarray) -> np.ndarray:
        """Form values U_s for one state vector or a stack of columns."""
        return self.matrix() @ y0

    def entry(self, k: int, j: int) -> complex:
        """Lower-factor entry l_{k,j} (1-based)."""
        return complex(self.lower[k - 1, j - 1])

    def with_entries(self, updates: dict[tuple[int, int], complex]) -> "BoundaryForm":
        """Copy with replaced lower-factor entries {(k, j): value}, 1-based."""
        L = np.array(self.lower, dtype=complex)
        for (k, j), v in updates.items():
            if not k > j:
                raise NotUnitLowerTriangular("only strictly lower entries are free")
            L[k - 1, j - 1] = v
        return validate_boundary_form(self.permutation, L)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BoundaryForm)
            and self.permutation == other.permutation
            and np.array_equal(self.lower, other.lower)
        )

    def __hash__(self):
        return hash((self.permutation, self.lower.tobytes()))


def validate_boundary_form(permutation: Sequence[int], lower) -> BoundaryForm:
    perm = tuple(int(p) for p in permutation)
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise NotAPermutation(f"{perm} is not a permutation of 0..{n - 1}")
    L = _as_complex_matrix(lower)
    if L.shape != (n, n):
        raise ValueError(f"lower factor must be {n}x{n}")
    if not np.array_equal(np.diag(L), np.ones(n)):
        raise NotUnitLowerTriangular("diagonal entries must equal 1")
    if np.any(np.triu(L, 1) != 0):
        raise NotUnitLowerTriangular("entries above the diagonal must vanish")
    return BoundaryForm(perm, L)


# ---------------------------------------------------------------------------
# Sectors and root ordering
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SectorContext:
    """rho with its sector index and the ordered n-th roots of unity.

    Roots are sorted by ascending Re(rho*omega); exact ties (boundary rays)
    are broken by ascending Im(rho*omega).
    """

    rho: complex
    n: int
    sector_index: int
    roots: tuple[complex, ...]

    def omega(self, k: int) -> complex:
        """k-th ordered root, 1-based."""
        return self.roots[k - 1]


def sector_of(rho: complex, n: int) -> int:
    """Sector index in 1..2n; each sector spans an angle of pi/n.

    Boundary rays are assigned to the sector they open (lower-closed).
    """
    if rho == 0:
        raise ZeroRho("rho must be nonzero")
    ang = math.atan2(rho.imag, rho.real) % (2 * math.pi)
    k = int(ang / (math.pi / n)) + 1
    return min(k, 2 * n)


def order_roots(rho: complex, n: int) -> SectorContext:
    if rho == 0:
        raise ZeroRho("rho must be nonzero")
    roots = [complex(math.cos(2 * math.pi * j / n), math.sin(2 * math.pi * j / n)) for j in range(n)]
    roots.sort(key=lambda w: ((rho * w).real, (rho * w).imag))
    return SectorContext(rho=rho, n=n, sector_index=sector_of(rho, n), roots=tuple(roots))


def principal_rho(lam: complex, n: int) -> complex:
    """Principal n-th root: arg rho in [0, 2*pi/n)."""
    lam = complex(lam)
    if lam == 0:
        raise ZeroRho("lambda must be nonzero")
    r = abs(lam) ** (1.0 / n)
    ang = math.atan2(lam.imag, lam.real) % (2 * math.pi)
    return r * complex(math.cos(ang / n), math.sin(ang / n))


def rho_in_sector(lam: complex, n: int, sector: int) -> complex:
    """The n-th root of lambda lying in the requested sector."""
    base = principal_rho(lam, n)
    for j in range(n):
        cand = base * complex(math.cos(2 * math.pi * j / n), math.sin(2 * math.pi * j / n))
        if sector_of(cand, n) == sector:
            return cand
    raise ValueError(f"no n-th root of {lam} lies in sector {sector}")


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Geometry:
    """Where the boundary value problem lives.

    ``finite`` is the unit interval [0, 1]; ``half_line`` is the half-line
    truncated at ``truncation`` for numerical work.
    """

    kind: str
    truncation: float | None = None

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"


def finite_interval() -> Geometry:
    return Geometry("finite")


def truncated_half_line(X: float) -> Geometry:
    if X <= 0:
        raise ValueError("truncation must be positive")
    return Geometry("half_line", float(X))


# ---------------------------------------------------------------------------
# JSON serialization (complex values as [re, im] pairs, rationals as "p/q")
# ---------------------------------------------------------------------------


def _num_to_json(v: Fraction):
    v = _frac(v)
    if v.denominator == 1:
        return int(v)
    return f"{v.numerator}/{v.denominator}"


def _num_from_json(v) -> Fraction:
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**12)
    raise ValueError(f"cannot parse rational from {v!r}")


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    raise ValueError(f"cannot parse complex from {v!r}")


def orders_to_json(orders: SingularityOrders) -> dict:
    return {"n": orders.n, "orders": list(orders.orders)}


def orders_from_json(data: dict) -> SingularityOrders:
    return validate_orders(int(data["n"]), data["orders"])


def coefficient_to_json(f: CoefficientFunction) -> dict:
    dom = None if f.domain is None else float(f.domain)
    if f.kind == "constant":
        params = {"value": _num_to_json(f.base(Fraction(0)))}
    elif f.kind == "polynomial":
        params = {"coefficients": [_num_to_json(c) for c in f.base.coeffs]}
    elif f.kind == "bump" and f.pieces is not None and len(f.pieces.parts) == 1:
        a, b = f.pieces.support
        params = {
            "support": [_num_to_json(a), _num_to_json(b)],
            "profile": [_num_to_json(c) for c in f.pieces.parts[0].coeffs],
        }
    elif f.kind == "piecewise_linear" and f.pieces is not None:
        xs = list(f.pieces.breaks)
        vals = [p(a) for p, a in zip(f.pieces.parts, xs)] + [f.pieces.parts[-1](xs[-1])]
        params = {
            "xs": [_num_to_json(v) for v in xs],
            "values": [_num_to_json(v) for v in vals],
        }
    else:
        pw = f.pieces
        params = {
            "base": [_num_to_json(c) for c in f.base.coeffs],
            "breakpoints": [] if pw is None else [_num_to_json(b) for b in pw.breaks],
            "parts": []
            if pw is None
            else [[_num_to_json(c) for c in p.coeffs] for p in pw.parts],
        }
        return {"kind": "piecewise_polynomial", "params": params, "domain": dom}
    return {"kind": f.kind, "params": params, "domain": dom}


def coefficient_from_json(data: dict) -> CoefficientFunction:
    kind = data["kind"]
    params = data.get("params", {})
    dom = data.get("domain")
    dom = None if dom is None else float(dom)
    if kind == "constant":
        return CoefficientFunction.constant(_num_from_json(params["value"]), dom)
    if kind == "polynomial":
        return CoefficientFunction.polynomial(
            [_num_from_json(c) for c in params["coefficients"]], dom
        )
    if kind == "bump":
        a, b = (_num_from_json(v) for v in params["support"])
        return CoefficientFunction.bump((a, b), [_num_from_json(c) for c in params["profile"]], dom)
    if kind == "piecewise_linear":
        return CoefficientFunction.piecewise_linear(
            [_num_from_json(v) for v in params["xs"]],
            [_num_from_json(v) for v in params["values"]],
            dom,
        )
    if kind == "piecewise_polynomial":
        base = Polynomial([_num_from_json(c) for c in params["base"]])
        breaks = [_num_from_json(b) for b in params["breakpoints"]]
        parts = [Polynomial([_num_from_json(c) for c in row]) for row in params["parts"]]
        pw = _Piecewise(tuple(breaks), tuple(parts)).simplified() if parts else None
        return CoefficientFunction.piecewise_polynomial(base, pw, dom)
    raise ValueError(f"unknown coefficient kind {kind!r}")


def coefficient_set_to_json(cs: CoefficientSet) -> dict:
    return {
        "n": cs.orders.n,
        "orders": list(cs.orders.orders),
        "sigma": [coefficient_to_json(s) for s in cs.sigma],
    }


def coefficient_set_from_json(data: dict) -> CoefficientSet:
    orders = validate_orders(int(data["n"]), data["orders"])
    sigma = tuple(coefficient_from_json(s) for s in data["sigma"])
    return CoefficientSet(orders, sigma)


def boundary_form_to_json(U: BoundaryForm) -> dict:
    return {
        "permutation": list(U.permutation),
        "lower": [[complex_to_json(v) for v in row] for row in U.lower],
    }


def boundary_form_from_json(data: dict) -> BoundaryForm:
    lower = [[complex_from_json(v) for v in row] for row in data["lower"]]
    return validate_boundary_form(data["permutation"], lower)
