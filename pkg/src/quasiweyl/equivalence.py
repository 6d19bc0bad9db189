"""Order-shifting correspondences between equivalent problems.

Raising a singularity order by one trades a coefficient for its exact tail
integral (half-line) or running integral (finite interval) and shifts a few
entries of the left boundary factor; lowering is the inverse. The
correspondences below cover the second-order case and the three published

fourth-order cases (with sigma_1 = 0):

* case1: (i0, 0) <-> (i0, 1) with i0 = 0, transforming sigma_2;
* case2: (0, 1)  <-> (1, 1), transforming sigma_0;
* case3: (1, 0)  <-> (2, 0), transforming sigma_0 (continuous at zero).

All coefficient transforms are exact on the piecewise-polynomial kinds, so
raise/lower round-trips reproduce the input bit for bit. The reports at the
bottom measure the numerical face of the equivalences: identical Weyl
matrices across a spectral grid, and the independence of the Weyl solutions
from the unused right-end coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import (
    BoundaryForm,
    CoefficientFunction,
    CoefficientSet,
    Geometry,
    NonIntegrableTail,
    SingularityOrders,
    boundary_form_from_json,
    boundary_form_to_json,
    coefficient_set_from_json,
    coefficient_set_to_json,
    finite_interval,
    truncated_half_line,
    validate_orders,
)
from .spectral import (
    SampledSystem,
    WeylSample,
    finite_weyl_coefficients,
    resolve_system,
    sample_system,
    weyl_matrix_finite,
    weyl_matrix_halfline,
)

__all__ = [
    "InvalidCase",
    "ContinuityAtZeroRequired",
    "Problem",
    "KnownBoundaryData",
    "RAISE",
    "LOWER",
    "N4_CASES",
    "shift_order_n2",
    "finite_shift_n2",
    "shift_order_n4",
    "finite_shift_n4",
    "required_knowns",
    "boundary_knowns",
    "InvarianceReport",
    "weyl_invariance_report",
    "VEquivalenceReport",
    "v_equivalence_report",
    "problem_to_json",
    "problem_from_json",
]


class InvalidCase(ValueError):
    pass


class ContinuityAtZeroRequired(ValueError):
    pass


RAISE = "raise"
LOWER = "lower"

#: case name -> ((i0, i2) at the low-order end, (i0, i2) at the high-order end,
#:               index of the transformed coefficient)
N4_CASES = {
    "case1": ((0, 0), (0, 1), 2),
    "case2": ((0, 1), (1, 1), 0),
    "case3": ((1, 0), (2, 0), 0),
}


@dataclass(frozen=True)
class Problem:
    """A boundary value problem: coefficients, boundary forms, geometry."""

    coeffs: CoefficientSet
    U: BoundaryForm
    V: BoundaryForm | None
    geometry: Geometry

    def __post_init__(self):
        if self.geometry.is_finite and self.V is None:
            raise ValueError("finite-interval problems need a right boundary form V")
        if not self.geometry.is_finite and self.V is not None:
            raise ValueError("half-line problems carry no right boundary form")
        if self.U.n != self.coeffs.n:
            raise ValueError("boundary form size does not match the expression order")

    @property
    def n(self) -> int:
        return self.coeffs.n


@dataclass(frozen=True)
class KnownBoundaryData:
    """The boundary-factor combinations that must be known a priori, one
    vector per coefficient position (possibly empty)."""

    vectors: tuple[tuple[complex, ...], ...]

    def lengths(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.vectors)


def _real_fraction(z, what: str) -> Fraction:
    z = complex(z)
    if z.imag != 0:
        raise InvalidCase(f"{what} must be real for an exact coefficient transform")
    return Fraction(z.real)


# ---------------------------------------------------------------------------
# Second order
# ---------------------------------------------------------------------------


def shift_order_n2(
    sigma0: CoefficientFunction, h: complex, direction: str
) -> tuple[CoefficientFunction, complex]:
    """Half-line correspondence between order 0 and order 1 problems.

    Raising returns (tail integral of sigma0, h + total integral); lowering
    returns (-sigma0', h - sigma0(0)).
    """
    if direction == RAISE:
        total = sigma0.total_integral()
        return sigma0.tail_integral(), h + complex(total)
    if direction == LOWER:
        return -sigma0.derivative(), h - complex(sigma0.value_at_zero())
    raise ValueError(f"unknown direction {direction!r}")


def finite_shift_n2(
    problem: Problem, direction: str, free_parameter: complex | None = None
) -> Problem:
    """Finite-interval variant; raising needs the free target value of h."""
    if problem.geometry.kind != "finite":
        raise InvalidCase("finite_shift_n2 needs a finite-interval problem")
    if problem.n != 2:
        raise InvalidCase("finite_shift_n2 applies to second-order problems")
    orders = problem.coeffs.orders.orders
    sigma0 = problem.coeffs.sigma[0]
    h = problem.U.entry(2, 1)
    H = problem.V.entry(2, 1)
    if direction == RAISE:
        if orders[0] != 0:
            raise InvalidCase("raising needs a source with order 0")
        if free_parameter is None:
            raise InvalidCase("raising on a finite interval needs the free target h")
        h_new = free_parameter
        shift = _real_fraction(h_new, "h") - _real_fraction(h, "h")
        new_sigma = CoefficientFunction.constant(shift, sigma0.domain) - sigma0.cumulative()
        H_new = H + complex(new_sigma(Fraction(1)))
        new_orders = (1,)
    elif direction == LOWER:
        if orders[0] != 1:
            raise InvalidCase("lowering needs a source with order 1")
        new_sigma = -sigma0.derivative()
        h_new = h - complex(sigma0.value_at_zero())
        H_new = H - complex(sigma0(Fraction(1)))
        new_orders = (0,)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    coeffs = CoefficientSet(validate_orders(2, new_orders), (new_sigma,))
    return Problem(
        coeffs=coeffs,
        U=problem.U.with_entries({(2, 1): h_new}),
        V=problem.V.with_entries({(2, 1): H_new}),
        geometry=problem.geometry,
    )


# ---------------------------------------------------------------------------
# Fourth order (sigma_1 = 0)
# ---------------------------------------------------------------------------


def _n4_guard(problem: Problem, case: str, direction: str) -> tuple[int, int]:
    if problem.n != 4:
        raise InvalidCase("the published cases are fourth order")
    if case not in N4_CASES:
        raise InvalidCase(f"unknown case {case!r}")
    if direction not in (RAISE, LOWER):
        raise ValueError(f"unknown direction {direction!r}")
    if not problem.coeffs.sigma[1].is_zero:
        raise InvalidCase("the published cases assume sigma_1 = 0")
    low, high, _ = N4_CASES[case]
    i0, _, i2 = problem.coeffs.orders.orders
    expected = low if direction == RAISE else high
    if (i0, i2) != expected:
        raise InvalidCase(
            f"{case} {direction} expects orders (i0, i2) = {expected}, got {(i0, i2)}"
        )
    return (i0, i2)


def _n4_rebuild(problem: Problem, case: str, direction: str, new_sigma, updates) -> Problem:
    low, high, moved = N4_CASES[case]
    i0, i2 = high if direction == RAISE else low
    i1 = problem.coeffs.orders.orders[1]
    sigma = list(problem.coeffs.sigma)
    sigma[moved] = new_sigma
    coeffs = CoefficientSet(validate_orders(4, (i0, i1, i2)), tuple(sigma))
    return Problem(
        coeffs=coeffs,
        U=problem.U.with_entries(updates),
        V=problem.V,
        geometry=problem.geometry,
    )


def shift_order_n4(problem: Problem, case: str, direction: str) -> Problem:
    """Half-line fourth-order correspondences between neighbouring orders."""
    if problem.geometry.kind != "half_line":
        raise InvalidCase("shift_order_n4 needs a half-line problem")
    _n4_guard(problem, case, direction)
    U = problem.U
    l = U.entry
    if case == "case1":
        sigma2 = problem.coeffs.sigma[2]
        if direction == RAISE:
            T = complex(sigma2.total_integral())
            new_sigma = sigma2.tail_integral()
            updates = {(3, 2): l(3, 2) - T, (4, 2): l(4, 2) - l(4, 3) * T}
        else:
            T = complex(sigma2.value_at_zero())
            new_sigma = -sigma2.derivative()
            updates = {(3, 2): l(3, 2) + T, (4, 2): l(4, 2) + l(4, 3) * T}
    elif case == "case2":
        sigma0 = problem.coeffs.sigma[0]
        if direction == RAISE:
            T = complex(sigma0.total_integral())
            new_sigma = sigma0.tail_integral()
            updates = {(4, 1): l(4, 1) + T}
        else:
            T = complex(sigma0.value_at_zero())
            new_sigma = -sigma0.derivative()
            updates = {(4, 1): l(4, 1) - T}
    else:  # case3
        sigma0 = problem.coeffs.sigma[0]
        if direction == RAISE:
            s0_at_zero = complex(sigma0.value_at_zero())
            T = complex(sigma0.total_integral())
            new_sigma = sigma0.tail_integral()
            updates = {
                (3, 1): l(3, 1) - T,
                (4, 2): l(4, 2) + 2 * T,
                (4, 1): l(4, 1) - s0_at_zero - l(4, 3) * T,
            }
        else:
            T = complex(sigma0.value_at_zero())
            new_sigma = -sigma0.derivative()
            s0_at_zero = complex(new_sigma.value_at_zero())
            updates = {
                (3, 1): l(3, 1) + T,
                (4, 2): l(4, 2) - 2 * T,
                (4, 1): l(4, 3) * T + l(4, 1) + s0_at_zero,
            }
    return _n4_rebuild(problem, case, direction, new_sigma, updates)


def finite_shift_n4(
    problem: Problem, case: str, direction: str, free_parameter: complex | None = None
) -> Problem:
    """Finite-interval fourth-order correspondences.

    Raising fixes the free target entry (l~_{3,2}, l~_{4,1} or l~_{3,1}
    depending on the case); the transformed coefficient becomes an exact
    running integral. The right boundary factor is copied: with the reversal
    permutation the Weyl solutions never see its free entries.
    """
    if problem.geometry.kind != "finite":
        raise InvalidCase("finite_shift_n4 needs a finite-interval problem")
    _n4_guard(problem, case, direction)
    U = problem.U
    l = U.entry

    def running(source: CoefficientFunction, jump: complex) -> CoefficientFunction:
        shift = _real_fraction(jump, "the boundary-entry difference")
        return CoefficientFunction.constant(shift, source.domain) - source.cumulative()

    if case == "case1":
        sigma2 = problem.coeffs.sigma[2]
        if direction == RAISE:
            if free_parameter is None:
                raise InvalidCase("raising needs the free target entry l~_{3,2}")
            T = l(3, 2) - free_parameter
            new_sigma = running(sigma2, T)
            updates = {(3, 2): free_parameter, (4, 2): l(4, 2) - l(4, 3) * T}
        else:
            T = complex(sigma2.value_at_zero())
            new_sigma = -sigma2.derivative()
            updates = {(3, 2): l(3, 2) + T, (4, 2): l(4, 2) + l(4, 3) * T}
    elif case == "case2":
        sigma0 = problem.coeffs.sigma[0]
        if direction == RAISE:
            if free_parameter is None:
                raise InvalidCase("raising needs the free target entry l~_{4,1}")
            T = free_parameter - l(4, 1)
            new_sigma = running(sigma0, T)
            updates = {(4, 1): free_parameter}
        else:
            T = complex(sigma0.value_at_zero())
            new_sigma = -sigma0.derivative()
            updates = {(4, 1): l(4, 1) - T}
    else:  # case3
        sigma0 = problem.coeffs.sigma[0]
        if direction == RAISE:
            if free_parameter is None:
                raise InvalidCase("raising needs the free target entry l~_{3,1}")
            s0_at_zero = complex(sigma0.value_at_zero())
            T = l(3, 1) - free_parameter
            new_sigma = running(sigma0, T)
            updates = {
                (3, 1): free_parameter,
                (4, 2): l(4, 2) + 2 * T,
                (4, 1): l(4, 1) - s0_at_zero - l(4, 3) * T,
            }
        else:
            T = complex(sigma0.value_at_zero())
            new_sigma = -sigma0.derivative()
            s0_at_zero = complex(new_sigma.value_at_zero())
            updates = {
                (3, 1): l(3, 1) + T,
                (4, 2): l(4, 2) - 2 * T,
                (4, 1): l(4, 3) * T + l(4, 1) + s0_at_zero,
            }
    return _n4_rebuild(problem, case, direction, new_sigma, updates)


# ---------------------------------------------------------------------------
# Required boundary knowledge
# ---------------------------------------------------------------------------

_REQUIRED_N4 = {
    (0, 0): (),
    (1, 0): ((4, 1),),
    (2, 0): ((3, 1), (4, 1)),
    (0, 1): ((3, 2),),
    (1, 1): ((3, 2), (4, 1)),
    (2, 1): ((3, 1), (3, 2), (4, 1)),
}


def required_knowns(i0: int, i2: int) -> tuple[tuple[int, int], ...]:
    """Boundary-factor entries (k, j) needed for the fourth-order recovery."""
    try:
        return _REQUIRED_N4[(int(i0), int(i2))]
    except KeyError:
        raise InvalidCase(f"(i0, i2) = {(i0, i2)} is not a fourth-order case") from None


def boundary_knowns(U: BoundaryForm, orders: SingularityOrders) -> KnownBoundaryData:
    """The a-priori-known combinations of lower-factor entries.

    Position 2k contributes sums l_{n-s,k+1} + l_{n-k,s+1} over
    s = k .. k+i_{2k}-1; position 2k+1 contributes the differences over
    s = k+1 .. k+i_{2k+1}. Vectors are empty in the regular case.
    """
    n, m, tau = orders.n, orders.m, orders.tau
    vectors: list[tuple[complex, ...]] = []
    for nu in range(n - 1):
        k, odd = divmod(nu, 2)
        i = orders.orders[nu]
        if not odd:
            vec = tuple(
                U.entry(n - s, k + 1) + U.entry(n - k, s + 1) for s in range(k, k + i)
            )
        else:
            vec = tuple(
                U.entry(n - s, k + 1) - U.entry(n - k, s + 1)
                for s in range(k + 1, k + i + 1)
            )
        vectors.append(vec)
    return KnownBoundaryData(tuple(vectors))


# ---------------------------------------------------------------------------
# Numerical equivalence reports
# ---------------------------------------------------------------------------


@dataclass
class InvarianceReport:
    """Entrywise Weyl-matrix agreement between two problems over a grid."""

    lambdas: tuple[complex, ...]
    deviations: tuple[float, ...]
    max_deviation: float
    flags: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "per_lambda": [
                {"lambda": [l.real, l.imag], "deviation": d}
                for l, d in zip(self.lambdas, self.deviations)
            ],
            "flags": list(self.flags),
        }


def _solve_weyl(
    problem: Problem,
    lam: complex,
    steps: int,
    rho: complex | None,
    sampled: SampledSystem | None,
    sampled_backward: SampledSystem | None,
) -> WeylSample:
    if problem.geometry.is_finite:
        return weyl_matrix_finite(
            problem.coeffs, lam, problem.U, problem.V, steps, sampled=sampled,
            raise_on_pole=False,
        )
    X = problem.geometry.truncation
    if X is None:
        raise ValueError("half-line problems need a truncation point")
    return weyl_matrix_halfline(
        problem.coeffs, lam, problem.U, X, steps, rho=rho,
        sampled_backward=sampled_backward, raise_on_pole=False,
    )


def _sampled_grids(problem: Problem, steps: int):
    f_eval, n = resolve_system(problem.coeffs)
    if problem.geometry.is_finite:
        return sample_system(f_eval, n, 0.0, 1.0, steps), None
    X = problem.geometry.truncation
    return None, sample_system(f_eval, n, X, 0.0, steps)


def weyl_invariance_report(
    problem_a: Problem,
    problem_b: Problem,
    lambda_grid: Sequence[complex],
    steps: int = 4000,
    rhos: Sequence[complex] | None = None,
) -> InvarianceReport:
    """Max entrywise |M_a - M_b| over the grid; the numerical face of the
    order-shifting equivalences."""
    if problem_a.geometry.kind != problem_b.geometry.kind:
        raise ValueError("problems live on different geometries")
    sam_a, back_a = _sampled_grids(problem_a, steps)
    sam_b, back_b = _sampled_grids(problem_b, steps)
    deviations = []
    flags: set[str] = set()
    for idx, lam in enumerate(lambda_grid):
        rho = rhos[idx] if rhos is not None else None
        wa = _solve_weyl(problem_a, lam, steps, rho, sam_a, back_a)
        wb = _solve_weyl(problem_b, lam, steps, rho, sam_b, back_b)
        flags.update(wa.flags)
        flags.update(wb.flags)
        deviations.append(float(np.max(np.abs(wa.M - wb.M))))
    return InvarianceReport(
        lambdas=tuple(complex(l) for l in lambda_grid),
        deviations=tuple(deviations),
        max_deviation=max(deviations) if deviations else 0.0,
        flags=tuple(sorted(flags)),
    )


@dataclass
class VEquivalenceReport:
    """Deviation of the Weyl solutions under a change of the right factor."""

    max_deviation: float
    equivalent: bool
    shares_permutation: bool
    lambdas: tuple[complex, ...]
    deviations: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "equivalent": self.equivalent,
            "shares_permutation": self.shares_permutation,
        }


def v_equivalence_report(
    coeffs: CoefficientSet,
    U: BoundaryForm,
    V: BoundaryForm,
    V_alt: BoundaryForm,
    lambda_grid: Sequence[complex],
    steps: int = 2000,
    x_samples: int = 5,
    tolerance: float = 1e-8,
) -> VEquivalenceReport:
    """Compare the Weyl solution vectors for two right boundary factors.

    Solutions are sampled on a sub-grid of the integration mesh; the two
    factors are declared equivalent when the largest deviation stays below
    the tolerance.
    """
    f_eval, n = resolve_system(coeffs)
    sampled = sample_system(f_eval, n, 0.0, 1.0, steps)
    idxs = np.linspace(0, steps, x_samples).astype(int)
    deviations = []
    for lam in lambda_grid:
        E_a, C, _ = finite_weyl_coefficients(f_eval, lam, U, V, steps, sampled=sampled)
        E_b, _, _ = finite_weyl_coefficients(f_eval, lam, U, V_alt, steps, sampled=sampled)
        dev = 0.0
        for i in idxs:
            dev = max(dev, float(np.max(np.abs(C.values[i] @ (E_a - E_b)))))
        deviations.append(dev)
    max_dev = max(deviations) if deviations else 0.0
    return VEquivalenceReport(
        max_deviation=max_dev,
        equivalent=max_dev <= tolerance,
        shares_permutation=V.permutation == V_alt.permutation,
        lambdas=tuple(complex(l) for l in lambda_grid),
        deviations=tuple(deviations),
    )


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------


def geometry_to_json(g: Geometry) -> dict:
    out = {"kind": g.kind}
    if g.truncation is not None:
        out["X"] = g.truncation
    return out


def geometry_from_json(data: dict) -> Geometry:
    if data["kind"] == "finite":
        return finite_interval()
    if data["kind"] == "half_line":
        return truncated_half_line(float(data.get("X", 30.0)))
    raise ValueError(f"unknown geometry kind {data['kind']!r}")


def problem_to_json(problem: Problem) -> dict:
    out = {
        "coefficients": coefficient_set_to_json(problem.coeffs),
        "U": boundary_form_to_json(problem.U),
        "geometry": geometry_to_json(problem.geometry),
    }
    if problem.V is not None:
        out["V"] = boundary_form_to_json(problem.V)
    return out


def problem_from_json(data: dict) -> Problem:
    return Problem(
        coeffs=coefficient_set_from_json(data["coefficients"]),
        U=boundary_form_from_json(data["U"]),
        V=boundary_form_from_json(data["V"]) if "V" in data and data["V"] is not None else None,
        geometry=geometry_from_json(data["geometry"]),
    )
