"""Quasi-derivative chains and the exact regularization oracle.

For polynomial coefficients everything here stays in exact rational
arithmetic: the quasi-derivative chain

    y[0] = y,    y[k] = (y[k-1])' - sum_{j<=k} f_{k,j} y[j-1]

is computed with polynomial entries f_{k,j}, and the classical expansion of
the differential expression is computed term by term with Leibniz
differentiation. Their difference is the residual polynomial, identically
zero when the associated matrix is correct.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import CoefficientFunction, CoefficientSet, SingularityOrders, order_bound, validate_orders
from .regularize import AssociatedMatrix, quadratic_form, associated_matrix
from .symbolic import Polynomial

__all__ = [
    "NonPolynomialCoefficient",
    "QuasiChain",
    "polynomial_sigma",
    "quasi_derivatives",
    "apply_classical",
    "regularization_residual",
    "system_matrix",
    "random_residual_case",
]


class NonPolynomialCoefficient(TypeError):
    """The exact oracle needs purely polynomial coefficients."""


@dataclass(frozen=True)
class QuasiChain:
    """y together with its quasi-derivatives y[0..n], all exact polynomials."""

    y: Polynomial
    quasi: tuple[Polynomial, ...]

    @property
    def n(self) -> int:
        return len(self.quasi) - 1


def polynomial_sigma(coeffs: CoefficientSet) -> dict[int, Polynomial]:
    """Extract the coefficients as global polynomials, or fail."""
    out: dict[int, Polynomial] = {}
    for nu, s in enumerate(coeffs.sigma):
        if s.pieces is not None:
            raise NonPolynomialCoefficient(
                f"sigma_{nu} has a piecewise part; the exact oracle needs polynomials"
            )
        out[nu] = s.base
    return out


def quasi_derivatives(
    f_polys: Sequence[Sequence[Polynomial]], y: Polynomial
) -> QuasiChain:
    """Run the chain with a polynomial associated matrix."""
    n = len(f_polys)
    chain = [y]
    for k in range(1, n + 1):
        nxt = chain[k - 1].derivative()
        for j in range(1, k + 1):
            f_kj = f_polys[k - 1][j - 1]
            if not f_kj.is_zero:
                nxt = nxt - f_kj * chain[j - 1]
        chain.append(nxt)
    return QuasiChain(y=y, quasi=tuple(chain))


def quasi_chain(coeffs: CoefficientSet, y: Polynomial, F: AssociatedMatrix | None = None) -> QuasiChain:
    """Quasi-derivative chain for a polynomial coefficient set."""
    assignment = polynomial_sigma(coeffs)
    if F is None:
        F = associated_matrix(quadratic_form(coeffs.orders))
    return quasi_derivatives(F.substitute(assignment), y)


def apply_classical(coeffs: CoefficientSet, y: Polynomial) -> Polynomial:
    """Expand the differential expression classically, term by term.

    With smooth (here: polynomial) coefficients the distributional
    derivatives are ordinary ones, so every term

        (-1)^(i_{2k}+k)   (sigma_{2k}^(i_{2k}) y^(k))^(k)
        (-1)^(i_{2k+1}+k+1) [(sigma^(i) y^(k))^(k+1) + (sigma^(i) y^(k+1))^(k)]

    is a finite polynomial computation.
    """
    assignment = polynomial_sigma(coeffs)
    orders = coeffs.orders
    m, tau = orders.m, orders.tau
    n = orders.n
    total = y.derivative(n)
    for k in range(0, m):
        nu = 2 * k
        i = orders.orders[nu]
        s_der = assignment[nu].derivative(i)
        term = (s_der * y.derivative(k)).derivative(k)
        total = total + (-1) ** (i + k) * term
    for k in range(0, m + tau - 1):
        nu = 2 * k + 1
        i = orders.orders[nu]
        s_der = assignment[nu].derivative(i)
        term = (s_der * y.derivative(k)).derivative(k + 1) + (
            s_der * y.derivative(k + 1)
        ).derivative(k)
        total = total + (-1) ** (i + k + 1) * term
    return total


def regularization_residual(coeffs: CoefficientSet, y: Polynomial) -> Polynomial:
    """classical expression minus the top quasi-derivative; exactly zero
    whenever the associated matrix construction is correct."""
    chain = quasi_chain(coeffs, y)
    return apply_classical(coeffs, y) - chain.quasi[-1]


def system_matrix(f_eval, lam: complex, x: float) -> np.ndarray:
    """F(x) plus the spectral parameter in the bottom-left corner."""
    A = np.array(f_eval(x), dtype=complex)
    A[-1, 0] += lam
    return A


# ---------------------------------------------------------------------------
# Randomized oracle cases (shared by the test suite and the CLI)
# ---------------------------------------------------------------------------


def _random_polynomial(rng: random.Random, max_degree: int) -> Polynomial:
    deg = rng.randint(0, max_degree)
    coeffs = []
    for _ in range(deg + 1):
        num = rng.randint(-9, 9)
        den = rng.choice((1, 1, 1, 2, 3))
        coeffs.append(Fraction(num, den))
    if all(c == 0 for c in coeffs):
        coeffs[-1] = Fraction(1)
    return Polynomial(coeffs)


def random_residual_case(
    rng: random.Random, n: int, max_degree: int = 6
) -> tuple[CoefficientSet, Polynomial]:
    """Random admissible orders, random rational sigma, random y."""
    orders = validate_orders(
        n, [rng.randint(0, order_bound(n, nu)) for nu in range(n - 1)]
    )
    sigma = tuple(
        CoefficientFunction.polynomial(_random_polynomial(rng, max_degree).coeffs, domain=1.0)
        for _ in range(n - 1)
    )
    coeffs = CoefficientSet(orders, sigma)
    y = _random_polynomial(rng, max_degree)
    return coeffs, y
