"""Exact arithmetic kernel.

Two value types, both immutable and hashable:

* :class:`Polynomial` -- univariate polynomials over ``fractions.Fraction``,
  used for coefficient functions and for the exact regularization oracle.
* :class:`CoeffExpression` -- polynomials in the formal coefficient symbols
  ``s0, s1, ...`` with rational coefficients, used for the entries of the
  symbolic quadratic-form and associated matrices.

All operations are exact; nothing here touches floating point unless the
caller evaluates at a float/complex argument.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

Rational = Union[int, Fraction]

#: Monomial in the coefficient symbols: sorted tuple of (symbol index, exponent).
Monomial = tuple[tuple[int, int], ...]


def _frac(x: Rational) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class Polynomial:
    """Univariate polynomial with exact rational coefficients, ascending degree.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Rational] = ()):
        cs = [_frac(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls(())

    @classmethod
    def constant(cls, c: Rational) -> "Polynomial":
        return cls((c,))

    @classmethod
    def x(cls) -> "Polynomial":
        return cls((0, 1))

    @classmethod
    def monomial(cls, degree: int, c: Rational = 1) -> "Polynomial":
        return cls((0,) * degree + (c,))

    # -- structure ----------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(("Polynomial", self.coeffs))

    # -- ring operations ----------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return Polynomial(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if self.is_zero or other.is_zero:
                return Polynomial()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a:
                    for j, b in enumerate(other.coeffs):
                        out[i + j] += a * b
            return Polynomial(out)
        return Polynomial(tuple(_frac(other) * c for c in self.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- calculus -----------------------------------------------------

    def derivative(self, times: int = 1) -> "Polynomial":
        p = self
        for _ in range(times):
            p = Polynomial(tuple(i * c for i, c in enumerate(p.coeffs))[1:])
        return p

    def antiderivative(self) -> "Polynomial":
        """Primitive with zero constant term."""
        return Polynomial((Fraction(0),) + tuple(c / (i + 1) for i, c in enumerate(self.coeffs)))

    def definite_integral(self, a: Rational, b: Rational) -> Fraction:
        prim = self.antiderivative()
        return prim(_frac(b)) - prim(_frac(a))

    # -- evaluation ---------------------------------------------------

    def __call__(self, x):
        """Horner evaluation. Exact for int/Fraction arguments."""
        acc = 0 if isinstance(x, (int, Fraction)) else 0.0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def __repr__(self) -> str:
        if self.is_zero:
            return "Polynomial(0)"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}*x^{i}" if i else f"{c}")
        return "Polynomial(" + " + ".join(terms) + ")"


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    exps: dict[int, int] = {}
    for idx, e in a:
        exps[idx] = exps.get(idx, 0) + e
    for idx, e in b:
        exps[idx] = exps.get(idx, 0) + e
    return tuple(sorted(exps.items()))


def _mono_sort_key(mono: Monomial):
    # Descending lexicographic order on the dense exponent vector: the
    # rendering puts s0-heavy terms first and the constant term last.
    if not mono:
        return ()
    top = mono[-1][0]
    dense = [0] * (top + 1)
    for idx, e in mono:
        dense[idx] = e
    return tuple(-e for e in dense)


class CoeffExpression:
    """Polynomial in the coefficient symbols ``s0, s1, ...`` over the rationals.

    Internally a mapping from monomials to nonzero rational coefficients,
    so structural equality coincides with mathematical equality.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, Rational] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, c in terms.items():
                c = _frac(c)
                if c:
                    clean[mono] = c
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):  # pragma: no cover
        raise AttributeError("CoeffExpression is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "CoeffExpression":
        return cls()

    @classmethod
    def constant(cls, c: Rational) -> "CoeffExpression":
        return cls({(): c})

    @classmethod
    def symbol(cls, index: int) -> "CoeffExpression":
        if index < 0:
            raise ValueError("symbol index must be nonnegative")
        return cls({((index, 1),): 1})

    # -- structure ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def symbols(self) -> frozenset[int]:
        return frozenset(idx for mono in self.terms for idx, _ in mono)

    def constant_value(self) -> Fraction:
        """The value if the expression is constant, else raises."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) == {()}:
            return self.terms[()]
        raise ValueError("expression is not constant")

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = CoeffExpression.constant(other)
        return isinstance(other, CoeffExpression) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(("CoeffExpression", tuple(sorted(self.terms.items()))))

    # -- ring operations ----------------------------------------------

    @staticmethod
    def _coerce(other) -> "CoeffExpression":
        if isinstance(other, CoeffExpression):
            return other
        return CoeffExpression.constant(other)

    def __add__(self, other) -> "CoeffExpression":
        other = self._coerce(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return CoeffExpression(out)

    __radd__ = __add__

    def __neg__(self) -> "CoeffExpression":
        return CoeffExpression({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "CoeffExpression":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "CoeffExpression":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "CoeffExpression":
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return CoeffExpression(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "CoeffExpression":
        if k < 0:
            raise ValueError("negative power")
        out = CoeffExpression.constant(1)
        for _ in range(k):
            out = out * self
        return out

    # -- substitution and evaluation ------------------------------------

    def substitute(self, assignment: Mapping[int, Polynomial]) -> Polynomial:
        """Map every symbol to a univariate Polynomial; exact result."""
        out = Polynomial()
        for mono, c in self.terms.items():
            term = Polynomial.constant(c)
            for idx, e in mono:
                if idx not in assignment:
                    raise KeyError(f"no polynomial assigned to symbol s{idx}")
                term = term * (assignment[idx] ** e)
            out = out + term
        return out

    def set_symbols(self, assignment: Mapping[int, Rational]) -> "CoeffExpression":
        """Partially substitute exact constants for some symbols."""
        out = CoeffExpression.zero()
        for mono, c in self.terms.items():
            coeff = _frac(c)
            rest = []
            for idx, e in mono:
                if idx in assignment:
                    coeff *= _frac(assignment[idx]) ** e
                else:
                    rest.append((idx, e))
            out = out + CoeffExpression({tuple(rest): coeff})
        return out

    def evaluate(self, assignment: Mapping[int, complex]) -> complex:
        """Numeric evaluation; symbols missing from the assignment raise."""
        total = 0
        for mono, c in self.terms.items():
            v = c
            for idx, e in mono:
                v = v * assignment[idx] ** e
            total = total + v
        return total

    # -- rendering ------------------------------------------------------

    @staticmethod
    def _render_mono(mono: Monomial) -> str:
        return "*".join(f"s{i}^{e}" if e > 1 else f"s{i}" for i, e in mono)

    def render(self) -> str:
        """Canonical string, e.g. ``"0"``, ``"-s0^2"``, ``"2*s0 - s2^2"``."""
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda kv: _mono_sort_key(kv[0]))
        parts: list[str] = []
        for pos, (mono, c) in enumerate(items):
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = self._render_mono(mono)
            else:
                body = f"{mag}*{self._render_mono(mono)}"
            if pos == 0:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append((" + " if c > 0 else " - ") + body)
        return "".join(parts)

    def render_latex(self, symbol: str = "\\sigma") -> str:
        """LaTeX rendering with subscripted symbols."""
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda kv: _mono_sort_key(kv[0]))
        parts: list[str] = []
        for pos, (mono, c) in enumerate(items):
            mag = abs(c)
            body = " ".join(
                f"{symbol}_{{{i}}}^{{{e}}}" if e > 1 else f"{symbol}_{{{i}}}" for i, e in mono
            )
            if not mono:
                body = str(mag)
            elif mag != 1:
                body = f"{mag} {body}"
            if pos == 0:
                parts.append(body if c > 0 else "-" + body)
            else:
                parts.append((" + " if c > 0 else " - ") + body)
        return "".join(parts)

    __str__ = render

    def __repr__(self) -> str:
        return f"CoeffExpression({self.render()})"


def sigma(index: int) -> CoeffExpression:
    """Shorthand for the coefficient symbol ``s<index>``."""
    return CoeffExpression.symbol(index)
