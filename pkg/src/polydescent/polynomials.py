"""Exact sparse multivariate polynomials over the rationals.

A polynomial is a map from monomials to nonzero ``Fraction`` coefficients,
relative to a fixed ordering of the variables.  All symbolic work (arithmetic,
differentiation, the main-variable decomposition) stays exact; floating point
enters only in :meth:`Polynomial.evaluate`.

The canonical form stores no zero coefficients and no zero exponents, so two
polynomials are equal exactly when their term maps are equal, and the printed
form round-trips through :func:`parse_polynomial`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class ParseError(ValueError):
    """Malformed polynomial text; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownVariableError(ParseError):
    """An identifier in the text is not part of the variable order."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown variable '{name}'", offset)
        self.name = name


class InvalidExponentError(ParseError):
    """The token after '^' is not a nonnegative integer literal."""


class ConstantPolynomialError(ValueError):
    """Raised by operations that require a non-constant polynomial."""


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class VariableOrder:
    """An ordered tuple of distinct variable names; position = rank.

    The leftmost name is the smallest variable.  Orders are immutable and
    shared by every polynomial built over them.
    """

    __slots__ = ("names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if not names:
            raise ValueError("variable order must be nonempty")
        if len(set(names)) != len(names):
            raise ValueError("variable order contains duplicate names")
        for n in names:
            if not _NAME_RE.match(n):
                raise ValueError(f"invalid variable name '{n}'")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def index(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __getitem__(self, i: int) -> str:
        return self.names[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, VariableOrder) and self.names == other.names

    def __hash__(self) -> int:
        return hash(self.names)

    def __repr__(self) -> str:
        return f"VariableOrder({', '.join(self.names)})"


@dataclass(frozen=True)
class Monomial:
    """A product of variables with positive integer exponents.

    ``exps`` holds ``(variable index, exponent)`` pairs sorted by index;
    exponent zero is never stored, and the empty tuple is the monomial 1.
    """

    exps: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        idxs = [i for i, _ in self.exps]
        if idxs != sorted(set(idxs)):
            raise ValueError("monomial indices must be sorted and distinct")
        if any(e <= 0 for _, e in self.exps):
            raise ValueError("monomial exponents must be positive")

    @classmethod
    def of(cls, exponents: Mapping[int, int]) -> Monomial:
        return cls(tuple(sorted((i, e) for i, e in exponents.items() if e != 0)))

    def degree_of(self, var: int) -> int:
        for i, e in self.exps:
            if i == var:
                return e
        return 0

    @property
    def total_degree(self) -> int:
        return sum(e for _, e in self.exps)

    def variables(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.exps)

    def __mul__(self, other: Monomial) -> Monomial:
        merged = dict(self.exps)
        for i, e in other.exps:
            merged[i] = merged.get(i, 0) + e
        return Monomial.of(merged)

    def without(self, var: int) -> Monomial:
        return Monomial(tuple((i, e) for i, e in self.exps if i != var))


class Polynomial:
    """Immutable sparse polynomial with ``Fraction`` coefficients.

    Arithmetic (`+`, `-`, `*`, unary `-`) is exact.  Construction drops zero
    coefficients, so the zero polynomial has an empty term map.
    """

    __slots__ = ("terms", "order")

    def __init__(self, order: VariableOrder, terms: Mapping[Monomial, Fraction]):
        self.order = order
        self.terms = {m: c for m, c in terms.items() if c != 0}

    @classmethod
    def zero(cls, order: VariableOrder) -> Polynomial:
        return cls(order, {})

    @classmethod
    def constant(cls, order: VariableOrder, value) -> Polynomial:
        return cls(order, {Monomial(): Fraction(value)})

    @classmethod
    def variable(cls, order: VariableOrder, var: int) -> Polynomial:
        return cls(order, {Monomial(((var, 1),)): Fraction(1)})

    # -- structure --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(m == Monomial() for m in self.terms)

    def constant_value(self) -> Fraction:
        return self.terms.get(Monomial(), Fraction(0))

    def variables(self) -> frozenset[int]:
        out: set[int] = set()
        for m in self.terms:
            out |= m.variables()
        return frozenset(out)

    def degree_in(self, var: int) -> int:
        return max((m.degree_of(var) for m in self.terms), default=0)

    def main_variable(self) -> int | None:
        """Greatest-ranked variable with positive degree, or None for constants."""
        vs = self.variables()
        return max(vs) if vs else None

    def decompose(self) -> tuple[Polynomial, int, Monomial, Polynomial, Polynomial]:
        """Split off the top power of the main variable.

        Returns ``(initial, main_degree, rank, tail, head)`` with
        ``self == initial * rank + tail`` exactly, where ``rank`` is the
        main variable raised to its degree, ``initial`` is free of the main
        variable, and ``head = initial * rank``.
        """
        v = self.main_variable()
        if v is None:
            raise ConstantPolynomialError("cannot decompose a constant polynomial")
        d = self.degree_in(v)
        init_terms: dict[Monomial, Fraction] = {}
        tail_terms: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            if m.degree_of(v) == d:
                init_terms[m.without(v)] = c
            else:
                tail_terms[m] = c
        initial = Polynomial(self.order, init_terms)
        tail = Polynomial(self.order, tail_terms)
        rank = Monomial(((v, d),))
        head = initial * Polynomial(self.order, {rank: Fraction(1)})
        return initial, d, rank, tail, head

    # -- arithmetic -------------------------------------------------------

    def _check_order(self, other: Polynomial):
        if self.order != other.order:
            raise ValueError("polynomials use different variable orders")

    def __add__(self, other: Polynomial) -> Polynomial:
        self._check_order(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(self.order, out)

    def __sub__(self, other: Polynomial) -> Polynomial:
        self._check_order(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) - c
        return Polynomial(self.order, out)

    def __neg__(self) -> Polynomial:
        return Polynomial(self.order, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other: Polynomial) -> Polynomial:
        self._check_order(other)
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = ma * mb
                out[m] = out.get(m, Fraction(0)) + ca * cb
        return Polynomial(self.order, out)

    def scale(self, factor) -> Polynomial:
        f = Fraction(factor)
        return Polynomial(self.order, {m: c * f for m, c in self.terms.items()})

    # -- calculus ---------------------------------------------------------

    def derivative(self, var: int) -> Polynomial:
        """Exact partial derivative with respect to the variable at ``var``."""
        if not 0 <= var < len(self.order):
            raise ValueError(f"variable index {var} out of range")
        out: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            e = m.degree_of(var)
            if e == 0:
                continue
            lowered = dict(m.exps)
            if e == 1:
                del lowered[var]
            else:
                lowered[var] = e - 1
            mm = Monomial.of(lowered)
            out[mm] = out.get(mm, Fraction(0)) + c * e
        return Polynomial(self.order, out)

    def evaluate(self, point: Sequence[float]) -> float:
        """Floating-point value at ``point`` (one value per variable, in order).

        Terms are evaluated independently and summed; overflow propagates as
        IEEE infinities for the caller to handle.
        """
        if len(point) != len(self.order):
            raise ValueError("point length does not match variable order")
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for i, e in m.exps:
                v *= point[i] ** e
            total += v
        return total

    # -- canonical text ---------------------------------------------------

    def _sort_key(self, m: Monomial):
        dense = tuple(m.degree_of(i) for i in range(len(self.order)))
        return (m.total_degree, dense)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for m in sorted(self.terms, key=self._sort_key, reverse=True):
            c = self.terms[m]
            factors = [
                self.order[i] if e == 1 else f"{self.order[i]}^{e}"
                for i, e in m.exps
            ]
            if not factors:
                body = str(abs(c))
            elif abs(c) == 1:
                body = "*".join(factors)
            else:
                body = "*".join([str(abs(c))] + factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({self!s})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.order == other.order
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return hash((self.order, frozenset(self.terms.items())))


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # only whitespace may remain unmatched
            rest = text[pos:]
            if rest.strip():
                bad = pos + len(rest) - len(rest.lstrip())
                raise ParseError(f"unexpected character '{text[bad]}'", bad)
            break
        if m.group("num"):
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    """Recursive-descent parser for the expression grammar.

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := coeff | var ('^' uint)? | '(' expr ')' | '-' factor
    coeff  := int | int '/' posint
    """

    def __init__(self, text: str, order: VariableOrder):
        self.tokens = _tokenize(text)
        self.order = order
        self.i = 0

    @property
    def tok(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self):
        self.i += 1

    def expect_op(self, op: str):
        kind, text, pos = self.tok
        if kind != "op" or text != op:
            raise ParseError(f"expected '{op}'", pos)
        self.advance()

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, text, pos = self.tok
        if kind != "eof":
            raise ParseError(f"unexpected '{text}'", pos)
        return p

    def expr(self) -> Polynomial:
        p = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.tok[1]
            self.advance()
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Polynomial:
        p = self.factor()
        while self.tok[0] == "op" and self.tok[1] == "*":
            self.advance()
            p = p * self.factor()
        return p

    def factor(self) -> Polynomial:
        kind, text, pos = self.tok
        if kind == "op" and text == "-":
            self.advance()
            return -self.factor()
        if kind == "op" and text == "(":
            self.advance()
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "num":
            self.advance()
            value = Fraction(int(text))
            if self.tok[0] == "op" and self.tok[1] == "/":
                self.advance()
                dkind, dtext, dpos = self.tok
                if dkind != "num":
                    raise ParseError("expected integer denominator", dpos)
                if int(dtext) == 0:
                    raise ParseError("denominator must be positive", dpos)
                self.advance()
                value /= int(dtext)
            return Polynomial.constant(self.order, value)
        if kind == "name":
            if text not in self.order:
                raise UnknownVariableError(text, pos)
            self.advance()
            var = self.order.index(text)
            exp = 1
            if self.tok[0] == "op" and self.tok[1] == "^":
                self.advance()
                ekind, etext, epos = self.tok
                if ekind != "num":
                    raise InvalidExponentError(
                        "exponent is not a nonnegative integer literal", epos
                    )
                self.advance()
                exp = int(etext)
            if exp == 0:
                return Polynomial.constant(self.order, 1)
            return Polynomial(
                self.order, {Monomial(((var, exp),)): Fraction(1)}
            )
        raise ParseError(f"unexpected '{text or 'end of input'}'", pos)


def parse_polynomial(text: str, order: VariableOrder) -> Polynomial:
    """Parse ``text`` into the canonical :class:`Polynomial` over ``order``."""
    return _Parser(text, order).parse()
