"""Sparse multivariate polynomials with arbitrary-precision integer coefficients.

Terms are stored as ``{packed_exponent: coefficient}`` where the exponent vector
is packed into a single Python int, ``BITS`` bits per variable.  Monomial
multiplication then becomes integer addition, which is what keeps the large
products in :mod:`octic_monogenity.index_form` tractable in pure Python.

Each polynomial carries its generator tuple (variable names, canonically
sorted).  Binary operations on polynomials with different generators first
re-pack both operands over the union.

Also here: dyadic polynomials (integer polynomial over a power of two) and the
2-adic constancy test based on the binomial (Mahler) basis.
"""
from __future__ import annotations

import ast
import heapq
import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

BITS = 16
MASK = (1 << BITS) - 1
MAX_EXPONENT = MASK

_VAR_RE = re.compile(r"^([A-Za-z_]+)(\d*)('*)$")
_VAR_PRIORITY = {"X": -1, "m": 0, "n": 1, "x": 2, "t": 3}


class PolynomialError(ValueError):
    pass


class UnboundVariable(PolynomialError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} has no binding")
        self.name = name


class NotDivisible(ArithmeticError):
    """Raised by :func:`exact_div`; ``remainder`` is the nonzero witness."""

    def __init__(self, dividend: "IntPolynomial", divisor: "IntPolynomial", remainder: "IntPolynomial"):
        self.dividend = dividend
        self.divisor = divisor
        self.remainder = remainder
        rem = str(remainder)
        if len(rem) > 200:
            rem = rem[:200] + "..."
        super().__init__(f"not divisible by {divisor}; remainder witness {rem}")


def var_sort_key(name: str):
    """Canonical variable order: m, n, x1.., t1.., then anything else."""
    mt = _VAR_RE.match(name)
    if mt is None:
        raise PolynomialError(f"bad variable name {name!r}")
    prefix, digits, primes = mt.groups()
    prio = _VAR_PRIORITY.get(prefix, 10)
    return (prio, prefix, int(digits) if digits else -1, len(primes), name)


def _canonical_gens(names: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(names), key=var_sort_key))


def _unpack(key: int, nvars: int) -> tuple[int, ...]:
    out = []
    for _ in range(nvars):
        out.append(key & MASK)
        key >>= BITS
    return tuple(out)


def _pack(exps: Sequence[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e < 0 or e > MAX_EXPONENT:
            raise PolynomialError(f"exponent {e} out of range")
        key |= e << (BITS * i)
    return key


def _key_degree(key: int) -> int:
    d = 0
    while key:
        d += key & MASK
        key >>= BITS
    return d


def _repack_map(old: tuple[str, ...], new: tuple[str, ...]) -> list[int]:
    pos = {g: i for i, g in enumerate(new)}
    return [BITS * pos[g] for g in old]


def _repack(terms: dict[int, int], old: tuple[str, ...], new: tuple[str, ...]) -> dict[int, int]:
    if old == new or not terms:
        return terms
    if len(terms) == 1 and 0 in terms:
        return terms
    shifts = _repack_map(old, new)
    out = {}
    for key, c in terms.items():
        nk = 0
        for sh in shifts:
            nk |= (key & MASK) << sh
            key >>= BITS
        out[nk] = c
    return out


def _mul_terms(p: dict[int, int], q: dict[int, int]) -> dict[int, int]:
    if len(p) < len(q):
        p, q = q, p
    out: dict[int, int] = {}
    get = out.get
    for kq, cq in q.items():
        for kp, cp in p.items():
            k = kp + kq
            out[k] = get(k, 0) + cp * cq
    return {k: c for k, c in out.items() if c}


def _addmul_into(acc: dict[int, int], p: dict[int, int], q: dict[int, int], sign: int = 1) -> None:
    """acc += sign * p * q, in place; zero entries are left for the caller to strip."""
    if len(p) < len(q):
        p, q = q, p
    get = acc.get
    for kq, cq in q.items():
        cq *= sign
        for kp, cp in p.items():
            k = kp + kq
            acc[k] = get(k, 0) + cp * cq


def _strip(terms: dict[int, int]) -> dict[int, int]:
    return {k: c for k, c in terms.items() if c}


class IntPolynomial:
    """Immutable sparse polynomial over Z in named variables."""

    __slots__ = ("_gens", "_terms", "_hash", "_deg", "_expanded")

    def __init__(self, terms: Mapping[int, int] | None = None, gens: Sequence[str] = ()):
        gens = tuple(gens)
        canon = _canonical_gens(gens)
        raw = dict(terms) if terms else {}
        if len(set(gens)) != len(gens):
            raise PolynomialError(f"duplicate generators in {gens}")
        if canon != gens:
            raw = _repack(raw, gens, canon)
        self._gens = canon
        self._terms = _strip(raw)
        self._hash = None
        self._deg = None
        self._expanded = None

    @classmethod
    def _make(cls, terms: dict[int, int], gens: tuple[str, ...]) -> "IntPolynomial":
        # trusted constructor: gens canonical, terms stripped
        obj = cls.__new__(cls)
        obj._gens = gens
        obj._terms = terms
        obj._hash = None
        obj._deg = None
        obj._expanded = None
        return obj

    # -- construction -------------------------------------------------------
    @classmethod
    def var(cls, name: str) -> "IntPolynomial":
        var_sort_key(name)
        return cls._make({1: 1}, (name,))

    @classmethod
    def const(cls, c: int, gens: Sequence[str] = ()) -> "IntPolynomial":
        return cls._make({0: int(c)} if c else {}, _canonical_gens(gens))

    @classmethod
    def from_dict(cls, data: Mapping, gens: Sequence[str] = ()) -> "IntPolynomial":
        """Build from ``{monomial: coeff}`` where a monomial is a mapping or a
        sequence of ``(var, exp)`` pairs."""
        names = set(gens)
        items = []
        for mono, c in data.items():
            mono = dict(mono)
            names.update(v for v, e in mono.items() if e)
            items.append((mono, c))
        g = _canonical_gens(names)
        pos = {v: i for i, v in enumerate(g)}
        terms: dict[int, int] = {}
        for mono, c in items:
            key = 0
            for v, e in mono.items():
                if e:
                    if e < 0 or e > MAX_EXPONENT:
                        raise PolynomialError(f"exponent {e} out of range")
                    key |= e << (BITS * pos[v])
            terms[key] = terms.get(key, 0) + int(c)
        return cls._make(_strip(terms), g)

    @classmethod
    def parse(cls, text: str) -> "IntPolynomial":
        """Inverse of ``str()``: integer coefficients, ``*`` products, ``^`` powers."""
        s = text.replace(" ", "")
        if not s:
            raise PolynomialError("empty polynomial text")
        if s[0] not in "+-":
            s = "+" + s
        result: dict[tuple, int] = {}
        pos = 0
        for mt in re.finditer(r"([+-])([^+-]+)", s):
            if mt.start() != pos:
                raise PolynomialError(f"cannot parse {text!r}")
            pos = mt.end()
            sign = -1 if mt.group(1) == "-" else 1
            coeff = sign
            mono: dict[str, int] = {}
            for factor in mt.group(2).split("*"):
                if factor.isdigit():
                    coeff *= int(factor)
                    continue
                name, _, exp = factor.partition("^")
                var_sort_key(name)
                e = int(exp) if exp else 1
                mono[name] = mono.get(name, 0) + e
            k = tuple(sorted(mono.items()))
            result[k] = result.get(k, 0) + coeff
        if pos != len(s):
            raise PolynomialError(f"cannot parse {text!r}")
        return cls.from_dict(result)

    @classmethod
    def from_expression(cls, text: str) -> "IntPolynomial":
        """Parse a hand-written expression such as ``16*(2*n+1)^2``; only
        integers, variables, ``+ - *`` and non-negative integer powers."""
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise PolynomialError(f"cannot parse {text!r}") from exc

        def ev(node):
            if isinstance(node, ast.Expression):
                return ev(node.body)
            if isinstance(node, ast.Constant) and type(node.value) is int:
                return cls.const(node.value)
            if isinstance(node, ast.Name):
                return cls.var(node.id)
            if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
                v = ev(node.operand)
                return -v if isinstance(node.op, ast.USub) else v
            if isinstance(node, ast.BinOp):
                if isinstance(node.op, ast.Pow):
                    e = node.right
                    if not (isinstance(e, ast.Constant) and type(e.value) is int and e.value >= 0):
                        raise PolynomialError(f"bad exponent in {text!r}")
                    return ev(node.left) ** e.value
                ops = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
                       ast.Mult: lambda a, b: a * b}
                op = ops.get(type(node.op))
                if op:
                    return op(ev(node.left), ev(node.right))
            raise PolynomialError(f"unsupported syntax in {text!r}")

        return ev(tree)

    # -- basic accessors ----------------------------------------------------
    @property
    def gens(self) -> tuple[str, ...]:
        return self._gens

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and 0 in self._terms)

    def constant_term(self) -> int:
        return self._terms.get(0, 0)

    def coefficients(self) -> list[int]:
        return list(self._terms.values())

    def _expand(self) -> list[tuple[tuple[int, ...], int]]:
        if self._expanded is None:
            nv = len(self._gens)
            self._expanded = [(_unpack(k, nv), c) for k, c in self._terms.items()]
        return self._expanded

    def terms(self) -> Iterator[tuple[dict[str, int], int]]:
        """Yield ``(monomial, coeff)`` pairs in graded-lex order (largest first)."""
        g = self._gens
        for exps, c in self._sorted_terms():
            yield {v: e for v, e in zip(g, exps) if e}, c

    def _sorted_terms(self):
        return sorted(self._expand(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))

    def variables(self) -> set[str]:
        """Variables that actually occur with a nonzero exponent."""
        used = 0
        for k in self._terms:
            used |= k
        out = set()
        for i, g in enumerate(self._gens):
            if (used >> (BITS * i)) & MASK:
                out.add(g)
        return out

    def degree(self, var: str | None = None) -> int:
        """Total degree, or degree in ``var``; -1 for the zero polynomial."""
        if not self._terms:
            return -1
        if var is None:
            if self._deg is None:
                self._deg = max(_key_degree(k) for k in self._terms)
            return self._deg
        if var not in self._gens:
            return 0
        sh = BITS * self._gens.index(var)
        return max((k >> sh) & MASK for k in self._terms)

    def content(self) -> int:
        g = 0
        for c in self._terms.values():
            g = math.gcd(g, c)
        return g

    def with_gens(self, gens: Sequence[str]) -> "IntPolynomial":
        new = _canonical_gens(tuple(gens) + self._gens)
        if new == self._gens:
            return self
        return IntPolynomial._make(_repack(self._terms, self._gens, new), new)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "IntPolynomial":
        if isinstance(other, IntPolynomial):
            return other
        if isinstance(other, int):
            return IntPolynomial._make({0: other} if other else {}, ())
        return NotImplemented

    def _align(self, other: "IntPolynomial"):
        a, b = self._gens, other._gens
        if a is b or a == b:
            return a, self._terms, other._terms
        if not other._terms or (len(other._terms) == 1 and 0 in other._terms):
            return a, self._terms, other._terms
        if not self._terms or (len(self._terms) == 1 and 0 in self._terms):
            return b, self._terms, other._terms
        g = _canonical_gens(a + b)
        return g, _repack(self._terms, a, g), _repack(other._terms, b, g)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        g, p, q = self._align(other)
        if len(p) < len(q):
            p, q = q, p
        out = dict(p)
        get = out.get
        for k, c in q.items():
            v = get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return IntPolynomial._make(out, g)

    __radd__ = __add__

    def __neg__(self):
        return IntPolynomial._make({k: -c for k, c in self._terms.items()}, self._gens)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, int):
            if not other:
                return IntPolynomial._make({}, self._gens)
            return IntPolynomial._make({k: c * other for k, c in self._terms.items()}, self._gens)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self._terms and other._terms and self.degree() + other.degree() > MAX_EXPONENT:
            raise PolynomialError("exponent overflow in product")
        g, p, q = self._align(other)
        return IntPolynomial._make(_mul_terms(p, q), g)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if not isinstance(e, int) or e < 0:
            raise PolynomialError("exponent must be a non-negative int")
        if self._terms and self.degree() * e > MAX_EXPONENT:
            raise PolynomialError("exponent overflow in power")
        result = IntPolynomial._make({0: 1}, self._gens)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    @staticmethod
    def sum_of_products(pairs: Iterable[tuple["IntPolynomial", "IntPolynomial", int]],
                        gens: Sequence[str]) -> "IntPolynomial":
        """Return sum(sign * p * q) with all operands brought over ``gens``.

        Accumulates in one dict, which avoids materialising each product.
        """
        g = _canonical_gens(gens)
        acc: dict[int, int] = {}
        for p, q, sign in pairs:
            if not p._terms or not q._terms:
                continue
            pt = p._terms if p._gens == g else _repack(p._terms, p._gens, g)
            qt = q._terms if q._gens == g else _repack(q._terms, q._gens, g)
            _addmul_into(acc, pt, qt, sign)
        return IntPolynomial._make(_strip(acc), g)

    def __eq__(self, other):
        if isinstance(other, int):
            other = IntPolynomial.const(other)
        if not isinstance(other, IntPolynomial):
            return NotImplemented
        _, p, q = self._align(other)
        return p == q

    def __hash__(self):
        if self._hash is None:
            g = self._gens
            self._hash = hash(frozenset(
                (tuple((v, e) for v, e in zip(g, exps) if e), c) for exps, c in self._expand()
            ))
        return self._hash

    # -- coefficient maps ---------------------------------------------------
    def reduce_mod(self, modulus: int) -> "IntPolynomial":
        """Coefficients reduced into [0, modulus); zero terms dropped."""
        out = {}
        for k, c in self._terms.items():
            r = c % modulus
            if r:
                out[k] = r
        return IntPolynomial._make(out, self._gens)

    def scale_down(self, d: int) -> "IntPolynomial":
        """Divide every coefficient by ``d``; raises NotDivisible if any is not a multiple."""
        out = {}
        for k, c in self._terms.items():
            q, r = divmod(c, d)
            if r:
                rem = IntPolynomial._make({k: c}, self._gens)
                raise NotDivisible(self, IntPolynomial.const(d), rem)
            out[k] = q
        return IntPolynomial._make(out, self._gens)

    # -- substitution and evaluation ----------------------------------------
    def substitute(self, bindings: Mapping[str, "IntPolynomial | int"],
                   modulus: int | None = None) -> "IntPolynomial":
        """Compose: replace each bound variable by its image.

        With ``modulus`` every coefficient of the result (and of the cached
        powers) is reduced modulo it; this is sound for integer substitutions.
        """
        gens = self._gens
        bound = [(i, v) for i, v in enumerate(gens) if v in bindings]
        if not bound:
            return self.reduce_mod(modulus) if modulus else self
        images = {}
        for i, v in bound:
            img = bindings[v]
            images[i] = img if isinstance(img, IntPolynomial) else IntPolynomial.const(int(img))
        unbound = [v for v in gens if v not in bindings]
        res_gens = _canonical_gens(unbound + [g for img in images.values() for g in img._gens])
        shifts = {i: BITS * res_gens.index(v) for i, v in enumerate(gens) if v not in bindings}
        bound_idx = [i for i, _ in bound]

        groups: dict[tuple[int, ...], dict[int, int]] = {}
        for key, c in self._terms.items():
            be = []
            nk = 0
            for i in range(len(gens)):
                e = key & MASK
                key >>= BITS
                if i in images:
                    be.append(e)
                elif e:
                    nk |= e << shifts[i]
            grp = groups.setdefault(tuple(be), {})
            grp[nk] = grp.get(nk, 0) + c

        powers: dict[int, list[dict[int, int]]] = {}
        for i in bound_idx:
            img = images[i]
            t = _repack(img._terms, img._gens, res_gens)
            powers[i] = [{0: 1}, t]

        def power(i: int, e: int) -> dict[int, int]:
            lst = powers[i]
            while len(lst) <= e:
                nxt = _mul_terms(lst[-1], lst[1])
                if modulus:
                    nxt = {k: c % modulus for k, c in nxt.items() if c % modulus}
                lst.append(nxt)
            return lst[e]

        acc: dict[int, int] = {}
        for be, rest in groups.items():
            factor = {0: 1}
            for i, e in zip(bound_idx, be):
                if e:
                    factor = _mul_terms(factor, power(i, e))
                    if modulus:
                        factor = {k: c % modulus for k, c in factor.items() if c % modulus}
            _addmul_into(acc, factor, rest)
        if modulus:
            out = {}
            for k, c in acc.items():
                r = c % modulus
                if r:
                    out[k] = r
            return IntPolynomial._make(out, res_gens)
        return IntPolynomial._make(_strip(acc), res_gens)

    def evaluate(self, assignment: Mapping[str, int], modulus: int | None = None) -> int:
        """Exact value at an integer point (optionally reduced mod ``modulus``)."""
        used = self.variables()
        for v in used:
            if v not in assignment:
                raise UnboundVariable(v)
        tables = []
        for i, g in enumerate(self._gens):
            if g in used:
                x = int(assignment[g])
                d = self.degree(g)
                row = [1]
                for _ in range(d):
                    nxt = row[-1] * x
                    row.append(nxt % modulus if modulus else nxt)
                tables.append((i, row))
        total = 0
        for exps, c in self._expand():
            v = c
            for i, row in tables:
                e = exps[i]
                if e:
                    v *= row[e]
            total += v
        return total % modulus if modulus else total

    # -- printing -----------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        g = self._gens
        parts = []
        for exps, c in self._sorted_terms():
            factors = []
            for v, e in zip(g, exps):
                if e == 1:
                    factors.append(v)
                elif e:
                    factors.append(f"{v}^{e}")
            a = abs(c)
            if not factors:
                body = str(a)
            elif a == 1:
                body = "*".join(factors)
            else:
                body = f"{a}*" + "*".join(factors)
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    def __repr__(self):
        return f"IntPolynomial({str(self)!r})"

    def __reduce__(self):
        return (IntPolynomial.parse, (str(self),)) if self._terms else (IntPolynomial.const, (0,))


Poly = IntPolynomial


def exact_div(p: IntPolynomial, d: IntPolynomial | int) -> IntPolynomial:
    """Return q with p == d*q exactly, or raise NotDivisible.

    Constant divisors divide coefficient-wise; otherwise this is leading-term
    division in the lex order induced by the packed keys.
    """
    if isinstance(d, int):
        d = IntPolynomial.const(d)
    if d.is_zero():
        raise ZeroDivisionError("exact_div by zero polynomial")
    if d.is_constant():
        return p.scale_down(d.constant_term())
    g, rem, dt = p._align(d)
    rem = dict(rem)
    lk = max(dt)
    lc = dt[lk]
    nv = len(g)
    lexp = _unpack(lk, nv)
    dterms = list(dt.items())
    quot: dict[int, int] = {}
    heap = [-k for k in rem]
    heapq.heapify(heap)
    while heap:
        k = -heapq.heappop(heap)
        c = rem.get(k)
        if not c:
            continue
        kexp = _unpack(k, nv)
        qc, r = divmod(c, lc)
        if r or any(a < b for a, b in zip(kexp, lexp)):
            raise NotDivisible(p, d, IntPolynomial._make(_strip(rem), g))
        qk = k - lk
        quot[qk] = qc
        for dk, dc in dterms:
            nk = qk + dk
            v = rem.get(nk, 0) - qc * dc
            if v:
                if nk not in rem:
                    heapq.heappush(heap, -nk)
                rem[nk] = v
            else:
                rem.pop(nk, None)
    return IntPolynomial._make(quot, g)


# -- dyadic polynomials ------------------------------------------------------

def _v2(c: int) -> int:
    return (c & -c).bit_length() - 1


class DyadicPolynomial:
    """``numerator / 2**denom_exp`` kept normalized (odd coefficient present when k > 0)."""

    __slots__ = ("numerator", "denom_exp")

    def __init__(self, numerator: IntPolynomial | int, denom_exp: int = 0):
        if isinstance(numerator, int):
            numerator = IntPolynomial.const(numerator)
        if denom_exp < 0:
            numerator = numerator * (1 << -denom_exp)
            denom_exp = 0
        if numerator.is_zero():
            denom_exp = 0
        elif denom_exp:
            v = min(_v2(c) for c in numerator._terms.values())
            s = min(v, denom_exp)
            if s:
                numerator = IntPolynomial._make({k: c >> s for k, c in numerator._terms.items()},
                                                numerator._gens)
                denom_exp -= s
        self.numerator = numerator
        self.denom_exp = denom_exp

    def is_integral(self) -> bool:
        return self.denom_exp == 0

    def is_zero(self) -> bool:
        return self.numerator.is_zero()

    def _lift(self, k: int) -> IntPolynomial:
        return self.numerator * (1 << (k - self.denom_exp)) if k > self.denom_exp else self.numerator

    def __add__(self, other):
        other = _as_dyadic(other)
        k = max(self.denom_exp, other.denom_exp)
        return DyadicPolynomial(self._lift(k) + other._lift(k), k)

    __radd__ = __add__

    def __neg__(self):
        return DyadicPolynomial(-self.numerator, self.denom_exp)

    def __sub__(self, other):
        return self + (-_as_dyadic(other))

    def __mul__(self, other):
        other = _as_dyadic(other)
        return DyadicPolynomial(self.numerator * other.numerator, self.denom_exp + other.denom_exp)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, IntPolynomial)):
            other = DyadicPolynomial(other)
        if not isinstance(other, DyadicPolynomial):
            return NotImplemented
        return self.denom_exp == other.denom_exp and self.numerator == other.numerator

    def __hash__(self):
        return hash((self.numerator, self.denom_exp))

    def substitute(self, bindings) -> "DyadicPolynomial":
        return DyadicPolynomial(self.numerator.substitute(bindings), self.denom_exp)

    def evaluate(self, assignment):
        from fractions import Fraction
        return Fraction(self.numerator.evaluate(assignment), 1 << self.denom_exp)

    def __str__(self):
        if self.denom_exp == 0:
            return str(self.numerator)
        num = str(self.numerator)
        if len(self.numerator) > 1:
            num = f"({num})"
        return f"{num}/{1 << self.denom_exp}"

    def __repr__(self):
        return f"DyadicPolynomial({str(self)!r})"


def _as_dyadic(x) -> DyadicPolynomial:
    if isinstance(x, DyadicPolynomial):
        return x
    return DyadicPolynomial(x)


# -- 2-adic constancy --------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    residue: int
    k: int

    @property
    def modulus(self) -> int:
        return 1 << self.k


@dataclass(frozen=True)
class NonConstant:
    k: int
    witness: tuple[dict[str, int], dict[str, int]]
    residues: tuple[int, int]

    @property
    def modulus(self) -> int:
        return 1 << self.k


ConstancyResult = Union[Constant, NonConstant]


@lru_cache(maxsize=None)
def stirling2(d: int, j: int) -> int:
    if d == j:
        return 1
    if j == 0 or j > d:
        return 0
    return j * stirling2(d - 1, j) + stirling2(d - 1, j - 1)


@lru_cache(maxsize=None)
def _falling_table(d: int, modulus: int) -> tuple[tuple[int, int], ...]:
    # t^d = sum_j S(d,j) j! C(t,j); keep entries nonzero mod modulus
    out = []
    for j in range(1, d + 1):
        c = stirling2(d, j) * math.factorial(j) % modulus
        if c:
            out.append((j, c))
    return tuple(out)


def mahler_coefficients(p: IntPolynomial, k: int) -> dict[tuple[int, ...], int]:
    """Coefficients of ``p`` on the products of binomials C(v, j), reduced mod 2**k.

    Keys are exponent-like tuples ``J`` over ``p.gens``; only nonzero entries kept.
    """
    M = 1 << k
    nv = len(p._gens)
    acc: dict[int, int] = {}
    for key, c in p._terms.items():
        c %= M
        if not c:
            continue
        cur = {0: c}
        sh = 0
        kk = key
        while kk:
            e = kk & MASK
            kk >>= BITS
            if e:
                table = _falling_table(e, M)
                nxt: dict[int, int] = {}
                for J, v in cur.items():
                    for j, w in table:
                        x = v * w % M
                        if x:
                            nk = J + (j << sh)
                            nxt[nk] = (nxt.get(nk, 0) + x) % M
                cur = nxt
                if not cur:
                    break
            sh += BITS
        for J, v in cur.items():
            acc[J] = (acc.get(J, 0) + v) % M
    return {_unpack(J, nv): v for J, v in acc.items() if v}


def constancy_mod(p: IntPolynomial, k: int) -> ConstancyResult:
    """Decide whether ``p`` induces a constant function Z^v -> Z/2^k.

    Uses the binomial-basis criterion: constant iff every coefficient of a
    nonconstant product of binomials vanishes mod 2^k.  For a nonconstant
    polynomial the witness is the origin and the point J of a minimal nonzero
    coefficient; their values differ by exactly that coefficient.
    """
    if not 1 <= k <= 64:
        raise ValueError("k must be in [1, 64]")
    M = 1 << k
    coeffs = mahler_coefficients(p, k)
    zero = tuple([0] * len(p.gens))
    base = coeffs.get(zero, 0)
    nonconst = [J for J in coeffs if J != zero]
    if not nonconst:
        return Constant(base % M, k)
    J = min(nonconst, key=lambda J: (sum(J), J))
    # generators that do not actually occur are left out of the witness
    used = p.variables()
    a = {v: 0 for v in p.gens if v in used}
    b = {v: j for v, j in zip(p.gens, J) if v in used}
    ra, rb = p.evaluate(a, M), p.evaluate(b, M)
    assert ra != rb, "binomial-basis witness failed"
    return NonConstant(k, (a, b), (ra, rb))


def allowed_residues(coeffs: Sequence[int], k: int) -> frozenset[int]:
    """All values of sum(c_i * e_i) mod 2**k with each e_i = +1 or -1."""
    if not coeffs:
        raise ValueError("coefficient list must be nonempty")
    M = 1 << k
    return frozenset(
        sum(c * s for c, s in zip(coeffs, signs)) % M
        for signs in itertools.product((1, -1), repeat=len(coeffs))
    )
