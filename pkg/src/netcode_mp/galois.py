"""Exact arithmetic over GF(p^m): scalars, vectors, matrices, subspaces and cosets.

Field elements are plain ints in ``[0, q)``; the base-p digits of the int are
the polynomial coefficients (constant term least significant).  Vectors are
tuples of ints and matrices are tuples of row tuples.  Every routine that does
elimination accepts an optional :class:`OpCounter` and charges the field
multiplications and additions it performs.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

Vector = tuple[int, ...]
Matrix = tuple[Vector, ...]


class FieldError(ValueError):
    """Bad field description, mismatched fields, or a non-invertible element."""


class DimensionError(ValueError):
    """Operands of incompatible shape or ambient dimension."""


@dataclass
class OpCounter:
    mul: int = 0
    add: int = 0
    messages: int = 0
    iterations: int = 0

    @property
    def field_ops(self) -> int:
        return self.mul + self.add

    def absorb(self, other: OpCounter) -> None:
        self.mul += other.mul
        self.add += other.add
        self.messages += other.messages
        self.iterations += other.iterations


def _charge(ops: OpCounter | None, mul: int = 0, add: int = 0) -> None:
    if ops is not None:
        ops.mul += mul
        ops.add += add


# --------------------------------------------------------------------------
# polynomial helpers over GF(p), coefficient lists constant-first

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def _prime_power(q: int) -> tuple[int, int]:
    for p in range(2, q + 1):
        if q % p == 0:
            m, r = 0, q
            while r % p == 0:
                r //= p
                m += 1
            if r != 1 or not _is_prime(p):
                break
            return p, m
    raise FieldError(f"{q} is not a prime power")


def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = _poly_trim(list(a))
    b = _poly_trim(list(b))
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) >= len(b):
        f = (a[-1] * inv_lead) % p
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] = (a[shift + i] - f * c) % p
        _poly_trim(a)
    return a


def is_irreducible(coeffs: Sequence[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    deg = len(coeffs) - 1
    for d in range(1, deg // 2 + 1):
        for low in itertools.product(range(p), repeat=d):
            if not _poly_mod(coeffs, list(low) + [1], p):
                return False
    return True


# Conway polynomials for the sizes the tests and benchmarks touch.
_DEFAULT_MODULI: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 1, 1, 0, 1),
    (2, 7): (1, 1, 0, 0, 0, 0, 0, 1),
    (2, 8): (1, 0, 1, 1, 1, 0, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (5, 2): (2, 4, 1),
    (7, 2): (3, 6, 1),
}


@lru_cache(maxsize=None)
def default_modulus(p: int, m: int) -> tuple[int, ...]:
    if (p, m) in _DEFAULT_MODULI:
        return _DEFAULT_MODULI[(p, m)]
    # first monic irreducible in lexicographic order of the low coefficients
    for low in itertools.product(range(p), repeat=m):
        cand = tuple(low) + (1,)
        if low[0] != 0 and is_irreducible(cand, p):
            return cand
    raise FieldError(f"no irreducible polynomial of degree {m} over GF({p})")


# --------------------------------------------------------------------------
# fields

_FIELD_RE = re.compile(r"^\s*GF\(\s*(\d+)\s*(?:\^\s*(\d+))?\s*(?::\s*([\d,\s]+))?\)\s*$")

_MAX_EXT_ORDER = 1 << 16


@dataclass(frozen=True)
class FieldSpec:
    """GF(p^m) with a fixed monic irreducible modulus (constant-first)."""

    p: int
    m: int = 1
    modulus: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not _is_prime(self.p):
            raise FieldError(f"characteristic {self.p} is not prime")
        if self.m < 1:
            raise FieldError("extension degree must be >= 1")
        if self.m == 1:
            object.__setattr__(self, "modulus", None)
            return
        if self.p**self.m > _MAX_EXT_ORDER:
            raise FieldError(f"extension fields larger than {_MAX_EXT_ORDER} are not supported")
        mod = default_modulus(self.p, self.m) if self.modulus is None else tuple(self.modulus)
        if len(mod) != self.m + 1 or mod[-1] != 1 or any(not 0 <= c < self.p for c in mod):
            raise FieldError(f"modulus {mod} is not a monic degree-{self.m} polynomial over GF({self.p})")
        if not _irreducible_cached(mod, self.p):
            raise FieldError(f"modulus {mod} is reducible over GF({self.p})")
        object.__setattr__(self, "modulus", mod)

    @classmethod
    def parse(cls, text: str) -> FieldSpec:
        """Parse ``GF(q)``, ``GF(p^m)`` or ``GF(q:c0,c1,...)``."""
        match = _FIELD_RE.match(text)
        if not match:
            raise FieldError(f"cannot parse field {text!r}; expected GF(p^m[:coeffs])")
        base, exp, coeffs = match.groups()
        if exp is None:
            p, m = _prime_power(int(base))
        else:
            p, m = int(base), int(exp)
        modulus = None
        if coeffs is not None:
            modulus = tuple(int(c) for c in coeffs.replace(" ", "").split(",") if c)
        return cls(p, m, modulus)

    def __str__(self) -> str:
        if self.m == 1 or self.modulus == default_modulus(self.p, self.m):
            return f"GF({self.q})"
        return f"GF({self.q}:{','.join(map(str, self.modulus))})"

    @property
    def q(self) -> int:
        return self.p**self.m

    @property
    def _t(self) -> _Tables:
        return _tables(self)

    def __call__(self, value: int) -> FieldElem:
        return FieldElem(self, value)

    def elements(self) -> range:
        return range(self.q)

    # -- scalar arithmetic on reprs
    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        if self.m == 1:
            return (a + b) % self.p
        return self._t.add(a, b)

    def neg(self, a: int) -> int:
        if self.p == 2:
            return a
        if self.m == 1:
            return (-a) % self.p
        return self._t.neg[a]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a * b) % self.p
        if a == 0 or b == 0:
            return 0
        t = self._t
        return t.exp[t.log[a] + t.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise FieldError("inverse of zero")
        if self.m == 1:
            return pow(a, self.p - 2, self.p)
        t = self._t
        return t.exp[(self.q - 1 - t.log[a]) % (self.q - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    # -- vectorised arithmetic for enumeration oracles
    def vadd(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.p == 2:
            return np.bitwise_xor(a, b)
        if self.m == 1:
            return (a + b) % self.p
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        scale = 1
        for _ in range(self.m):
            out += (((a // scale) % self.p + (b // scale) % self.p) % self.p) * scale
            scale *= self.p
        return out

    def vneg(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(self._t.neg_arr)[a]

    def vmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.m == 1:
            return (a * b) % self.p
        t = self._t
        prod = t.exp_arr[t.log_arr[a] + t.log_arr[b]]
        return np.where((a == 0) | (b == 0), 0, prod)


@dataclass
class _Tables:
    p: int
    m: int
    exp: list[int]
    log: list[int]
    neg: list[int]
    add_table: list[list[int]] | None
    exp_arr: np.ndarray = field(repr=False, default=None)
    log_arr: np.ndarray = field(repr=False, default=None)
    neg_arr: np.ndarray = field(repr=False, default=None)

    def add(self, a: int, b: int) -> int:
        if self.add_table is not None:
            return self.add_table[a][b]
        return _digit_add(a, b, self.p, self.m)


def _digits(a: int, p: int, m: int) -> list[int]:
    out = []
    for _ in range(m):
        out.append(a % p)
        a //= p
    return out


def _undigits(d: Sequence[int], p: int) -> int:
    v = 0
    for c in reversed(d):
        v = v * p + c
    return v


def _digit_add(a: int, b: int, p: int, m: int) -> int:
    out, scale = 0, 1
    for _ in range(m):
        out += ((a % p + b % p) % p) * scale
        a //= p
        b //= p
        scale *= p
    return out


@lru_cache(maxsize=None)
def _irreducible_cached(mod: tuple[int, ...], p: int) -> bool:
    return is_irreducible(mod, p)


def _polymulmod(a: int, b: int, p: int, m: int, mod: Sequence[int]) -> int:
    da, db = _digits(a, p, m), _digits(b, p, m)
    prod = [0] * (2 * m - 1)
    for i, x in enumerate(da):
        if x:
            for j, y in enumerate(db):
                prod[i + j] = (prod[i + j] + x * y) % p
    return _undigits((_poly_mod(prod, mod, p) + [0] * m)[:m], p)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def _tables(spec: FieldSpec) -> _Tables:
    p, m, mod = spec.p, spec.m, spec.modulus
    q = p**m
    if m == 1:
        exp = log = []
        neg = [(-a) % p for a in range(q)]
        t = _Tables(p, m, exp, log, neg, None)
        t.neg_arr = np.array(neg, dtype=np.int64)
        return t

    def mulx(a: int) -> int:
        return _polymulmod(a, p, p, m, mod)  # repr p is the polynomial x

    def power(g: int, e: int) -> int:
        r, b = 1, g
        while e:
            if e & 1:
                r = _polymulmod(r, b, p, m, mod)
            b = _polymulmod(b, b, p, m, mod)
            e >>= 1
        return r

    def is_primitive(g: int) -> bool:
        return all(power(g, (q - 1) // r) != 1 for r in _prime_factors(q - 1))

    gen = p if is_primitive(p) else next(g for g in range(2, q) if is_primitive(g))
    step = mulx if gen == p else (lambda a: _polymulmod(a, gen, p, m, mod))
    exp = [0] * (2 * (q - 1))
    log = [0] * q
    x = 1
    for i in range(q - 1):
        exp[i] = exp[i + q - 1] = x
        log[x] = i
        x = step(x)
    neg = [_undigits([(-d) % p for d in _digits(a, p, m)], p) for a in range(q)]
    add_table = None
    if p != 2 and q <= 256:
        add_table = [[_digit_add(a, b, p, m) for b in range(q)] for a in range(q)]
    t = _Tables(p, m, exp, log, neg, add_table)
    t.exp_arr = np.array(exp, dtype=np.int64)
    t.log_arr = np.array(log, dtype=np.int64)
    t.neg_arr = np.array(neg, dtype=np.int64)
    return t


@dataclass(frozen=True)
class FieldElem:
    """A field element bound to its field; operators refuse to mix fields."""

    field: FieldSpec
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < self.field.q:
            raise FieldError(f"{self.value} is not an element of {self.field}")

    def _other(self, other: FieldElem | int) -> int:
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise FieldError(f"cannot combine elements of {self.field} and {other.field}")
            return other.value
        return FieldElem(self.field, other).value

    def __add__(self, other):
        return FieldElem(self.field, self.field.add(self.value, self._other(other)))

    def __sub__(self, other):
        return FieldElem(self.field, self.field.sub(self.value, self._other(other)))

    def __mul__(self, other):
        return FieldElem(self.field, self.field.mul(self.value, self._other(other)))

    def __truediv__(self, other):
        return FieldElem(self.field, self.field.div(self.value, self._other(other)))

    def __neg__(self):
        return FieldElem(self.field, self.field.neg(self.value))

    def inverse(self) -> FieldElem:
        return FieldElem(self.field, self.field.inv(self.value))

    def __int__(self) -> int:
        return self.value


# --------------------------------------------------------------------------
# vectors and matrices

def format_vector(v: Sequence[int]) -> str:
    return ",".join(str(x) for x in v)


def parse_vector(text: str, F: FieldSpec | None = None, n: int | None = None) -> Vector:
    try:
        v = tuple(int(x) for x in text.strip().split(","))
    except ValueError as exc:
        raise FieldError(f"bad vector {text!r}") from exc
    if n is not None and len(v) != n:
        raise DimensionError(f"vector {text!r} has length {len(v)}, expected {n}")
    if F is not None and any(not 0 <= x < F.q for x in v):
        raise FieldError(f"vector {text!r} has entries outside {F}")
    return v


def vec_add(F: FieldSpec, u: Sequence[int], v: Sequence[int], ops: OpCounter | None = None) -> Vector:
    _charge(ops, add=len(u))
    return tuple(F.add(a, b) for a, b in zip(u, v))


def vec_sub(F: FieldSpec, u: Sequence[int], v: Sequence[int], ops: OpCounter | None = None) -> Vector:
    _charge(ops, add=len(u))
    return tuple(F.sub(a, b) for a, b in zip(u, v))


def vec_scale(F: FieldSpec, c: int, v: Sequence[int], ops: OpCounter | None = None) -> Vector:
    _charge(ops, mul=len(v))
    return tuple(F.mul(c, a) for a in v)


def vec_axpy(F: FieldSpec, y: Sequence[int], a: int, x: Sequence[int], ops: OpCounter | None = None) -> Vector:
    """y + a*x"""
    if a == 0:
        return tuple(y)
    _charge(ops, mul=len(x), add=len(x))
    return tuple(F.add(yi, F.mul(a, xi)) for yi, xi in zip(y, x))


def vector_index(v: Sequence[int], q: int) -> int:
    """Position of ``v`` in lexicographic order of F^n (first coordinate most significant)."""
    idx = 0
    for x in v:
        idx = idx * q + x
    return idx


def index_vector(idx: int, q: int, n: int) -> Vector:
    out = [0] * n
    for k in range(n - 1, -1, -1):
        idx, out[k] = divmod(idx, q)
    return tuple(out)


def all_vectors(F: FieldSpec, n: int) -> Iterator[Vector]:
    return itertools.product(range(F.q), repeat=n)


def matmul(F: FieldSpec, A: Sequence[Sequence[int]], B: Sequence[Sequence[int]], ops: OpCounter | None = None) -> Matrix:
    if A and len(A[0]) != len(B):
        raise DimensionError(f"cannot multiply {len(A)}x{len(A[0])} by {len(B)}x?")
    cols = len(B[0]) if B else 0
    out = []
    for row in A:
        acc = [0] * cols
        for a, brow in zip(row, B):
            if a:
                acc = list(vec_axpy(F, acc, a, brow, ops))
        out.append(tuple(acc))
    return tuple(out)


def matvec(F: FieldSpec, A: Sequence[Sequence[int]], x: Sequence[int], ops: OpCounter | None = None) -> Vector:
    return tuple(r[0] for r in matmul(F, A, [(xi,) for xi in x], ops)) if A else ()


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def transpose(A: Sequence[Sequence[int]], cols: int | None = None) -> Matrix:
    if not A:
        return tuple(() for _ in range(cols or 0))
    return tuple(zip(*A))


def rref(F: FieldSpec, M: Sequence[Sequence[int]], ops: OpCounter | None = None,
         ncols: int | None = None) -> tuple[Matrix, int, tuple[int, ...]]:
    """Gauss-Jordan elimination.

    Pivots are the first nonzero entry scanning columns left to right; pivot
    rows are scaled to 1.  ``ncols`` limits the columns searched for pivots
    (the remaining columns are carried along, as for an augmented matrix).
    Returns ``(R, rank, pivot_columns)``; zero rows are kept at the bottom.
    """
    rows = [list(r) for r in M]
    if not rows:
        return (), 0, ()
    width = len(rows[0])
    search = width if ncols is None else ncols
    pivots: list[int] = []
    r = 0
    for c in range(search):
        if r == len(rows):
            break
        pr = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        piv = rows[r]
        tail = width - c - 1
        if piv[c] != 1:
            inv = F.inv(piv[c])
            _charge(ops, mul=1 + tail)
            for j in range(c + 1, width):
                piv[j] = F.mul(inv, piv[j])
            piv[c] = 1
        for i in range(len(rows)):
            if i == r:
                continue
            f = rows[i][c]
            if f == 0:
                continue
            row = rows[i]
            _charge(ops, mul=tail, add=tail)
            for j in range(c + 1, width):
                if piv[j]:
                    row[j] = F.sub(row[j], F.mul(f, piv[j]))
            row[c] = 0
        pivots.append(c)
        r += 1
    return tuple(tuple(row) for row in rows), len(pivots), tuple(pivots)


def rank(F: FieldSpec, M: Sequence[Sequence[int]]) -> int:
    return rref(F, M)[1]


def solve_system(F: FieldSpec, A: Sequence[Sequence[int]], B: Sequence[Sequence[int]],
                 ops: OpCounter | None = None, ncols: int | None = None):
    """Solve ``A X = B`` for X (cols(A) x cols(B)).

    Returns ``(X0, kernel)`` with X0 one particular solution (as rows) and
    ``kernel`` the right null space of A, or ``None`` when inconsistent.
    """
    if len(A) != len(B):
        raise DimensionError(f"A has {len(A)} rows but right-hand side has {len(B)}")
    cols = ncols if ncols is not None else (len(A[0]) if A else 0)
    k = len(B[0]) if B else 0
    if not A:
        return tuple((0,) * k for _ in range(cols)), Subspace.full(F, cols)
    aug = [tuple(a) + tuple(b) for a, b in zip(A, B)]
    R, rk, piv = rref(F, aug, ops, ncols=cols)
    for row in R[rk:]:
        if any(row[cols:]):
            return None
    X0 = [[0] * k for _ in range(cols)]
    for i, c in enumerate(piv):
        X0[c] = list(R[i][cols:])
    free = [c for c in range(cols) if c not in set(piv)]
    kernel = []
    for fc in free:
        v = [0] * cols
        v[fc] = 1
        for i, c in enumerate(piv):
            if R[i][fc]:
                v[c] = F.neg(R[i][fc])
                _charge(ops, add=1)
        kernel.append(tuple(v))
    return tuple(tuple(x) for x in X0), Subspace.span(F, cols, kernel)


def solve(F: FieldSpec, A: Sequence[Sequence[int]], b: Sequence[int], ops: OpCounter | None = None,
          ncols: int | None = None) -> Coset | None:
    """All solutions of ``A x = b`` as a coset of F^cols, or ``None`` if infeasible."""
    if len(A) != len(b):
        raise DimensionError(f"A has {len(A)} rows but b has length {len(b)}")
    res = solve_system(F, A, [(x,) for x in b], ops, ncols=ncols)
    if res is None:
        return None
    X0, kernel = res
    return Coset.make(tuple(x[0] for x in X0), kernel, ops)


# --------------------------------------------------------------------------
# subspaces and cosets

@dataclass(frozen=True)
class Subspace:
    """Subspace of F^n stored by its RREF basis (no zero rows).

    Construct through :meth:`span`, :meth:`zero` or :meth:`full`; two equal
    subspaces then have identical fields.
    """

    field: FieldSpec
    n: int
    basis: Matrix = ()

    @classmethod
    def span(cls, F: FieldSpec, n: int, vectors: Iterable[Sequence[int]], ops: OpCounter | None = None) -> Subspace:
        vecs = [tuple(v) for v in vectors]
        for v in vecs:
            if len(v) != n:
                raise DimensionError(f"vector of length {len(v)} in F^{n}")
        R, rk, _ = rref(F, vecs, ops)
        return cls(F, n, tuple(R[:rk]))

    @classmethod
    def zero(cls, F: FieldSpec, n: int) -> Subspace:
        return cls(F, n, ())

    @classmethod
    def full(cls, F: FieldSpec, n: int) -> Subspace:
        return cls(F, n, identity(n))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_full(self) -> bool:
        return self.dim == self.n

    @property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x) for row in self.basis)

    def canonical(self) -> Subspace:
        return Subspace.span(self.field, self.n, self.basis)

    def reduce(self, v: Sequence[int], ops: OpCounter | None = None) -> Vector:
        """Zero the pivot coordinates of v by subtracting basis rows."""
        F = self.field
        v = tuple(v)
        for row, pc in zip(self.basis, self.pivots):
            if v[pc]:
                v = vec_axpy(F, v, F.neg(v[pc]), row, ops)
        return v

    def contains(self, v: Sequence[int]) -> bool:
        return not any(self.reduce(v))

    def issubspace(self, other: Subspace) -> bool:
        return all(other.contains(b) for b in self.basis)

    def elements(self) -> Iterator[Vector]:
        F = self.field
        for coeffs in itertools.product(range(F.q), repeat=self.dim):
            v = (0,) * self.n
            for c, b in zip(coeffs, self.basis):
                v = vec_axpy(F, v, c, b)
            yield v

    def __add__(self, other: Subspace) -> Subspace:
        return subspace_sum([self, other])

    def __and__(self, other: Subspace) -> Subspace:
        return subspace_intersect(self, other)


def _check_ambient(*items) -> None:
    ref = items[0]
    for it in items[1:]:
        if it.n != ref.n:
            raise DimensionError(f"ambient dimensions differ: {ref.n} vs {it.n}")
        if it.field != ref.field:
            raise FieldError(f"fields differ: {ref.field} vs {it.field}")


def subspace_sum(spaces: Sequence[Subspace], ops: OpCounter | None = None) -> Subspace:
    """Smallest subspace containing every input."""
    if not spaces:
        raise ValueError("subspace_sum needs at least one subspace")
    _check_ambient(*spaces)
    F, n = spaces[0].field, spaces[0].n
    nonzero = [s for s in spaces if s.dim]
    if not nonzero:
        return Subspace.zero(F, n)
    for s in nonzero:
        if s.is_full:
            return s
    if len(nonzero) == 1:
        return nonzero[0]
    return Subspace.span(F, n, [b for s in nonzero for b in s.basis], ops)


def subspace_intersect(A: Subspace, B: Subspace, ops: OpCounter | None = None) -> Subspace:
    """Zassenhaus: echelonise rows (a|a), (b|0); rows with zero left half span A∩B."""
    _check_ambient(A, B)
    F, n = A.field, A.n
    if A.is_full:
        return B
    if B.is_full or A == B:
        return A
    if A.dim == 0 or B.dim == 0:
        return Subspace.zero(F, n)
    rows = [a + a for a in A.basis] + [b + (0,) * n for b in B.basis]
    R, rk, piv = rref(F, rows, ops)
    inter = [R[i][n:] for i in range(rk) if piv[i] >= n]
    return Subspace.span(F, n, inter, ops)


@dataclass(frozen=True)
class Coset:
    """Affine set ``rep + space`` with rep reduced modulo the space."""

    rep: Vector
    space: Subspace

    @classmethod
    def make(cls, rep: Sequence[int], space: Subspace, ops: OpCounter | None = None) -> Coset:
        if len(rep) != space.n:
            raise DimensionError(f"representative of length {len(rep)} in F^{space.n}")
        return cls(space.reduce(rep, ops), space)

    @classmethod
    def point(cls, F: FieldSpec, v: Sequence[int]) -> Coset:
        return cls(tuple(v), Subspace.zero(F, len(v)))

    @classmethod
    def full(cls, F: FieldSpec, n: int) -> Coset:
        return cls((0,) * n, Subspace.full(F, n))

    @property
    def field(self) -> FieldSpec:
        return self.space.field

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def size(self) -> int:
        return self.field.q**self.dim

    def canonical(self) -> Coset:
        space = self.space.canonical()
        return Coset.make(self.rep, space)

    def contains(self, x: Sequence[int]) -> bool:
        return self.space.contains(vec_sub(self.field, x, self.rep))

    def issubset(self, other: Coset) -> bool:
        return self.space.issubspace(other.space) and other.contains(self.rep)

    def elements(self) -> Iterator[Vector]:
        F = self.field
        for w in self.space.elements():
            yield vec_add(F, self.rep, w)

    def __and__(self, other: Coset) -> Coset | None:
        return coset_intersect(self, other)


def coset_intersect(a: Coset, b: Coset, ops: OpCounter | None = None) -> Coset | None:
    """(a.rep + A) ∩ (b.rep + B): a coset of A∩B, or ``None`` when empty."""
    _check_ambient(a.space, b.space)
    F, n = a.field, a.n
    if a.space.is_full:
        return b
    if b.space.is_full or a == b:
        return a
    d = vec_sub(F, b.rep, a.rep, ops)
    if a.dim == 0 and b.dim == 0:
        return a if not any(d) else None
    # find c, e with sum c_i a_i + sum e_j b_j = d; then x = a.rep + sum c_i a_i
    gens = list(a.space.basis) + list(b.space.basis)
    system = transpose(gens, n)
    sol = solve(F, system, d, ops, ncols=len(gens))
    if sol is None:
        return None
    x = a.rep
    for c, basis_row in zip(sol.rep, a.space.basis):
        x = vec_axpy(F, x, c, basis_row, ops)
    return Coset.make(x, subspace_intersect(a.space, b.space, ops), ops)


def coset_hull(F: FieldSpec, n: int, points: Iterable[Sequence[int]]) -> Coset | None:
    """Smallest coset containing all points (affine hull)."""
    pts = [tuple(p) for p in points]
    if not pts:
        return None
    base = pts[0]
    space = Subspace.span(F, n, [vec_sub(F, p, base) for p in pts[1:]])
    return Coset.make(base, space)
