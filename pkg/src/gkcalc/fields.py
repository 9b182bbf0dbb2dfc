"""Exact scalar arithmetic over Q, Q(i) and GF(p).

Every computation in the library runs over one of these fields; there is
no floating point anywhere.  Field elements are plain Python objects with
operator overloading (Fraction for Q, small wrapper classes otherwise),
and a Field descriptor bundles the constants and string codecs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class FieldMismatch(ValueError):
    code = "FIELD_MISMATCH"


@dataclass(frozen=True, slots=True)
class QI:
    """Element of Q(i): re + im*i with exact rational parts."""

    re: Fraction
    im: Fraction

    def __add__(self, other):
        return QI(self.re + other.re, self.im + other.im)

    def __sub__(self, other):
        return QI(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __mul__(self, other):
        return QI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def __truediv__(self, other):
        n = other.re * other.re + other.im * other.im
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return QI(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __repr__(self):
        return f"QI({self.re},{self.im})"


@dataclass(frozen=True, slots=True)
class Fp:
    """Element of the prime field GF(p)."""

    val: int
    p: int

    def __add__(self, other):
        return Fp((self.val + other.val) % self.p, self.p)

    def __sub__(self, other):
        return Fp((self.val - other.val) % self.p, self.p)

    def __neg__(self):
        return Fp(-self.val % self.p, self.p)

    def __mul__(self, other):
        return Fp((self.val * other.val) % self.p, self.p)

    def __truediv__(self, other):
        if other.val % self.p == 0:
            raise ZeroDivisionError(f"division by zero in GF({self.p})")
        return Fp((self.val * pow(other.val, self.p - 2, self.p)) % self.p, self.p)

    def __bool__(self):
        return self.val % self.p != 0

    def __repr__(self):
        return f"Fp({self.val}%{self.p})"


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class Field:
    """Descriptor for one of the supported exact fields.

    tag is "Q", "Qi" or "Fp:<p>"; two Field objects are interchangeable
    iff their tags agree.
    """

    _cache: dict = {}

    def __new__(cls, tag: str):
        if tag in cls._cache:
            return cls._cache[tag]
        self = super().__new__(cls)
        self.tag = tag
        if tag == "Q":
            self.characteristic = 0
            self.zero = Fraction(0)
            self.one = Fraction(1)
        elif tag == "Qi":
            self.characteristic = 0
            self.zero = QI(Fraction(0), Fraction(0))
            self.one = QI(Fraction(1), Fraction(0))
        elif tag.startswith("Fp:"):
            p = int(tag.split(":", 1)[1])
            if not _is_prime(p):
                raise ValueError(f"{p} is not prime")
            self.characteristic = p
            self.zero = Fp(0, p)
            self.one = Fp(1, p)
        else:
            raise ValueError(f"unknown field tag {tag!r}")
        cls._cache[tag] = self
        return self

    def __repr__(self):
        return f"Field({self.tag})"

    def __eq__(self, other):
        return isinstance(other, Field) and self.tag == other.tag

    def __hash__(self):
        return hash(("Field", self.tag))

    def from_int(self, n: int):
        if self.tag == "Q":
            return Fraction(n)
        if self.tag == "Qi":
            return QI(Fraction(n), Fraction(0))
        return Fp(n % self.characteristic, self.characteristic)

    def i(self):
        if self.tag != "Qi":
            raise FieldMismatch("imaginary unit only exists in Q(i)")
        return QI(Fraction(0), Fraction(1))

    # --- string codec; the JSON interchange stores scalars as strings ---

    def show(self, x) -> str:
        if self.tag == "Q":
            return str(x)
        if self.tag == "Qi":
            return f"{x.re}+{x.im}*i"
        return str(x.val % self.characteristic)

    def parse(self, s: str):
        s = s.strip()
        if self.tag == "Q":
            return Fraction(s)
        if self.tag == "Qi":
            if "i" not in s:
                return QI(Fraction(s), Fraction(0))
            # canonical form "a/b+c/d*i"; also accept bare "c/d*i"
            if s.endswith("*i"):
                head = s[:-2]
                plus = head.rfind("+")
                if plus > 0:
                    return QI(Fraction(head[:plus]), Fraction(head[plus + 1 :]))
                return QI(Fraction(0), Fraction(head))
            raise ValueError(f"cannot parse Q(i) scalar {s!r}")
        return Fp(int(s) % self.characteristic, self.characteristic)


RATIONAL = Field("Q")
GAUSSIAN = Field("Qi")


def prime_field(p: int) -> Field:
    return Field(f"Fp:{p}")
