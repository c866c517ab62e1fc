"""Exact arithmetic substrate: big rationals, sparse multivariate polynomials
and rational functions in canonical form.

Everything downstream (metric components, curvature, tractor slots, operator
coefficients) is a ``RatFun``: a fully reduced fraction of two polynomials
over Q in the chart coordinates.  No floating point anywhere.

Canonical forms
---------------
* ``Poly`` stores a rational ``content`` times a *primitive* integer
  coefficient dict (gcd of coefficients 1, positive leading coefficient under
  graded-lexicographic order).  Two polynomials are equal iff their
  normalized data are equal.
* ``RatFun`` keeps num/den coprime (polynomial gcd and content removed) with
  the denominator primitive and its grlex leading coefficient positive, so
  equality of rational functions is plain structural equality.

Coordinates are named ``x1..xn`` internally; display names are configurable
at printing time.
"""

from __future__ import annotations

import heapq
import math
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

# Arbitrary-precision rational scalar.  The stdlib type already maintains
# gcd-reduced numerator/denominator with a positive denominator.
Rat = Fraction

Exps = tuple  # exponent multi-index, one int per variable


class FieldError(ArithmeticError):
    """Invalid field operation (division by the zero rational function)."""


class PoleError(FieldError):
    """Evaluation of a rational function at a pole of its denominator."""


def rat_to_str(q: Fraction) -> str:
    """Serialize a rational as ``"p/q"`` (``q`` omitted when 1)."""
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)


def rat_from_str(s: str) -> Fraction:
    return Fraction(s)


def _grlex(e: Exps):
    # graded lex: total degree first, then lex with x1 most significant
    return (sum(e), e)


def _int_content(values: Iterable[int]) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, v)
        if g == 1:
            break
    return g


class Poly:
    """Sparse multivariate polynomial over Q.

    Internally a Fraction ``content`` times a primitive integer term dict;
    the rational content keeps the inner loops in pure integer arithmetic.
    Immutable after construction.
    """

    __slots__ = ("vars", "content", "coef", "_hash")

    def __init__(self, vars: Sequence[str], terms: Optional[Mapping[Exps, object]] = None):
        self.vars = tuple(vars)
        self._hash = None
        if not terms:
            self.content = Fraction(0)
            self.coef = {}
            return
        n = len(self.vars)
        clean: dict[Exps, Fraction] = {}
        for e, c in terms.items():
            e = tuple(e)
            if len(e) != n:
                raise ValueError("exponent vector has wrong length")
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
        clean = {e: c for e, c in clean.items() if c}
        if not clean:
            self.content = Fraction(0)
            self.coef = {}
            return
        den_lcm = 1
        for c in clean.values():
            den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
        ints = {e: int(c * den_lcm) for e, c in clean.items()}
        g = _int_content(ints.values())
        lead = max(ints, key=_grlex)
        if ints[lead] < 0:
            g = -g
        self.content = Fraction(g, den_lcm)
        self.coef = {e: v // g for e, v in ints.items()}

    @classmethod
    def _raw(cls, vars: tuple, content: Fraction, coef: dict) -> "Poly":
        """Trusted constructor: ``coef`` already primitive with positive grlex lc."""
        p = object.__new__(cls)
        p.vars = vars
        p.content = content
        p.coef = coef
        p._hash = None
        return p

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, vars) -> "Poly":
        return cls._raw(tuple(vars), Fraction(0), {})

    @classmethod
    def const(cls, vars, c) -> "Poly":
        c = Fraction(c)
        vars = tuple(vars)
        if not c:
            return cls.zero(vars)
        return cls._raw(vars, c, {(0,) * len(vars): 1})

    @classmethod
    def variable(cls, vars, i: int) -> "Poly":
        vars = tuple(vars)
        e = [0] * len(vars)
        e[i] = 1
        return cls._raw(vars, Fraction(1), {tuple(e): 1})

    @classmethod
    def monomial(cls, vars, exps: Exps, coeff=1) -> "Poly":
        return cls(vars, {tuple(exps): coeff})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.coef

    def is_const(self) -> bool:
        return not self.coef or (len(self.coef) == 1 and not any(next(iter(self.coef))))

    def as_const(self) -> Fraction:
        if not self.is_const():
            raise ValueError("polynomial is not constant")
        return self.content

    def total_degree(self) -> int:
        if not self.coef:
            return 0
        return max(sum(e) for e in self.coef)

    def leading_exps(self) -> Exps:
        return max(self.coef, key=_grlex)

    def terms(self) -> dict[Exps, Fraction]:
        """Expanded term map with rational coefficients."""
        return {e: self.content * v for e, v in self.coef.items()}

    # -- ring operations ---------------------------------------------------

    def _combine(self, other: "Poly", sign: int) -> "Poly":
        if self.is_zero():
            return other if sign > 0 else -other
        if other.is_zero():
            return self
        a, b = self.content, other.content * sign
        den = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
        m1 = a.numerator * (den // a.denominator)
        m2 = b.numerator * (den // b.denominator)
        acc = {e: m1 * v for e, v in self.coef.items()}
        for e, v in other.coef.items():
            w = acc.get(e, 0) + m2 * v
            if w:
                acc[e] = w
            elif e in acc:
                del acc[e]
        if not acc:
            return Poly.zero(self.vars)
        g = _int_content(acc.values())
        if acc[max(acc, key=_grlex)] < 0:
            g = -g
        return Poly._raw(self.vars, Fraction(g, den), {e: v // g for e, v in acc.items()})

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._combine(other, -1)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other._combine(self, -1)

    def __neg__(self):
        return Poly._raw(self.vars, -self.content, self.coef)

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.vars != self.vars:
                raise ValueError("polynomials over different variable lists")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.vars, other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = self.content * other
            if not c:
                return Poly.zero(self.vars)
            return Poly._raw(self.vars, c, self.coef)
        if not isinstance(other, Poly):
            return NotImplemented
        if other.vars != self.vars:
            raise ValueError("polynomials over different variable lists")
        if self.is_zero() or other.is_zero():
            return Poly.zero(self.vars)
        a, b = self.coef, other.coef
        if len(a) > len(b):
            a, b = b, a
        acc: dict[Exps, int] = {}
        for e1, v1 in a.items():
            for e2, v2 in b.items():
                e = tuple(map(sum, zip(e1, e2)))
                w = acc.get(e, 0) + v1 * v2
                if w:
                    acc[e] = w
                elif e in acc:
                    del acc[e]
        # product of primitive polys is primitive (Gauss) and grlex lc > 0
        return Poly._raw(self.vars, self.content * other.content, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        result = Poly.const(self.vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- calculus ----------------------------------------------------------

    def partial(self, i: int) -> "Poly":
        """Exact partial derivative with respect to variable ``i`` (0-based)."""
        acc: dict[Exps, int] = {}
        for e, v in self.coef.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                acc[ne] = acc.get(ne, 0) + v * e[i]
        if not acc:
            return Poly.zero(self.vars)
        g = _int_content(acc.values())
        if acc[max(acc, key=_grlex)] < 0:
            g = -g
        return Poly._raw(self.vars, self.content * g, {e: v // g for e, v in acc.items()})

    def eval(self, point: Sequence[Fraction]) -> Fraction:
        if len(point) != len(self.vars):
            raise ValueError("point has wrong dimension")
        total = Fraction(0)
        powers: list[dict[int, Fraction]] = [dict() for _ in point]
        for e, v in self.coef.items():
            term = Fraction(v)
            for i, k in enumerate(e):
                if k:
                    cache = powers[i]
                    if k not in cache:
                        cache[k] = Fraction(point[i]) ** k
                    term *= cache[k]
            total += term
        return total * self.content

    # -- division & gcd ----------------------------------------------------

    def exact_div(self, d: "Poly") -> Optional["Poly"]:
        """Return self / d when the division is exact, else None."""
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return Poly.zero(self.vars)
        if len(d.coef) > 6 and _IRREDUCIBLE_REGISTRY:
            # dividing by a power of a registered factor: a sequence of
            # divisions by the small base beats one division by the power
            mults, rest = _registered_multiplicity_cached(d)
            if mults and len(rest) == 1 and not any(next(iter(rest))):
                unit = next(iter(rest.values()))
                cur = self.coef
                for key, j in mults.items():
                    base = _IRREDUCIBLE_REGISTRY[key][1]
                    for _ in range(j):
                        cur = _exact_div_int(cur, base)
                        if cur is None:
                            return None
                return Poly._raw(self.vars, self.content / (d.content * unit), cur)
        q = _exact_div_int(self.coef, d.coef)
        if q is None:
            return None
        return Poly._raw(self.vars, self.content / d.content, q)

    # -- comparisons, hashing, display --------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.vars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return (self.vars == other.vars and self.content == other.content
                and self.coef == other.coef)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, self.content, tuple(sorted(self.coef.items()))))
        return self._hash

    def __str__(self):
        return self.to_str()

    __repr__ = __str__

    def to_str(self, names: Optional[Sequence[str]] = None) -> str:
        if self.is_zero():
            return "0"
        names = list(names) if names else list(self.vars)
        out = []
        for e in sorted(self.coef, key=_grlex, reverse=True):
            c = self.content * self.coef[e]
            mono = "*".join(
                ("%s^%d" % (names[i], k) if k > 1 else names[i])
                for i, k in enumerate(e) if k
            )
            if not mono:
                piece = rat_to_str(abs(c))
            elif abs(c) == 1:
                piece = mono
            else:
                piece = rat_to_str(abs(c)) + "*" + mono
            out.append(("- " if c < 0 else "+ ") + piece)
        s = " ".join(out)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    # -- serialization -----------------------------------------------------

    def to_json(self) -> list:
        return [
            {"exponents": list(e), "coeff": rat_to_str(self.content * v)}
            for e, v in sorted(self.coef.items(), key=lambda kv: _grlex(kv[0]), reverse=True)
        ]

    @classmethod
    def from_json(cls, vars, data: list) -> "Poly":
        return cls(vars, {tuple(t["exponents"]): rat_from_str(t["coeff"]) for t in data})


def _int_eval(coef: dict, pt: tuple) -> int:
    total = 0
    cache: dict = {}
    for e, v in coef.items():
        term = v
        for i, k in enumerate(e):
            if k:
                key = (i, k)
                p = cache.get(key)
                if p is None:
                    p = pt[i] ** k
                    cache[key] = p
                term *= p
        total += term
    return total


_PROBE_BASES = ((3, 5, 7, 11, 13, 17), (-2, 9, -5, 4, -7, 6))


def _certainly_not_divisible(num: dict, den: dict, nvars: int) -> bool:
    """Integer-point probe: if den(p) does not divide num(p) the polynomial
    division cannot be exact.  One-sided and cheap."""
    for base in _PROBE_BASES:
        pt = base[:nvars]
        dv = _int_eval(den, pt)
        if dv == 0:
            continue
        if _int_eval(num, pt) % dv:
            return True
    return False


def _exact_div_int(num: dict, den: dict) -> Optional[dict]:
    """Exact division of integer term dicts; None when not exact.

    Heap-driven: dividend terms and correction terms are merged lazily in
    graded-lexicographic order, so failures are detected without rescanning
    the remainder."""
    if not num:
        return {}
    if len(den) == 1:
        (de, dv), = den.items()
        if not any(de):
            if dv in (1, -1):
                return num if dv == 1 else {e: -v for e, v in num.items()}
            if any(v % dv for v in num.values()):
                return None
            return {e: v // dv for e, v in num.items()}
        quo = {}
        for e, v in num.items():
            if v % dv:
                return None
            qe = tuple(a - b for a, b in zip(e, de))
            if any(k < 0 for k in qe):
                return None
            quo[qe] = v // dv
        return quo
    n = len(next(iter(num)))
    if _certainly_not_divisible(num, den, n):
        return None
    dlead = max(den, key=_grlex)
    dval = den[dlead]
    dtail = [(e, v) for e, v in den.items() if e != dlead]
    # heap of (negated grlex key, exponent); pending sums tracked separately
    pending: dict[Exps, int] = dict(num)
    heap = [((-sum(e),) + tuple(-k for k in e), e) for e in num]
    heapq.heapify(heap)
    quo: dict[Exps, int] = {}
    while heap:
        _, e = heapq.heappop(heap)
        v = pending.pop(e, 0)
        if not v:
            continue
        qe = tuple(a - b for a, b in zip(e, dlead))
        if any(k < 0 for k in qe) or v % dval:
            return None
        qv = v // dval
        quo[qe] = qv
        for de, dv in dtail:
            ne = tuple(a + b for a, b in zip(qe, de))
            if ne in pending:
                pending[ne] -= qv * dv
            else:
                pending[ne] = -qv * dv
                heapq.heappush(heap, ((-sum(ne),) + tuple(-k for k in ne), ne))
    return quo if not any(pending.values()) else None


# ---------------------------------------------------------------------------
# polynomial gcd: monomial/divisibility fast paths, then heuristic gcd with a
# primitive-PRS fallback.  Contract: full reduction, primitive result with
# positive grlex leading coefficient.
#
# Charts may register known irreducible polynomials (the stereographic
# conformal factor).  When both gcd arguments are divisible by powers of a
# registered irreducible the common power is split off by verified exact
# divisions, which turns the dominant denominator-cancellation gcds into a
# couple of integer probes.  Soundness does not depend on the registry --
# every division is verified and the general algorithm handles the rest.
# ---------------------------------------------------------------------------

_IRREDUCIBLE_REGISTRY: dict = {}


def register_irreducible(p: "Poly") -> None:
    """Register an irreducible polynomial as a likely common factor."""
    if p.is_zero() or p.is_const():
        return
    key = (p.vars, tuple(sorted(p.coef.items())))
    if key in _IRREDUCIBLE_REGISTRY:
        return
    n = len(p.vars)
    probes = []
    for base in _PROBE_BASES:
        pt = base[:n]
        val = _int_eval(p.coef, pt)
        if abs(val) > 1:
            probes.append((pt, val))
    _IRREDUCIBLE_REGISTRY[key] = (p.vars, dict(p.coef), tuple(probes))
    # memoized factor splits are relative to the registry contents: anything
    # cached before this registration may silently under-extract
    _MULT_CACHE.clear()


def _registered_multiplicity(coef: dict, vars: tuple) -> tuple:
    """Split off registered irreducible factors: returns (multiplicities,
    reduced coef dict) where multiplicities maps registry keys to powers."""
    mults = {}
    cur = coef
    for key, (rvars, rcoef, probes) in _IRREDUCIBLE_REGISTRY.items():
        if rvars != vars:
            continue
        j = 0
        while True:
            maybe = True
            for pt, val in probes:
                if _int_eval(cur, pt) % val:
                    maybe = False
                    break
            if not maybe:
                break
            q = _exact_div_int(cur, rcoef)
            if q is None:
                break
            cur = q
            j += 1
        if j:
            mults[key] = j
    return mults, cur


_MULT_CACHE: dict = {}


def _registered_multiplicity_cached(p: "Poly") -> tuple:
    """Per-polynomial memo of the registered-factor split (denominators are
    powers of the conformal factor and recur constantly)."""
    hit = _MULT_CACHE.get(p)
    if hit is None:
        if len(_MULT_CACHE) > 200000:
            _MULT_CACHE.clear()
        hit = _registered_multiplicity(p.coef, p.vars)
        _MULT_CACHE[p] = hit
    return hit


class _HeuristicFailed(Exception):
    pass


def _eval_last_var(coef: dict, xi: int) -> dict:
    """Substitute the last variable by the integer xi, dropping it."""
    acc: dict[Exps, int] = {}
    powers = {0: 1}
    for e, v in coef.items():
        k = e[-1]
        if k not in powers:
            powers[k] = xi ** k
        ne = e[:-1]
        w = acc.get(ne, 0) + v * powers[k]
        if w:
            acc[ne] = w
        elif ne in acc:
            del acc[ne]
    return acc


def _heugcd(f: dict, g: dict, nvars: int) -> dict:
    """Heuristic gcd of integer term dicts, verified by exact division.

    Integer contents are split off at every level (classical GCDHEU): the
    xi-adic digit reconstruction only behaves for primitive images, and the
    content gcd is multiplied back onto the verified primitive part.
    """
    cf = _int_content(f.values())
    cg = _int_content(g.values())
    c = math.gcd(cf, cg)
    if nvars == 0:
        return {(): c}
    if cf != 1:
        f = {e: v // cf for e, v in f.items()}
    if cg != 1:
        g = {e: v // cg for e, v in g.items()}
    fn = max(abs(v) for v in f.values())
    gn = max(abs(v) for v in g.values())
    xi = 2 * min(fn, gn) + 29
    for _ in range(6):
        fe = _eval_last_var(f, xi)
        ge = _eval_last_var(g, xi)
        if fe and ge:
            try:
                h = _heugcd(fe, ge, nvars - 1)
            except _HeuristicFailed:
                h = None
            if h and h != {(): 0}:
                cand = _interpolate_last_var(h, xi)
                if cand:
                    if len(cand) == 1 and not any(next(iter(cand))):
                        # primitive inputs: a constant common divisor is a unit
                        return {(0,) * nvars: c}
                    hc = _int_content(cand.values())
                    if cand[max(cand, key=_grlex)] < 0:
                        hc = -hc
                    cand = {e: v // hc for e, v in cand.items()}
                    if _exact_div_int(f, cand) is not None \
                            and _exact_div_int(g, cand) is not None:
                        return cand if c == 1 else {e: c * v for e, v in cand.items()}
        xi = xi * 73794 // 27011 + 47
    raise _HeuristicFailed


def _interpolate_last_var(h: dict, xi: int) -> Optional[dict]:
    """Recover the last variable from a xi-adic image via balanced digits."""
    cur = dict(h)
    out: dict[Exps, int] = {}
    power = 0
    half = xi // 2
    while cur:
        nxt: dict[Exps, int] = {}
        for e, v in cur.items():
            r = v % xi
            if r > half:
                r -= xi
            if r:
                out[e + (power,)] = r
            q = (v - r) // xi
            if q:
                nxt[e] = q
        cur = nxt
        power += 1
        if power > 2000:
            return None
    return out


def _prs_gcd(f: Poly, g: Poly) -> Poly:
    """Primitive pseudo-remainder-sequence gcd (guaranteed fallback)."""
    if f.is_zero():
        return _make_primitive(g)
    if g.is_zero():
        return _make_primitive(f)
    active = [i for i in range(len(f.vars))
              if any(e[i] for e in f.coef) or any(e[i] for e in g.coef)]
    if not active:
        return Poly.const(f.vars, 1)
    # main variable: smallest max-degree keeps pseudo-division shallow
    def maxdeg(p: Poly, i: int) -> int:
        return max((e[i] for e in p.coef), default=0)
    m = min(active, key=lambda i: max(maxdeg(f, i), maxdeg(g, i)))

    def to_uni(p: Poly) -> dict[int, Poly]:
        buckets: dict[int, dict] = {}
        for e, v in p.coef.items():
            ne = e[:m] + (0,) + e[m + 1:]
            buckets.setdefault(e[m], {})[ne] = v
        return {d: Poly(p.vars, t) for d, t in buckets.items()}

    def from_uni(u: dict[int, Poly]) -> Poly:
        terms: dict[Exps, Fraction] = {}
        for d, p in u.items():
            for e, v in p.coef.items():
                ne = e[:m] + (d,) + e[m + 1:]
                terms[ne] = p.content * v
        return Poly(f.vars, terms)

    def content_uni(u: dict[int, Poly]) -> Poly:
        c = Poly.zero(f.vars)
        for p in u.values():
            c = poly_gcd(c, p)
            if c.is_const() and not c.is_zero():
                break
        return c

    def divide_uni(u: dict[int, Poly], c: Poly) -> dict[int, Poly]:
        return {d: p.exact_div(c) for d, p in u.items()}

    fu, gu = to_uni(f), to_uni(g)
    cf, cg = content_uni(fu), content_uni(gu)
    cont = poly_gcd(cf, cg)
    fu, gu = divide_uni(fu, cf), divide_uni(gu, cg)

    def deg(u):
        return max(u) if u else -1

    if deg(fu) < deg(gu):
        fu, gu = gu, fu
    while gu:
        # pseudo-remainder of fu by gu in the main variable
        dl = deg(fu) - deg(gu)
        lc = gu[deg(gu)]
        r = {d: p * (lc ** (dl + 1)) for d, p in fu.items()}
        while r and deg(r) >= deg(gu):
            dr, dg = deg(r), deg(gu)
            q = r[dr].exact_div(lc)
            if q is None:
                # stay in the polynomial ring: scale once more
                r = {d: p * lc for d, p in r.items()}
                continue
            for d, p in gu.items():
                nd = d + dr - dg
                w = r.get(nd, Poly.zero(f.vars)) - q * p
                if w.is_zero():
                    r.pop(nd, None)
                else:
                    r[nd] = w
        fu = gu
        if r:
            c = content_uni(r)
            gu = divide_uni(r, c)
        else:
            gu = {}
    result = from_uni(fu) * cont
    return _make_primitive(result)


def _make_primitive(p: Poly) -> Poly:
    if p.is_zero():
        return p
    return Poly._raw(p.vars, Fraction(1), p.coef)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Gcd of two polynomials: primitive, positive grlex leading coefficient.

    gcd(0, b) = primitive part of b; gcd of anything with a nonzero constant
    is 1 (coefficients live in a field).
    """
    if a.vars != b.vars:
        raise ValueError("polynomials over different variable lists")
    if a.is_zero():
        return _make_primitive(b)
    if b.is_zero():
        return _make_primitive(a)
    if a.is_const() or b.is_const():
        return Poly.const(a.vars, 1)
    if a.coef == b.coef:
        return _make_primitive(a)
    # common monomial factor
    n = len(a.vars)
    mins = tuple(
        min(min(e[i] for e in a.coef), min(e[i] for e in b.coef)) for i in range(n)
    )
    if any(mins):
        strip = lambda coef: {tuple(x - y for x, y in zip(e, mins)): v for e, v in coef.items()}
        a2 = Poly._raw(a.vars, Fraction(1), strip(a.coef))
        b2 = Poly._raw(b.vars, Fraction(1), strip(b.coef))
        inner = poly_gcd(a2, b2)
        mono = Poly._raw(a.vars, Fraction(1), {mins: 1})
        return _make_primitive(inner * mono)
    small, big = (a, b) if len(a.coef) <= len(b.coef) else (b, a)
    if big.exact_div(small) is not None:
        return _make_primitive(small)
    if _IRREDUCIBLE_REGISTRY:
        ma, ra = _registered_multiplicity_cached(a)
        mb, rb = _registered_multiplicity_cached(b)
        if ma or mb:
            factor = Poly.const(a.vars, 1)
            for key in set(ma) & set(mb):
                j = min(ma[key], mb[key])
                base = Poly._raw(a.vars, Fraction(1), dict(_IRREDUCIBLE_REGISTRY[key][1]))
                factor = factor * base ** j
            ra_p = Poly._raw(a.vars, Fraction(1), ra)
            rb_p = Poly._raw(b.vars, Fraction(1), rb)
            rest = poly_gcd(ra_p, rb_p) if not (ra_p.is_const() or rb_p.is_const()) \
                else Poly.const(a.vars, 1)
            return _make_primitive(factor * rest)
    try:
        h = _heugcd(a.coef, b.coef, n)
    except _HeuristicFailed:
        return _prs_gcd(a, b)
    if not h or (len(h) == 1 and not any(next(iter(h)))):
        return Poly.const(a.vars, 1)
    gc = _int_content(h.values())
    if h[max(h, key=_grlex)] < 0:
        gc = -gc
    if gc != 1:
        h = {e: v // gc for e, v in h.items()}
    return Poly._raw(a.vars, Fraction(1), h)


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------


class RatFun:
    """Fully reduced multivariate rational function num/den over Q."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly, _reduced: bool = False):
        if den.is_zero():
            raise FieldError("rational function with zero denominator")
        self._hash = None
        if num.is_zero():
            self.num = Poly.zero(num.vars)
            self.den = Poly.const(num.vars, 1)
            return
        if not _reduced:
            g = poly_gcd(num, den)
            if not g.is_const():
                num = num.exact_div(g)
                den = den.exact_div(g)
        # fold the denominator content (and sign) into the numerator
        c = den.content
        if c != 1:
            num = num * (1 / c)
            den = Poly._raw(den.vars, Fraction(1), den.coef)
        self.num = num
        self.den = den

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_poly(cls, p: Poly) -> "RatFun":
        r = object.__new__(cls)
        r.num = p
        r.den = Poly.const(p.vars, 1)
        r._hash = None
        return r

    @classmethod
    def const(cls, vars, c) -> "RatFun":
        return cls.from_poly(Poly.const(vars, c))

    @classmethod
    def variable(cls, vars, i: int) -> "RatFun":
        return cls.from_poly(Poly.variable(vars, i))

    @classmethod
    def zero(cls, vars) -> "RatFun":
        return cls.from_poly(Poly.zero(vars))

    @classmethod
    def one(cls, vars) -> "RatFun":
        return cls.from_poly(Poly.const(vars, 1))

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def as_const(self) -> Fraction:
        if not self.is_const():
            raise ValueError("rational function is not constant")
        return self.num.as_const()

    @property
    def vars(self):
        return self.num.vars

    # -- field operations ----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, RatFun):
            return other
        if isinstance(other, Poly):
            return RatFun.from_poly(other)
        if isinstance(other, (int, Fraction)):
            return RatFun.const(self.vars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.den.coef == other.den.coef:
            num = self.num + other.num
            if num.is_zero():
                return RatFun.zero(self.vars)
            g = poly_gcd(num, self.den)
            if g.is_const():
                return RatFun(num, self.den, _reduced=True)
            return RatFun(num.exact_div(g), self.den.exact_div(g), _reduced=True)
        g = poly_gcd(self.den, other.den)
        if g.is_const():
            num = self.num * other.den + other.num * self.den
            return RatFun(num, self.den * other.den, _reduced=True) if not num.is_zero() \
                else RatFun.zero(self.vars)
        e1 = self.den.exact_div(g)
        e2 = other.den.exact_div(g)
        num = self.num * e2 + other.num * e1
        if num.is_zero():
            return RatFun.zero(self.vars)
        h = poly_gcd(num, g)
        if h.is_const():
            return RatFun(num, e1 * other.den, _reduced=True)
        return RatFun(num.exact_div(h), e1 * other.den.exact_div(h), _reduced=True)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        r = object.__new__(RatFun)
        r.num = -self.num
        r.den = self.den
        r._hash = None
        return r

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return RatFun.zero(self.vars)
            r = object.__new__(RatFun)
            r.num = self.num * other
            r.den = self.den
            r._hash = None
            return r
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RatFun.zero(self.vars)
        n1, d1, n2, d2 = self.num, self.den, other.num, other.den
        if not d2.is_const():
            g = poly_gcd(n1, d2)
            if not g.is_const():
                n1 = n1.exact_div(g)
                d2 = d2.exact_div(g)
        if not d1.is_const():
            g = poly_gcd(n2, d1)
            if not g.is_const():
                n2 = n2.exact_div(g)
                d1 = d1.exact_div(g)
        return RatFun(n1 * n2, d1 * d2, _reduced=True)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise FieldError("division by the zero rational function")
        inv = RatFun(other.den, other.num)
        return self * inv

    def __rtruediv__(self, other):
        other = self._coerce(other)
        return other / self

    def __pow__(self, k: int):
        if k == 0:
            return RatFun.one(self.vars)
        if k < 0:
            if self.is_zero():
                raise FieldError("negative power of zero")
            base = RatFun(self.den, self.num)
            k = -k
        else:
            base = self
        out = base
        for _ in range(k - 1):
            out = out * base
        return out

    # -- calculus ------------------------------------------------------------

    def partial(self, i: int) -> "RatFun":
        """Exact partial derivative (0-based variable index), quotient rule."""
        if self.den.is_const():
            return RatFun(self.num.partial(i), self.den, _reduced=True)
        dden = self.den.partial(i)
        e = poly_gcd(self.den, dden) if not dden.is_zero() else Poly.const(self.vars, 1)
        if e.is_const():
            num = self.num.partial(i) * self.den - self.num * dden
            return RatFun(num, self.den * self.den)
        dbar = self.den.exact_div(e)
        num = self.num.partial(i) * dbar - self.num * dden.exact_div(e)
        return RatFun(num, dbar * self.den)

    d = partial  # value-protocol alias used by the tensor layer

    def eval(self, point: Sequence[Fraction]) -> Fraction:
        dv = self.den.eval(point)
        if dv == 0:
            raise PoleError("evaluation at a pole of the denominator")
        return self.num.eval(point) / dv

    # -- comparisons, hashing, display ----------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = self._coerce(other)
        if not isinstance(other, RatFun):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __str__(self):
        return self.to_str()

    __repr__ = __str__

    def to_str(self, names: Optional[Sequence[str]] = None) -> str:
        if self.den.is_const():
            return self.num.to_str(names)
        ns = self.num.to_str(names)
        ds = self.den.to_str(names)
        if len(self.num.coef) > 1:
            ns = "(" + ns + ")"
        if len(self.den.coef) > 1:
            ds = "(" + ds + ")"
        return ns + "/" + ds

    def to_json(self) -> dict:
        return {"num": self.num.to_json(), "den": self.den.to_json()}

    @classmethod
    def from_json(cls, vars, data: dict) -> "RatFun":
        return cls(Poly.from_json(vars, data["num"]), Poly.from_json(vars, data["den"]))


# ---------------------------------------------------------------------------
# operation surface used by the rest of the package and the test suite
# ---------------------------------------------------------------------------


def field_arith(a: RatFun, b: RatFun, op: str) -> RatFun:
    """Exact field arithmetic dispatcher; ``op`` in {add, sub, mul, div}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown operation %r" % (op,))


def partial(f: RatFun, i: int) -> RatFun:
    """Partial derivative with respect to coordinate ``i`` (1-based)."""
    if not 1 <= i <= len(f.vars):
        raise ValueError("coordinate index out of range")
    return f.partial(i - 1)


def eval_at(f: RatFun, point: Sequence[Fraction]) -> Fraction:
    """Exact evaluation; raises PoleError on a denominator zero."""
    return f.eval(tuple(Fraction(c) for c in point))


def default_vars(n: int) -> tuple:
    """Internal coordinate names x1..xn."""
    return tuple("x%d" % (i + 1) for i in range(n))
