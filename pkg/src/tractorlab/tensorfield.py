"""Abstract-index tensor fields over a chart.

A ``TensorField`` maps index tuples to components (usually ``RatFun``; the
operator-valued layer reuses the same machinery with operator components).
Absent components are zero.  Declared index symmetries are stored once per
orbit: a field with a symmetric or antisymmetric slot group keeps only the
canonical representative of each component orbit, which keeps valence-6
objects in three dimensions small.

Index conventions: slots are 0-based internally with variance 'u' (upper) or
'd' (lower); JSON uses 1-based indices.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .exactfield import RatFun

SymGroup = tuple  # (kind 's'|'a', tuple of slot positions)


def _perm_sign(seq: Sequence[int]) -> int:
    sign = 1
    vals = list(seq)
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if vals[i] > vals[j]:
                sign = -sign
    return sign


class TensorField:
    """Sparse tensor field with optional declared slot symmetries."""

    __slots__ = ("space", "variance", "comp", "sym")

    def __init__(self, space, variance, comp=None, sym=None, _canonical=False):
        self.space = space
        self.variance = tuple(variance)
        self.sym = tuple((k, tuple(slots)) for k, slots in sym) if sym else ()
        for kind, slots in self.sym:
            if kind not in ("s", "a"):
                raise ValueError("symmetry kind must be 's' or 'a'")
            vs = {self.variance[s] for s in slots}
            if len(vs) > 1:
                raise ValueError("symmetry group mixes index variances")
        store: dict = {}
        if comp:
            if _canonical:
                for idx, v in comp.items():
                    if not v.is_zero():
                        store[tuple(idx)] = v
            else:
                for idx, v in comp.items():
                    if v.is_zero():
                        continue
                    r, sign = self._canon(tuple(idx))
                    if sign == 0:
                        continue
                    store[r] = v if sign == 1 else -v
        self.comp = store

    # -- canonical index handling -------------------------------------------

    def _canon(self, idx: tuple) -> tuple:
        """Canonical orbit representative and sign (0 when forced zero)."""
        if not self.sym:
            return idx, 1
        lst = list(idx)
        sign = 1
        for kind, slots in self.sym:
            vals = [lst[s] for s in slots]
            if kind == "s":
                vals.sort()
            else:
                if len(set(vals)) != len(vals):
                    return idx, 0
                sign *= _perm_sign(vals)
                vals.sort()
            for s, v in zip(slots, vals):
                lst[s] = v
        return tuple(lst), sign

    def _orbit_size(self, rep: tuple) -> int:
        size = 1
        for kind, slots in self.sym:
            vals = [rep[s] for s in slots]
            k = len(vals)
            if kind == "a":
                size *= math.factorial(k)
            else:
                counts: dict[int, int] = {}
                for v in vals:
                    counts[v] = counts.get(v, 0) + 1
                sub = math.factorial(k)
                for c in counts.values():
                    sub //= math.factorial(c)
                size *= sub
        return size

    # -- basic queries -------------------------------------------------------

    @property
    def valence(self) -> int:
        return len(self.variance)

    def get(self, idx: tuple):
        """Component at ``idx`` or None when zero."""
        r, sign = self._canon(tuple(idx))
        if sign == 0:
            return None
        v = self.comp.get(r)
        if v is None:
            return None
        return v if sign == 1 else -v

    def component(self, idx: tuple) -> RatFun:
        v = self.get(idx)
        if v is None:
            return RatFun.zero(self.space.vars)
        return v

    def items(self) -> Iterator[tuple]:
        """All nonzero components, expanded over symmetry orbits."""
        if not self.sym:
            yield from self.comp.items()
            return
        for rep, v in self.comp.items():
            for idx, sign in self._orbit(rep):
                yield idx, (v if sign == 1 else -v)

    def _orbit(self, rep: tuple):
        choices = []
        for kind, slots in self.sym:
            vals = [rep[s] for s in slots]
            seen = set()
            opts = []
            for perm in itertools.permutations(vals):
                if perm in seen:
                    continue
                seen.add(perm)
                opts.append((perm, _perm_sign_relative(vals, perm) if kind == "a" else 1))
            choices.append((slots, opts))
        for combo in itertools.product(*(opts for _, opts in choices)):
            idx = list(rep)
            sign = 1
            for (slots, _), (perm, s) in zip(choices, combo):
                for pos, v in zip(slots, perm):
                    idx[pos] = v
                sign *= s
            yield tuple(idx), sign

    def is_zero(self) -> bool:
        return not self.comp

    # -- arithmetic -----------------------------------------------------------

    def _check_compatible(self, other: "TensorField"):
        if self.space is not other.space and self.space.key() != other.space.key():
            raise ValueError("tensor fields over different model spaces")
        if self.variance != other.variance:
            raise ValueError("tensor fields with different index structure")

    def __add__(self, other: "TensorField") -> "TensorField":
        self._check_compatible(other)
        if self.sym == other.sym:
            acc = dict(self.comp)
            for k, v in other.comp.items():
                w = acc.get(k)
                w = v if w is None else w + v
                if w.is_zero():
                    acc.pop(k, None)
                else:
                    acc[k] = w
            return TensorField(self.space, self.variance, acc, self.sym, _canonical=True)
        acc = dict(self.items())
        for k, v in other.items():
            w = acc.get(k)
            w = v if w is None else w + v
            if w.is_zero():
                acc.pop(k, None)
            else:
                acc[k] = w
        return TensorField(self.space, self.variance, acc, None, _canonical=True)

    def __sub__(self, other: "TensorField") -> "TensorField":
        return self + (-other)

    def __neg__(self) -> "TensorField":
        return TensorField(self.space, self.variance,
                           {k: -v for k, v in self.comp.items()}, self.sym, _canonical=True)

    def scale(self, c) -> "TensorField":
        """Multiply every component by a scalar (int, Fraction or RatFun)."""
        if isinstance(c, RatFun) and c.is_zero():
            return TensorField(self.space, self.variance, {}, self.sym, _canonical=True)
        if not isinstance(c, RatFun) and not c:
            return TensorField(self.space, self.variance, {}, self.sym, _canonical=True)
        return TensorField(self.space, self.variance,
                           {k: v * c if isinstance(c, (int, Fraction)) else c * v
                            for k, v in self.comp.items()},
                           self.sym, _canonical=True)

    def __mul__(self, c):
        if isinstance(c, (int, Fraction, RatFun)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    # -- structural operations -------------------------------------------------

    def tensor_product(self, other: "TensorField") -> "TensorField":
        if self.space.key() != other.space.key():
            raise ValueError("tensor fields over different model spaces")
        variance = self.variance + other.variance
        off = self.valence
        sym = self.sym + tuple((k, tuple(s + off for s in slots)) for k, slots in other.sym)
        acc: dict = {}
        others = list(other.items())
        for i1, v1 in self.items():
            for i2, v2 in others:
                acc[i1 + i2] = v1 * v2
        return TensorField(self.space, variance, acc, sym)

    def contract(self, i: int, j: int) -> "TensorField":
        """Contract slot ``i`` against slot ``j`` (opposite variance)."""
        if i == j:
            raise ValueError("cannot contract a slot with itself")
        if self.variance[i] == self.variance[j]:
            raise ValueError("contraction requires one upper and one lower slot")
        lo, hi = (i, j) if i < j else (j, i)
        keep = [k for k in range(self.valence) if k not in (lo, hi)]
        variance = tuple(self.variance[k] for k in keep)
        sym = tuple((kind, tuple(keep.index(s) for s in slots))
                    for kind, slots in self.sym
                    if lo not in slots and hi not in slots)
        acc: dict = {}
        for idx, v in self.items():
            if idx[lo] != idx[hi]:
                continue
            key = tuple(idx[k] for k in keep)
            w = acc.get(key)
            w = v if w is None else w + v
            if w.is_zero():
                acc.pop(key, None)
            else:
                acc[key] = w
        return TensorField(self.space, variance, acc, sym)

    def permute(self, order: Sequence[int]) -> "TensorField":
        """Reorder slots; slot ``k`` of the result is original slot ``order[k]``."""
        order = tuple(order)
        if sorted(order) != list(range(self.valence)):
            raise ValueError("invalid slot permutation")
        variance = tuple(self.variance[o] for o in order)
        pos = {o: k for k, o in enumerate(order)}
        sym = tuple((kind, tuple(sorted(pos[s] for s in slots))) for kind, slots in self.sym)
        acc = {}
        for idx, v in self.items():
            acc[tuple(idx[o] for o in order)] = v
        return TensorField(self.space, variance, acc, sym)

    def symmetrize(self, slots: Optional[Sequence[int]] = None) -> "TensorField":
        """Average over all permutations of the chosen slots (weight-one)."""
        slots = tuple(slots) if slots is not None else tuple(range(self.valence))
        if len({self.variance[s] for s in slots}) > 1:
            raise ValueError("cannot symmetrize slots of mixed variance")
        if len(slots) <= 1:
            return self
        target = TensorField(self.space, self.variance, {}, (("s", slots),), _canonical=True)
        acc: dict = {}
        for idx, v in self.items():
            r, _ = target._canon(idx)
            w = acc.get(r)
            acc[r] = v if w is None else w + v
        comp = {}
        for r, v in acc.items():
            w = v * Fraction(1, target._orbit_size(r))
            if not w.is_zero():
                comp[r] = w
        return TensorField(self.space, self.variance, comp, (("s", slots),), _canonical=True)

    def antisymmetrize(self, slots: Optional[Sequence[int]] = None) -> "TensorField":
        """Signed average over all permutations of the chosen slots."""
        slots = tuple(slots) if slots is not None else tuple(range(self.valence))
        if len({self.variance[s] for s in slots}) > 1:
            raise ValueError("cannot antisymmetrize slots of mixed variance")
        if len(slots) <= 1:
            return self
        target = TensorField(self.space, self.variance, {}, (("a", slots),), _canonical=True)
        acc: dict = {}
        k_fact = Fraction(1, math.factorial(len(slots)))
        for idx, v in self.items():
            r, sign = target._canon(idx)
            if sign == 0:
                continue
            v = v if sign == 1 else -v
            w = acc.get(r)
            acc[r] = v if w is None else w + v
        comp = {}
        for r, v in acc.items():
            w = v * k_fact
            if not w.is_zero():
                comp[r] = w
        return TensorField(self.space, self.variance, comp, (("a", slots),), _canonical=True)

    def _metric_shift(self, i: int, metric: "TensorField", new_variance: str) -> "TensorField":
        n = self.space.n
        variance = self.variance[:i] + (new_variance,) + self.variance[i + 1:]
        sym = []
        for kind, slots in self.sym:
            slots = tuple(s for s in slots if s != i)
            if len(slots) > 1:
                sym.append((kind, slots))
        acc: dict = {}
        for idx, v in self.items():
            for a in range(n):
                m = metric.get((a, idx[i]))
                if m is None:
                    continue
                key = idx[:i] + (a,) + idx[i + 1:]
                w = m * v
                prev = acc.get(key)
                w = w if prev is None else prev + w
                if w.is_zero():
                    acc.pop(key, None)
                else:
                    acc[key] = w
        return TensorField(self.space, variance, acc, tuple(sym))

    def raise_index(self, i: int) -> "TensorField":
        if self.variance[i] != "d":
            raise ValueError("slot is already upper")
        return self._metric_shift(i, self.space.g_inv, "u")

    def lower_index(self, i: int) -> "TensorField":
        if self.variance[i] != "u":
            raise ValueError("slot is already lower")
        return self._metric_shift(i, self.space.g, "d")

    # -- comparisons -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, TensorField):
            return NotImplemented
        if self.variance != other.variance:
            return False
        if self.sym == other.sym:
            return self.comp == other.comp
        return dict(self.items()) == dict(other.items())

    def __hash__(self):
        return hash((self.variance, tuple(sorted(self.comp.items(), key=lambda kv: kv[0]))))

    def __str__(self):
        pieces = ", ".join(
            "%s: %s" % (",".join(str(i + 1) for i in idx), v)
            for idx, v in sorted(self.comp.items())
        )
        return "TensorField[%s]{%s}" % ("".join(self.variance), pieces)

    __repr__ = __str__

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "index_spec": list(self.variance),
            "symmetry": [[k, [s + 1 for s in slots]] for k, slots in self.sym],
            "components": {
                ",".join(str(i + 1) for i in idx): v.to_json()
                for idx, v in sorted(self.comp.items())
            },
        }

    @classmethod
    def from_json(cls, space, data: dict) -> "TensorField":
        sym = tuple((k, tuple(s - 1 for s in slots)) for k, slots in data.get("symmetry", []))
        comp = {}
        for key, val in data["components"].items():
            idx = tuple(int(t) - 1 for t in key.split(",")) if key else ()
            comp[idx] = RatFun.from_json(space.vars, val)
        return cls(space, data["index_spec"], comp, sym, _canonical=True)


def _perm_sign_relative(base: Sequence[int], perm: Sequence[int]) -> int:
    """Sign of the permutation taking ``base`` (distinct values) to ``perm``."""
    order = [base.index(v) for v in perm]
    return _perm_sign(order)


# -- convenience constructors ----------------------------------------------------


def zero_tensor(space, variance, sym=None) -> TensorField:
    return TensorField(space, variance, {}, sym, _canonical=True)


def scalar_field(space, f: RatFun) -> TensorField:
    return TensorField(space, (), {(): f} if not f.is_zero() else {}, None, _canonical=True)


def kronecker_delta(space) -> TensorField:
    one = RatFun.one(space.vars)
    return TensorField(space, ("u", "d"),
                       {(i, i): one for i in range(space.n)}, None, _canonical=True)


def from_components(space, variance, entries, sym=None) -> TensorField:
    """Build a field from {index tuple: RatFun-like} data."""
    comp = {}
    for idx, v in entries.items():
        if isinstance(v, (int, Fraction)):
            v = RatFun.const(space.vars, v)
        comp[tuple(idx)] = v
    return TensorField(space, variance, comp, sym)


def tensor_product(a: TensorField, b: TensorField) -> TensorField:
    return a.tensor_product(b)


def contract(t: TensorField, i: int, j: int) -> TensorField:
    return t.contract(i, j)


def symmetrize(t: TensorField, slots=None) -> TensorField:
    return t.symmetrize(slots)


def antisymmetrize(t: TensorField, slots=None) -> TensorField:
    return t.antisymmetrize(slots)
