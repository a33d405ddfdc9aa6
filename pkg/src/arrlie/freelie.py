"""Free Lie algebra on an ordered alphabet, over exact coefficients.

Degree-n basis: Lyndon words of length n over letters 0..k-1, in lex
order, each word carrying its standard bracketing (split at the
lexicographically least proper suffix, which is the longest proper
Lyndon suffix).  Brackets of basis elements are rewritten into the
basis by expanding both factors as iterated commutators in the free
associative algebra and reducing triangularly: the expansion of a
bracketed Lyndon word w is w plus lex-greater words, so repeatedly
stripping the least surviving word terminates and is exact over Z.

Degree-n ranks follow the Witt formula (1/n) * sum_{d|n} mu(d) k^(n/d),
the orientation consistent with prod_n (1-t^n)^{rank_n} = 1 - k*t.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field

from . import rings

DEFAULT_GUARD = 10 ** 7

_lock = threading.Lock()
_basis_cache = {}
_expand_cache = {}
_pair_bracket_cache = {}


class SizeGuardError(ValueError):
    """Raised when a requested computation exceeds the size guard."""


def check_guard(alphabet, degree, guard=DEFAULT_GUARD):
    if alphabet < 1 or degree < 1:
        raise ValueError("alphabet and degree must be positive")
    if alphabet ** degree > guard:
        raise SizeGuardError(
            "alphabet %d at degree %d exceeds the guard (%d^%d > %d); "
            "raise the guard explicitly to proceed"
            % (alphabet, degree, alphabet, degree, guard))


def lyndon_words(k, n):
    """All Lyndon words of length exactly n over 0..k-1, in lex order (Duval)."""
    if k < 1 or n < 1:
        return []
    out = []
    w = [0]
    while True:
        if len(w) == n:
            out.append(tuple(w))
        # periodic extension to length n, then increment the last slot
        w = [w[i % len(w)] for i in range(n)]
        while w and w[-1] == k - 1:
            w.pop()
        if not w:
            return out
        w[-1] += 1


def is_lyndon(w):
    """A nonempty word is Lyndon iff it is strictly smaller than every proper suffix."""
    if not w:
        return False
    return all(tuple(w) < tuple(w[i:]) for i in range(1, len(w)))


def standard_factorization(w):
    """Split a Lyndon word of length >= 2 at its lex-least proper suffix."""
    assert len(w) >= 2
    best = 1
    for i in range(2, len(w)):
        if w[i:] < w[best:]:
            best = i
    return w[:best], w[best:]


def _bracketing(w, memo):
    t = memo.get(w)
    if t is None:
        if len(w) == 1:
            t = w[0]
        else:
            u, v = standard_factorization(w)
            t = (_bracketing(u, memo), _bracketing(v, memo))
        memo[w] = t
    return t


@dataclass(frozen=True)
class LyndonBasis:
    alphabet: int
    degree: int
    words: tuple
    trees: tuple
    index: dict = field(repr=False)

    def __len__(self):
        return len(self.words)


def _cache_dir():
    return os.environ.get("ARRLIE_CACHE") or None


def lyndon_basis(k, n, guard=DEFAULT_GUARD):
    """Memoized (and optionally disk-cached) Lyndon basis in degree n."""
    check_guard(k, n, guard)
    key = (k, n)
    with _lock:
        b = _basis_cache.get(key)
    if b is not None:
        return b
    words = None
    cdir = _cache_dir()
    path = os.path.join(cdir, "lyndon_%d_%d.json" % (k, n)) if cdir else None
    if path and os.path.exists(path):
        try:
            with open(path) as f:
                words = [tuple(w) for w in json.load(f)]
        except (ValueError, OSError):
            words = None
    if words is None:
        words = lyndon_words(k, n)
        if path:
            try:
                os.makedirs(cdir, exist_ok=True)
                tmp = path + ".tmp.%d" % os.getpid()
                with open(tmp, "w") as f:
                    json.dump([list(w) for w in words], f)
                os.replace(tmp, path)
            except OSError:
                pass
    memo = {}
    trees = tuple(_bracketing(w, memo) for w in words)
    b = LyndonBasis(alphabet=k, degree=n, words=tuple(words), trees=trees,
                    index={w: i for i, w in enumerate(words)})
    with _lock:
        _basis_cache[key] = b
    return b


def _moebius(n):
    m, res = n, 1
    p = 2
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            res = -res
        p += 1 if p == 2 else 2
    if m > 1:
        res = -res
    return res


def witt_rank(k, n):
    """Rank of degree n of the free Lie algebra on k generators."""
    if n < 1:
        raise ValueError("degree must be positive")
    total = 0
    for d in range(1, n + 1):
        if n % d == 0:
            mu = _moebius(d)
            if mu:
                total += mu * k ** (n // d)
    assert total % n == 0
    return total // n


def expand_tree(tree):
    """Iterated-commutator expansion of a bracketing tree in the tensor algebra.

    Returns {word: int coefficient}.  Trees are letters or (left, right) pairs.
    """
    if isinstance(tree, int):
        return {(tree,): 1}
    with _lock:
        e = _expand_cache.get(tree)
    if e is not None:
        return e
    a = expand_tree(tree[0])
    b = expand_tree(tree[1])
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            out[w] = out.get(w, 0) + ca * cb
            w = wb + wa
            out[w] = out.get(w, 0) - ca * cb
    out = {w: c for w, c in out.items() if c}
    with _lock:
        _expand_cache[tree] = out
    return out


def tensor_to_lyndon(poly, k, n, guard=DEFAULT_GUARD):
    """Rewrite a degree-n Lie element given in the tensor algebra into basis coords.

    Raises ValueError if the polynomial is not a Z-combination of Lyndon
    bracketings (i.e. not a Lie element).
    """
    basis = lyndon_basis(k, n, guard)
    p = {w: c for w, c in poly.items() if c}
    out = {}
    while p:
        w = min(p)
        i = basis.index.get(w)
        if i is None:
            raise ValueError("not a Lie element: leading word %r is not Lyndon" % (w,))
        c = p[w]
        for w2, c2 in expand_tree(basis.trees[i]).items():
            v = p.get(w2, 0) - c * c2
            if v:
                p[w2] = v
            else:
                p.pop(w2, None)
        out[i] = out.get(i, 0) + c
    return {i: c for i, c in out.items() if c}


def basis_pair_bracket(k, da, db, ia, ib, guard=DEFAULT_GUARD):
    """[basis(da)[ia], basis(db)[ib]] in degree da+db basis coordinates, over Z."""
    key = (k, da, db, ia, ib)
    with _lock:
        r = _pair_bracket_cache.get(key)
    if r is not None:
        return r
    ea = expand_tree(lyndon_basis(k, da, guard).trees[ia])
    eb = expand_tree(lyndon_basis(k, db, guard).trees[ib])
    p = {}
    for wa, ca in ea.items():
        for wb, cb in eb.items():
            w = wa + wb
            p[w] = p.get(w, 0) + ca * cb
            w = wb + wa
            p[w] = p.get(w, 0) - ca * cb
    r = tensor_to_lyndon(p, k, da + db, guard)
    with _lock:
        _pair_bracket_cache[key] = r
    return r


@dataclass(frozen=True)
class LieElement:
    """Homogeneous free-Lie element: sparse coords over the degree-n Lyndon basis."""
    alphabet: int
    degree: int
    coeffs: dict
    ring: tuple = rings.Z

    def __post_init__(self):
        clean = {}
        for i, c in self.coeffs.items():
            c = rings.coeff(self.ring, c)
            if c:
                clean[int(i)] = c
        object.__setattr__(self, "coeffs", clean)

    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        self._compat(other)
        c = dict(self.coeffs)
        for i, v in other.coeffs.items():
            c[i] = c.get(i, 0) + v
        return LieElement(self.alphabet, self.degree, c, self.ring)

    def __sub__(self, other):
        self._compat(other)
        c = dict(self.coeffs)
        for i, v in other.coeffs.items():
            c[i] = c.get(i, 0) - v
        return LieElement(self.alphabet, self.degree, c, self.ring)

    def scale(self, s):
        return LieElement(self.alphabet, self.degree,
                          {i: s * v for i, v in self.coeffs.items()}, self.ring)

    def _compat(self, other):
        if self.alphabet != other.alphabet:
            raise ValueError("alphabet mismatch: %d vs %d" % (self.alphabet, other.alphabet))
        if self.ring != other.ring:
            raise ValueError("ring mismatch: %s vs %s" % (rings.name(self.ring), rings.name(other.ring)))

    def vector(self):
        """Dense coordinate list over the degree-n Lyndon basis."""
        n = len(lyndon_basis(self.alphabet, self.degree))
        v = [0] * n
        for i, c in self.coeffs.items():
            v[i] = c
        return v


def lie_zero(k, n, ring=rings.Z):
    return LieElement(k, n, {}, ring)


def lie_generator(k, i, ring=rings.Z):
    if not 0 <= i < k:
        raise ValueError("generator index %d out of range for alphabet %d" % (i, k))
    return LieElement(k, 1, {i: 1}, ring)


def bracket(a, b, guard=DEFAULT_GUARD):
    """Lie bracket [a, b] of homogeneous elements, rewritten into the basis."""
    a._compat(b)
    n = a.degree + b.degree
    check_guard(a.alphabet, n, guard)
    out = {}
    for ia, ca in sorted(a.coeffs.items()):
        for ib, cb in sorted(b.coeffs.items()):
            if a.degree == b.degree and ia == ib:
                continue
            if a.degree == b.degree and ib < ia:
                base = basis_pair_bracket(a.alphabet, b.degree, a.degree, ib, ia, guard)
                s = -ca * cb
            else:
                base = basis_pair_bracket(a.alphabet, a.degree, b.degree, ia, ib, guard)
                s = ca * cb
            for i, c in base.items():
                out[i] = out.get(i, 0) + s * c
    return LieElement(a.alphabet, n, out, a.ring)
