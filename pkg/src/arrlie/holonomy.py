"""Holonomy Lie algebra of an arrangement, graded pieces over Z, Q, F_p.

The algebra is the free Lie algebra on the atoms modulo the ideal
generated by the degree-2 elements [x_H, sum of x_K over K in Y] for
every rank-2 flat Y and every atom H in Y.  The degree-n piece of the
ideal is spanned by left-normed ad-chains ad(x_{j_1})...ad(x_{j_{n-2}})
applied to the relations; degree-n data of the quotient comes from a
Smith normal form over Z and from sparse elimination over Q and F_p.

Also here: commutator-relator presentations with their degree-2 Magnus
coefficients, the degree-2 part of the Orlik-Solomon relation ideal, and
the nullity of multiplication E^1 x I^2 -> E^3 (the Falk invariant).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import exactla, rings
from .arrangement import Arrangement, ArrangementError
from .exactla import QuotientLattice
from .freelie import (DEFAULT_GUARD, LieElement, SizeGuardError, bracket,
                      check_guard, lie_generator, lyndon_basis, witt_rank)
from .parallel import pmap

# refusal thresholds per degree; kwarg `override=True` lifts them
DEGREE_ALPHABET_LIMITS = {2: 64, 3: 15, 4: 8}
_HIGH_DEGREE_LIMIT = 4

_GEN_LETTERS = "xyzabcdefghijklmnopqrstuvw"


def holonomy_guard(k, n, override=False, guard=DEFAULT_GUARD):
    check_guard(k, n, guard)
    if override:
        return
    limit = DEGREE_ALPHABET_LIMITS.get(n, _HIGH_DEGREE_LIMIT)
    if n >= 2 and k > limit:
        raise SizeGuardError(
            "holonomy degree %d refuses alphabets beyond %d letters (got %d); "
            "pass override=True to proceed" % (n, limit, k))


@dataclass(frozen=True)
class GradedAbelian:
    """Finitely generated abelian group: free rank and divisor chain (> 1)."""
    rank: int
    torsion: tuple = ()

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("negative rank")
        tor = tuple(int(d) for d in self.torsion)
        for d in tor:
            if d <= 1:
                raise ValueError("torsion divisors must exceed 1")
        for a, b in zip(tor, tor[1:]):
            if b % a:
                raise ValueError("torsion divisors must form a chain")
        object.__setattr__(self, "torsion", tor)


def pair_list(k):
    """Ordered pairs (i < j): the degree-2 Lyndon words over 0..k-1, lex order."""
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def pair_index(k):
    return {p: t for t, p in enumerate(pair_list(k))}


@dataclass(frozen=True)
class RelationSet:
    """Degree-2 relations over the degree-2 basis of the free Lie algebra.

    labels carries provenance: (flat index, atom index) for arrangement
    relations, or None for relations coming from a presentation.
    """
    alphabet: int
    elements: tuple   # of {pair position: coeff} dicts
    labels: tuple
    atom_names: tuple

    def __len__(self):
        return len(self.elements)


def relation_set(arr):
    """One relation [x_H, sum_{K in Y} x_K] per flat Y and atom H in Y.

    The per-flat family is redundant (its members sum to zero); it is kept
    whole and only reduced inside rank and normal-form computations.
    """
    k = arr.n_atoms
    pidx = pair_index(k)
    elements, labels = [], []
    for f in arr.flats:
        for h in f.members:
            coeffs = {}
            for kk in f.members:
                if kk == h:
                    continue
                if h < kk:
                    coeffs[pidx[(h, kk)]] = coeffs.get(pidx[(h, kk)], 0) + 1
                else:
                    coeffs[pidx[(kk, h)]] = coeffs.get(pidx[(kk, h)], 0) - 1
            elements.append(coeffs)
            labels.append((f.index, h))
    return RelationSet(alphabet=k, elements=tuple(elements), labels=tuple(labels),
                       atom_names=arr.atoms)


def empty_relation_set(k, names=None):
    if names is None:
        names = tuple("x%d" % (i + 1) for i in range(k))
    return RelationSet(alphabet=k, elements=(), labels=(), atom_names=tuple(names))


# ---------------------------------------------------------------------------
# presentations and the Magnus expansion to degree 2

@dataclass(frozen=True)
class Presentation:
    """Finite presentation with commutator relators (zero exponent sums).

    Relators are single-letter strings: lowercase is a generator,
    uppercase its inverse.  Default generator names are taken from
    'xyzabc...' in order; pass names to override.
    """
    generators: int
    relators: tuple
    names: tuple

    def letter_sequence(self, relator):
        seq = []
        lookup = {nm: i for i, nm in enumerate(self.names)}
        for ch in relator:
            idx = lookup.get(ch.lower())
            if idx is None:
                raise ValueError("relator %r uses unknown generator %r" % (relator, ch))
            seq.append((idx, -1 if ch.isupper() else 1))
        return seq


def make_presentation(generators, relators, names=None):
    generators = int(generators)
    if generators < 1:
        raise ValueError("need at least one generator")
    if names is None:
        if generators > len(_GEN_LETTERS):
            raise ValueError("default names cover up to %d generators, pass names"
                             % len(_GEN_LETTERS))
        names = tuple(_GEN_LETTERS[:generators])
    else:
        names = tuple(str(n) for n in names)
        if len(names) != generators or len(set(names)) != generators:
            raise ValueError("need %d distinct generator names" % generators)
        if any(len(n) != 1 or not n.isalpha() or n != n.lower() for n in names):
            raise ValueError("generator names must be single lowercase letters")
    p = Presentation(generators=generators, relators=tuple(relators), names=names)
    for rel in p.relators:
        seq = p.letter_sequence(rel)
        sums = [0] * generators
        for g, e in seq:
            sums[g] += e
        if any(sums):
            bad = [p.names[i] for i, s in enumerate(sums) if s]
            raise ValueError(
                "relator %r has nonzero exponent sum in %s; only commutator "
                "relators are supported" % (rel, ", ".join(bad)))
    return p


def presentation_from_json(obj):
    if not isinstance(obj, dict) or "generators" not in obj or "relators" not in obj:
        raise ValueError("presentation JSON needs 'generators' and 'relators'")
    return make_presentation(obj["generators"], obj["relators"], obj.get("names"))


def magnus_degree2(pres, relator):
    """Degree <= 2 coefficients of the Magnus expansion of one relator.

    Returns ({i: exponent sum}, {(i, j): coefficient of X_i X_j}).
    x |-> 1 + X, x^-1 |-> 1 - X + X^2 - ..., truncated at degree 2.
    """
    k = pres.generators
    d1 = [0] * k
    d2 = {}
    for g, e in pres.letter_sequence(relator):
        # (1 + D1 + D2) * (1 + e*X_g + [e<0]*X_g^2)
        for i in range(k):
            if d1[i]:
                key = (i, g)
                d2[key] = d2.get(key, 0) + d1[i] * e
        if e < 0:
            key = (g, g)
            d2[key] = d2.get(key, 0) + 1
        d1[g] += e
    return d1, {key: c for key, c in d2.items() if c}


def holonomy_map_from_presentation(pres):
    """Columns over the pair basis (i < j): the degree-2 Magnus class per relator."""
    k = pres.generators
    pidx = pair_index(k)
    cols = []
    for rel in pres.relators:
        d1, d2 = magnus_degree2(pres, rel)
        assert not any(d1), "exponent sums checked at construction"
        col = {}
        for (i, j), c in d2.items():
            if i == j:
                raise ValueError("relator %r: degree-2 part is not a Lie element" % rel)
            if (j, i) in d2 and d2[(j, i)] != -c and i < j:
                raise ValueError("relator %r: degree-2 part is not a Lie element" % rel)
            if i < j:
                col[pidx[(i, j)]] = c
        cols.append(col)
    rows = len(pair_list(k))
    mat = [[0] * len(cols) for _ in range(rows)]
    for t, col in enumerate(cols):
        for r, c in col.items():
            mat[r][t] = c
    return mat


def relation_set_from_presentation(pres):
    mat_cols = []
    for rel in pres.relators:
        _d1, d2 = magnus_degree2(pres, rel)
        pidx = pair_index(pres.generators)
        col = {}
        for (i, j), c in d2.items():
            if i < j:
                col[pidx[(i, j)]] = c
        mat_cols.append(col)
    return RelationSet(alphabet=pres.generators,
                       elements=tuple(mat_cols),
                       labels=tuple(None for _ in mat_cols),
                       atom_names=pres.names)


# ---------------------------------------------------------------------------
# graded pieces

def as_relation_set(source):
    if isinstance(source, Arrangement):
        return relation_set(source)
    if isinstance(source, RelationSet):
        return source
    if isinstance(source, Presentation):
        return relation_set_from_presentation(source)
    raise TypeError("expected an Arrangement, RelationSet, or Presentation")


def ideal_rows(relset, n, guard=DEFAULT_GUARD, override=False):
    """Spanning vectors of the degree-n piece of the relation ideal.

    Left-normed ad-chains on the degree-2 relations; returned as sparse
    dicts over the degree-n Lyndon basis.
    """
    k = relset.alphabet
    holonomy_guard(k, n, override=override, guard=guard)
    if n < 2:
        raise ValueError("the relation ideal starts in degree 2")
    level = [LieElement(k, 2, dict(e)) for e in relset.elements]
    deg = 2
    while deg < n:
        gens = [lie_generator(k, j) for j in range(k)]

        def _ads(el):
            return [bracket(g, el, guard) for g in gens]

        level = [x for sub in pmap(_ads, level) for x in sub]
        deg += 1
    return [dict(el.coeffs) for el in level]


def holonomy_graded(source, n, ring=rings.Z, guard=DEFAULT_GUARD, override=False):
    """Degree-n piece of the holonomy Lie algebra as a GradedAbelian.

    Over Q and F_p the torsion list is empty and rank is the vector-space
    dimension; over Z the divisor chain comes from Smith normal form.
    """
    relset = as_relation_set(source)
    k = relset.alphabet
    if n < 1:
        raise ValueError("degree must be positive")
    if n == 1:
        return GradedAbelian(rank=k)
    w = witt_rank(k, n)
    rows = ideal_rows(relset, n, guard=guard, override=override)
    p = rings.char(ring)
    if ring == rings.Z:
        dense = [[row.get(c, 0) for row in rows] for c in range(w)]
        q = QuotientLattice(w, [list(col) for col in zip(*dense)] if rows else [])
        return GradedAbelian(rank=q.rank, torsion=q.torsion)
    return GradedAbelian(rank=w - exactla.rank_sparse(rows, p=p))


class HolonomyAlgebra:
    """Quotient coordinates for the graded pieces, with lift and bracket.

    Degrees are materialized lazily; degree d costs a Smith normal form
    of the degree-d ideal piece.
    """

    def __init__(self, source, max_degree, guard=DEFAULT_GUARD, override=False):
        self.relset = as_relation_set(source)
        self.alphabet = self.relset.alphabet
        self.max_degree = max_degree
        self.guard = guard
        self.override = override
        for d in range(2, max_degree + 1):
            holonomy_guard(self.alphabet, d, override=override, guard=guard)
        self._quotients = {}

    def quotient(self, d):
        """QuotientLattice of Lie_d by the ideal, for 2 <= d <= max_degree."""
        if not 2 <= d <= self.max_degree:
            raise ValueError("degree %d outside 2..%d" % (d, self.max_degree))
        q = self._quotients.get(d)
        if q is None:
            rows = ideal_rows(self.relset, d, guard=self.guard, override=self.override)
            w = witt_rank(self.alphabet, d)
            gens = []
            for row in rows:
                v = [0] * w
                for c, val in row.items():
                    v[c] = val
                gens.append(v)
            q = QuotientLattice(w, gens)
            self._quotients[d] = q
        return q

    def rank(self, d):
        if d == 1:
            return self.alphabet
        return self.quotient(d).rank

    def torsion(self, d):
        if d == 1:
            return ()
        return self.quotient(d).torsion

    def dim(self, d):
        if d == 1:
            return self.alphabet
        return self.quotient(d).dim

    def project(self, d, vec):
        """Quotient coordinates of a degree-d element given over the Lyndon basis.

        vec may be a sparse dict or a dense list.
        """
        if d == 1:
            if isinstance(vec, dict):
                return [vec.get(i, 0) for i in range(self.alphabet)]
            return list(vec)
        q = self.quotient(d)
        if isinstance(vec, dict):
            dense = [0] * q.w
            for c, v in vec.items():
                dense[c] = v
            vec = dense
        return q.project(vec)

    def lift(self, d, coords):
        """A Lyndon-basis representative of the class with the given coordinates."""
        if d == 1:
            return list(coords)
        return self.quotient(d).lift(coords)

    def bracket_coords(self, d1, c1, d2, c2):
        """Bracket of quotient classes, in degree d1+d2 coordinates (None past truncation)."""
        d = d1 + d2
        if d > self.max_degree:
            return None
        a = LieElement(self.alphabet, d1,
                       {i: v for i, v in enumerate(self.lift(d1, c1)) if v})
        b = LieElement(self.alphabet, d2,
                       {i: v for i, v in enumerate(self.lift(d2, c2)) if v})
        return self.project(d, bracket(a, b, self.guard).coeffs)


# ---------------------------------------------------------------------------
# word renaming between an arrangement and its localizations

def restrict_word_map(k_src, members, d):
    """Index map degree-d basis(k_src) -> basis(len(members)) for words inside members.

    members must be sorted; returns {src index: dst index} and drops words
    using letters outside members.  Order-preserving renaming keeps both
    the Lyndon property and the standard factorization.
    """
    pos = {a: i for i, a in enumerate(members)}
    src = lyndon_basis(k_src, d)
    dst = lyndon_basis(len(members), d)
    out = {}
    for i, w in enumerate(src.words):
        if all(c in pos for c in w):
            out[i] = dst.index[tuple(pos[c] for c in w)]
    return out


def embed_word_map(k_dst, members, d):
    """Index map degree-d basis(len(members)) -> basis(k_dst), letters -> members."""
    src = lyndon_basis(len(members), d)
    dst = lyndon_basis(k_dst, d)
    return {i: dst.index[tuple(members[c] for c in w)] for i, w in enumerate(src.words)}


# ---------------------------------------------------------------------------
# Orlik-Solomon degree 2 and the Falk invariant

def i2_basis(arr):
    """Z-basis of the degree-2 relation ideal of the Orlik-Solomon algebra.

    One column per flat Y and pair a < b of non-minimal members:
    del(e_m e_a e_b) = e_a^e_b - e_m^e_b + e_m^e_a with m = min(Y), in
    coordinates over the wedge pairs of atoms.  Returns (columns, labels).
    """
    k = arr.n_atoms
    pidx = pair_index(k)
    cols, labels = [], []
    for f in arr.flats:
        m = f.members[0]
        rest = f.members[1:]
        for s in range(len(rest)):
            for t in range(s + 1, len(rest)):
                a, b = rest[s], rest[t]
                col = {pidx[(a, b)]: 1, pidx[(m, b)]: -1, pidx[(m, a)]: 1}
                cols.append(col)
                labels.append((f.index, a, b))
    return cols, labels


def _wedge3_index(k):
    trips = [(a, b, c) for a in range(k) for b in range(a + 1, k) for c in range(b + 1, k)]
    return trips, {t: i for i, t in enumerate(trips)}


def falk_invariant(arr):
    """Nullity over Q of multiplication E^1 x I^2 -> E^3."""
    k = arr.n_atoms
    cols, _labels = i2_basis(arr)
    if not cols:
        return 0
    pairs = pair_list(k)
    _trips, tidx = _wedge3_index(k)
    rows = []
    for h in range(k):
        for col in cols:
            row = {}
            for pt, c in col.items():
                a, b = pairs[pt]
                if h == a or h == b:
                    continue
                if h < a:
                    key, s = (h, a, b), 1
                elif h < b:
                    key, s = (a, h, b), -1
                else:
                    key, s = (a, b, h), 1
                ti = tidx[key]
                row[ti] = row.get(ti, 0) + s * c
            rows.append({t: v for t, v in row.items() if v})
    return len(rows) - exactla.rank_sparse(rows)
