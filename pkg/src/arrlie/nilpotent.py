"""Second nilpotent quotient, k-invariant, splittings, and CE homology.

The class-2 quotient of a commutator-relators group is handled in normal
form (v, w): v is the vector of exponent sums, w lives in
gr2 = Lie_2 / relation span with torsion coordinates reduced.  The
multiplication cocycle follows Hall collection with larger generator
indices moved left, so the commutator [x_i, x_j] for i > j is the class
of e_i wedge e_j.

H2 of a truncated graded Lie ring is computed from the exterior complex
Lambda^3 L -> Lambda^2 L -> L with d(a^b) = -[a,b].  Graded pieces may
carry torsion; the complex is then treated with presentation matrices
throughout, so the answer is exact over Z.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from math import gcd

from . import exactla, rings
from .arrangement import Arrangement
from .exactla import QuotientLattice
from .freelie import DEFAULT_GUARD
from .holonomy import (GradedAbelian, HolonomyAlgebra, as_relation_set,
                       holonomy_graded, i2_basis, pair_index, pair_list)
from .parallel import pmap


@dataclass(frozen=True)
class Class2Element:
    """Normal form (exponent vector, central tail) in a class-2 group."""
    exps: tuple
    tail: tuple


class Class2Group:
    """Second nilpotent quotient of a commutator-relators group.

    Central extension of the free abelian group on the generators by
    gr2 = Lie_2 / relation span.  The structure cocycle sends (e_i, e_j)
    with i > j to the class of e_i wedge e_j, which in the ordered pair
    basis is minus the pair (j, i).
    """

    def __init__(self, source):
        self.source = source
        self.relset = as_relation_set(source)
        k = self.relset.alphabet
        self.k = k
        self.names = self.relset.atom_names
        self.pairs = pair_list(k)
        self.pidx = pair_index(k)
        w = len(self.pairs)
        gens = []
        for el in self.relset.elements:
            v = [0] * w
            for c, val in el.items():
                v[c] = val
            gens.append(v)
        self.gr2 = QuotientLattice(w, gens)
        self._name_index = {nm: i for i, nm in enumerate(self.names)}

    # -- basic elements ----------------------------------------------------
    def identity(self):
        return Class2Element((0,) * self.k, tuple(self.gr2.zero()))

    def generator(self, i):
        if not 0 <= i < self.k:
            raise ValueError("generator index %d out of range" % i)
        v = [0] * self.k
        v[i] = 1
        return Class2Element(tuple(v), tuple(self.gr2.zero()))

    def cocycle(self, i, j):
        """gr2 class of e_i wedge e_j for i > j (zero otherwise)."""
        raw = [0] * len(self.pairs)
        if i > j:
            raw[self.pidx[(j, i)]] = -1
        return tuple(self.gr2.project(raw))

    def _check(self, g):
        if len(g.exps) != self.k or len(g.tail) != self.gr2.dim:
            raise ValueError("dimension mismatch: element does not belong "
                             "to this class-2 group")

    def _beta(self, v, vp):
        raw = [0] * len(self.pairs)
        for i in range(self.k):
            if not v[i]:
                continue
            vi = v[i]
            for j in range(i):
                if vp[j]:
                    raw[self.pidx[(j, i)]] -= vi * vp[j]
        return self.gr2.project(raw)

    # -- group operations ---------------------------------------------------
    def multiply(self, g, h):
        self._check(g)
        self._check(h)
        v = tuple(a + b for a, b in zip(g.exps, h.exps))
        tail = self.gr2.add(list(g.tail), self.gr2.add(list(h.tail),
                                                       self._beta(g.exps, h.exps)))
        return Class2Element(v, tuple(tail))

    def inverse(self, g):
        self._check(g)
        v = tuple(-a for a in g.exps)
        tail = self.gr2.add(self.gr2.scale(-1, list(g.tail)),
                            self._beta(g.exps, g.exps))
        return Class2Element(v, tuple(tail))

    def power(self, g, e):
        if e < 0:
            return self.power(self.inverse(g), -e)
        out = self.identity()
        acc = g
        while e:
            if e & 1:
                out = self.multiply(out, acc)
            e >>= 1
            if e:
                acc = self.multiply(acc, acc)
        return out

    def commutator(self, g, h):
        return self.multiply(self.multiply(self.inverse(g), self.inverse(h)),
                             self.multiply(g, h))

    def is_identity(self, g):
        self._check(g)
        return not any(g.exps) and not any(g.tail)

    # -- words ---------------------------------------------------------------
    def parse_word(self, text):
        """Word syntax: either dotted tokens "H1.H2^-1" or, when every
        generator name is a single letter, a plain letter string with
        uppercase meaning inverse ("xyXY")."""
        single = all(len(nm) == 1 for nm in self.names)
        if single and "." not in text and "^" not in text:
            seq = []
            for ch in text:
                idx = self._name_index.get(ch.lower())
                if idx is None:
                    raise ValueError("unknown generator %r in word %r" % (ch, text))
                seq.append((idx, -1 if ch.isupper() else 1))
            return seq
        seq = []
        for token in text.split("."):
            m = re.fullmatch(r"([^\^\s]+)(?:\^(-?\d+))?", token.strip())
            if not m:
                raise ValueError("bad word token %r" % token)
            idx = self._name_index.get(m.group(1))
            if idx is None:
                raise ValueError("unknown generator %r in word %r"
                                 % (m.group(1), text))
            seq.append((idx, int(m.group(2)) if m.group(2) else 1))
        return seq

    def evaluate(self, word):
        if isinstance(word, str):
            word = self.parse_word(word)
        out = self.identity()
        for idx, e in word:
            out = self.multiply(out, self.power(self.generator(idx), e))
        return out


def class2_mul(g, h, grp):
    return grp.multiply(g, h)


def relation_words(arr):
    """Group relators [x_H, prod of x_K over K in Y] per flat Y and H in Y.

    Returned as (label, word) pairs with label = (flat index, atom index)
    and word a sequence of (generator, exponent); every word evaluates to
    the identity in Class2Group(arr).
    """
    out = []
    for f in arr.flats:
        prod = [(kk, 1) for kk in f.members]
        inv_prod = [(kk, -1) for kk in reversed(f.members)]
        for h in f.members:
            word = [(h, -1)] + inv_prod + [(h, 1)] + prod
            out.append(((f.index, h), tuple(word)))
    return out


# ---------------------------------------------------------------------------
# k-invariant

def k_invariant_matrix(source):
    """Matrix of chi_2: wedge^2 of the abelianization -> gr2.

    Rows are indexed by the chosen basis of gr2 (for arrangements, the dual
    basis of the degree-2 relation ideal of the Orlik-Solomon algebra;
    otherwise a saturated kernel basis of the relation matrix), columns by
    the ordered pairs of generators.  chi_2 composed with a suitable
    integer inclusion is the identity, and its kernel is the relation span.
    """
    relset = as_relation_set(source)
    w = len(pair_list(relset.alphabet))
    if isinstance(source, Arrangement):
        cols, _labels = i2_basis(source)
        out = []
        for col in cols:
            row = [0] * w
            for r, val in col.items():
                row[r] = val
            out.append(row)
        return out
    mat = []
    for el in relset.elements:
        row = [0] * w
        for c, val in el.items():
            row[c] = val
        mat.append(row)
    if not mat:
        return exactla.identity(w)
    return [list(v) for v in exactla.kernel_int(mat)]


# ---------------------------------------------------------------------------
# splittings of H2(N) = gr_n + H2(X)

@dataclass(frozen=True)
class SplittingData:
    """Splitting pair for coordinates (gr_n block, H2(X) block).

    sigma = [I | -lam] retracts onto gr_n; section h = [[lam],[I]] embeds
    H2(X); ker sigma = im h.
    """
    lam: tuple
    sigma: tuple
    section: tuple

    @property
    def gr_dim(self):
        return len(self.sigma)

    @property
    def h2x_dim(self):
        return len(self.section[0]) if self.section else 0


def splitting_from_hom(lam, gr_dim=None, h2x_dim=None):
    """Splitting of 0 -> gr_n -> gr_n + H2(X) -> H2(X) -> 0 from a hom lam.

    lam maps H2(X) coordinates to gr_n coordinates (a gr_dim x h2x_dim
    matrix).  Verifies sigma . i = id, pi . h = id and ker sigma = im h.
    """
    lam = [list(row) for row in lam]
    a = len(lam) if gr_dim is None else gr_dim
    if len(lam) not in (0, a):
        raise ValueError("dimension mismatch: lam has %d rows, expected %d"
                         % (len(lam), a))
    if lam:
        widths = {len(row) for row in lam}
        if len(widths) != 1:
            raise ValueError("dimension mismatch: ragged lam")
        c = widths.pop()
        if h2x_dim is not None and c != h2x_dim:
            raise ValueError("dimension mismatch: lam has %d columns, expected %d"
                             % (c, h2x_dim))
    else:
        if h2x_dim is None:
            raise ValueError("empty lam needs explicit h2x_dim")
        c = h2x_dim
        lam = [[0] * c for _ in range(a)]
    sigma = [[int(i == j) for j in range(a)] + [-x for x in lam[i]]
             for i in range(a)]
    section = [list(lam[i]) for i in range(a)] + \
              [[int(i == j) for j in range(c)] for i in range(c)]
    inc = [[int(i == j) for j in range(a)] for i in range(a)] + \
          [[0] * a for _ in range(c)]
    proj = [[0] * a + [int(i == j) for j in range(c)] for i in range(c)]
    if not exactla.is_zero(exactla.mat_sub(exactla.mat_mul(sigma, inc),
                                           exactla.identity(a))):
        raise AssertionError("splitting identity sigma.i = id failed")
    if not exactla.is_zero(exactla.mat_sub(exactla.mat_mul(proj, section),
                                           exactla.identity(c))):
        raise AssertionError("splitting identity pi.h = id failed")
    if not exactla.is_zero(exactla.mat_mul(sigma, section)):
        raise AssertionError("splitting identity sigma.h = 0 failed")
    # ker sigma = im h: [i | h] is block upper triangular with unit diagonal
    square = [inc[i] + section[i] for i in range(a + c)]
    if abs(exactla.det_int(square)) != 1:
        raise AssertionError("splitting does not span: [i | h] not unimodular")
    return SplittingData(lam=tuple(tuple(r) for r in lam),
                         sigma=tuple(tuple(r) for r in sigma),
                         section=tuple(tuple(r) for r in section))


# ---------------------------------------------------------------------------
# truncated graded Lie rings and their CE homology

class GradedLie:
    """Graded Lie ring over Z supported in degrees 1..top.

    degrees is a list of GradedAbelian (free rank plus divisor chain);
    coordinates in each degree are ordered free-then-torsion.  brackets
    maps (d1, d2) with d1 + d2 <= top to the structure-constant table
    table[i][j] = coordinates of [e_i, e_j] in degree d1 + d2.  Brackets
    landing past the truncation are zero.  Antisymmetry and the Jacobi
    identity are checked at construction.
    """

    def __init__(self, degrees, brackets, validate=True):
        self.degrees = tuple(degrees)
        self.top = len(self.degrees)
        for ga in self.degrees:
            if not isinstance(ga, GradedAbelian):
                raise TypeError("degrees must be GradedAbelian instances")
        tables = {}
        for d1 in range(1, self.top + 1):
            for d2 in range(1, self.top + 1):
                if d1 + d2 > self.top:
                    continue
                if (d1, d2) not in brackets:
                    raise ValueError("missing bracket table for degrees (%d, %d)"
                                     % (d1, d2))
                table = brackets[(d1, d2)]
                if len(table) != self.dim(d1):
                    raise ValueError("bracket table (%d, %d) has wrong height"
                                     % (d1, d2))
                rows = []
                for row in table:
                    if len(row) != self.dim(d2):
                        raise ValueError("bracket table (%d, %d) has wrong width"
                                         % (d1, d2))
                    for vec in row:
                        if len(vec) != self.dim(d1 + d2):
                            raise ValueError("bracket value in table (%d, %d) "
                                             "lands in the wrong degree" % (d1, d2))
                    rows.append(tuple(tuple(v) for v in row))
                tables[(d1, d2)] = tuple(rows)
        self.brackets = tables
        if validate:
            self._validate()

    def dim(self, d):
        ga = self.degrees[d - 1]
        return ga.rank + len(ga.torsion)

    def divisors(self, d):
        ga = self.degrees[d - 1]
        return [0] * ga.rank + list(ga.torsion)

    def reduce(self, d, vec):
        divs = self.divisors(d)
        return [v if dv == 0 else v % dv for v, dv in zip(vec, divs)]

    def is_zero(self, d, vec):
        return not any(self.reduce(d, vec))

    def basis_bracket(self, d1, i, d2, j):
        """[e_i, e_j] in degree d1+d2 coordinates, or None past the truncation."""
        if d1 + d2 > self.top:
            return None
        return self.brackets[(d1, d2)][i][j]

    def bracket_vec(self, d1, u, d2, v):
        if d1 + d2 > self.top:
            return None
        out = [0] * self.dim(d1 + d2)
        table = self.brackets[(d1, d2)]
        for i, a in enumerate(u):
            if not a:
                continue
            row = table[i]
            for j, b in enumerate(v):
                if not b:
                    continue
                vec = row[j]
                for t, val in enumerate(vec):
                    if val:
                        out[t] += a * b * val
        return self.reduce(d1 + d2, out)

    def _validate(self):
        for (d1, d2), table in self.brackets.items():
            other = self.brackets[(d2, d1)]
            for i in range(self.dim(d1)):
                for j in range(self.dim(d2)):
                    s = [x + y for x, y in zip(table[i][j], other[j][i])]
                    if not self.is_zero(d1 + d2, s):
                        raise ValueError("bracket tables are not antisymmetric "
                                         "at degrees (%d, %d)" % (d1, d2))
                    if d1 == d2 and i == j and not self.is_zero(d1 + d2, table[i][i]):
                        raise ValueError("nonzero bracket [e, e] in degree %d" % d1)

        def _jacobi(args):
            (da, i), (db, j), (dc, kk) = args
            d = da + db + dc
            acc = [0] * self.dim(d)
            for (dx, x), (dy, y), (dz, z) in (((da, i), (db, j), (dc, kk)),
                                              ((db, j), (dc, kk), (da, i)),
                                              ((dc, kk), (da, i), (db, j))):
                inner = self.basis_bracket(dx, x, dy, y)
                ez = [0] * self.dim(dz)
                ez[z] = 1
                term = self.bracket_vec(dx + dy, inner, dz, ez)
                acc = [p + q for p, q in zip(acc, term)]
            return self.is_zero(d, acc)

        triples = []
        members = [(d, i) for d in range(1, self.top + 1)
                   for i in range(self.dim(d))]
        for a, b, c in itertools.combinations(members, 3):
            if a[0] + b[0] + c[0] <= self.top:
                triples.append((a, b, c))
        for ok in pmap(_jacobi, triples):
            if not ok:
                raise ValueError("structure constants violate the Jacobi identity")


def truncated_lie(source, top, guard=DEFAULT_GUARD, override=False, validate=True):
    """The quotient of the holonomy Lie algebra by degrees above top."""
    if top < 1:
        raise ValueError("truncation top degree must be at least 1")
    alg = HolonomyAlgebra(source, max_degree=top, guard=guard, override=override)
    degrees = [GradedAbelian(rank=alg.alphabet)]
    for d in range(2, top + 1):
        degrees.append(GradedAbelian(rank=alg.rank(d), torsion=alg.torsion(d)))
    dims = [None] + [degrees[d - 1].rank + len(degrees[d - 1].torsion)
                     for d in range(1, top + 1)]
    brackets = {}
    for d1 in range(1, top + 1):
        for d2 in range(1, top - d1 + 1):
            table = []
            for i in range(dims[d1]):
                ei = [0] * dims[d1]
                ei[i] = 1
                row = []
                for j in range(dims[d2]):
                    ej = [0] * dims[d2]
                    ej[j] = 1
                    row.append(tuple(alg.bracket_coords(d1, ei, d2, ej)))
                table.append(tuple(row))
            brackets[(d1, d2)] = tuple(table)
    return GradedLie(degrees, brackets, validate=validate)


def _flat_basis(L):
    basis = [(d, i) for d in range(1, L.top + 1) for i in range(L.dim(d))]
    offsets = {}
    pos = 0
    for d in range(1, L.top + 1):
        offsets[d] = pos
        pos += L.dim(d)
    divs = []
    for d in range(1, L.top + 1):
        divs.extend(L.divisors(d))
    return basis, offsets, divs


def ce_differentials(L):
    """Sparse columns of d2: wedge^2 -> L and d3: wedge^3 -> wedge^2.

    Returns (basis, pairs, d2cols, d3cols); columns are dicts over the flat
    basis of L (for d2) or over the pair positions (for d3).  d2 . d3 = 0
    exactly whenever the graded pieces are torsion-free.
    """
    basis, offsets, _divs = _flat_basis(L)
    n = len(basis)
    pairs = [(s, t) for s in range(n) for t in range(s + 1, n)]
    ppos = {pr: q for q, pr in enumerate(pairs)}

    def _bracket_flat(s, t):
        ds, i = basis[s]
        dt, j = basis[t]
        vec = L.basis_bracket(ds, i, dt, j)
        if vec is None:
            return {}
        off = offsets[ds + dt]
        return {off + c: val for c, val in enumerate(vec) if val}

    d2cols = []
    for s, t in pairs:
        b = _bracket_flat(s, t)
        d2cols.append({c: -val for c, val in b.items()})

    def _wedge_into(out, entries, t, sign):
        for r, val in entries.items():
            if r == t:
                continue
            if r < t:
                out[ppos[(r, t)]] = out.get(ppos[(r, t)], 0) + sign * val
            else:
                out[ppos[(t, r)]] = out.get(ppos[(t, r)], 0) - sign * val

    def _d3(triple):
        s, t, u = triple
        out = {}
        _wedge_into(out, _bracket_flat(s, t), u, -1)
        _wedge_into(out, _bracket_flat(s, u), t, +1)
        _wedge_into(out, _bracket_flat(t, u), s, -1)
        return {q: v for q, v in out.items() if v}

    triples = list(itertools.combinations(range(n), 3))
    d3cols = list(pmap(_d3, triples))
    return basis, pairs, d2cols, d3cols


def _field_truncation(L, p):
    """Surviving flat coordinates of L over Q (p=None) or F_p."""
    basis, offsets, divs = _flat_basis(L)
    keep = []
    for idx, dv in enumerate(divs):
        if dv == 0 or (p is not None and dv % p == 0):
            keep.append(idx)
    return basis, offsets, keep


def ce_h2(L, ring=rings.Z):
    """H2 of the exterior complex of a truncated graded Lie ring.

    Over Z returns rank and elementary divisors; over Q or F_p, the
    dimension of H2 of L tensored with the field.
    """
    p = rings.char(ring)
    basis, pairs, d2cols, d3cols = ce_differentials(L)
    n = len(basis)
    if ring != rings.Z:
        _b, _o, keep = _field_truncation(L, p)
        kept = set(keep)
        kpos = {c: i for i, c in enumerate(keep)}
        live_pairs = [q for q, (s, t) in enumerate(pairs)
                      if s in kept and t in kept]
        lp = {q: i for i, q in enumerate(live_pairs)}
        d2rows = []
        for q in live_pairs:
            col = {kpos[c]: v for c, v in d2cols[q].items() if c in kept}
            d2rows.append(col)
        d3rows = []
        for col in d3cols:
            filt = {lp[q]: v for q, v in col.items() if q in lp}
            if filt:
                d3rows.append(filt)
        dim_l2 = len(live_pairs)
        rank = dim_l2 - exactla.rank_sparse(d2rows, p=p) \
                      - exactla.rank_sparse(d3rows, p=p)
        return GradedAbelian(rank=rank)

    _b2, _o2, divs = _flat_basis(L)
    np_ = len(pairs)
    if np_ == 0:
        return GradedAbelian(rank=0)
    r1 = [i for i, dv in enumerate(divs) if dv > 0]
    block = [[0] * (np_ + len(r1)) for _ in range(n)]
    for q, col in enumerate(d2cols):
        for c, v in col.items():
            block[c][q] = v
    for t, i in enumerate(r1):
        block[i][np_ + t] = divs[i]
    kern = exactla.kernel_int(block)
    gens = [vec[:np_] for vec in kern]
    if r1:
        bas = exactla.image_basis(gens, np_)
    else:
        bas = gens
    qdim = len(bas)
    if qdim == 0:
        return GradedAbelian(rank=0)
    sub = []
    for q, (s, t) in enumerate(pairs):
        g = gcd(divs[s], divs[t])
        if divs[s] == 0 and divs[t] == 0:
            continue
        col = [0] * np_
        col[q] = g
        sub.append(col)
    for col in d3cols:
        dense = [0] * np_
        for q, v in col.items():
            dense[q] = v
        sub.append(dense)
    if not sub:
        return GradedAbelian(rank=qdim)
    bmat = [[bas[c][r] for c in range(qdim)] for r in range(np_)]
    x = exactla.solve_int(bmat, sub)
    assert x is not None, "boundaries escaped the cycle lattice"
    xmat = [[x[c][r] for c in range(len(x))] for r in range(qdim)]
    divisors, _u, _ui, _v, _vi = exactla.smith_normal_form(xmat)
    torsion = tuple(d for d in divisors if d > 1)
    return GradedAbelian(rank=qdim - len(divisors), torsion=torsion)


def h2_rank_check(source, n=3, ring=rings.Q, guard=DEFAULT_GUARD, override=False):
    """Compare rank H2 of the degree-(n-1) truncation with rank h_n + b2.

    The split exact sequence behind the comparison needs the arrangement
    to be decomposable when n > 3; n = 3 holds unconditionally.  The
    group-to-Lie bridge is exact when gr2 is torsion-free and labeled
    heuristic otherwise.
    """
    if n < 3:
        raise ValueError("the H2 comparison starts at degree 3")
    relset = as_relation_set(source)
    decomp_report = None
    if n > 3:
        if not isinstance(source, Arrangement):
            raise ValueError("degree > 3 comparison is only available for "
                             "arrangements (it needs localization data)")
        from . import decomp
        decomp_report = decomp.is_decomposable(source)
        if not decomp_report["decomposable"]:
            raise ValueError(
                "H2 comparison at degree %d requires a decomposable "
                "arrangement: r_global=%d, r_local=%d" %
                (n, decomp_report["r_global"], decomp_report["r_local"]))
    L = truncated_lie(source, n - 1, guard=guard, override=override)
    ce = ce_h2(L, ring)
    hn = holonomy_graded(source, n, ring, guard=guard, override=override)
    p = rings.char(ring)
    rows = [dict(el) for el in relset.elements]
    b2 = exactla.rank_sparse(rows, p=p)
    expected = hn.rank + b2
    report = {
        "degree": n,
        "ring": rings.name(ring),
        "b2": b2,
        "h_n_rank": hn.rank,
        "ce_h2_rank": ce.rank,
        "expected": expected,
        "pass": ce.rank == expected,
        "bridge": "heuristic" if L.degrees[1].torsion else "exact",
    }
    if ring == rings.Z:
        report["ce_h2_torsion"] = list(ce.torsion)
        report["h_n_torsion"] = list(hn.torsion)
    if decomp_report is not None:
        report["decomposable"] = decomp_report["decomposable"]
    return report
