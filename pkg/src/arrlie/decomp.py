"""Decomposability, decomposable LCS ranks, lift assembly, and diagram checks.

An arrangement is decomposable when the degree 3 piece of its holonomy Lie
algebra is cut out by the local pencils: the restriction map to the direct
sum over rank-2 flats is an isomorphism.  We decide this by comparing the
global rank with the sum of local Witt numbers and checking that degree 3
carries no integer torsion.

For decomposable arrangements the lower central series ranks come from a
product formula, and nilpotent quotients of the fundamental group can be
compared across lattice-isomorphic arrangements.  The comparison works with
lifts in correction form: an endomorphism candidate of the truncated
holonomy algebra sends each degree 1 generator x_H to x_H plus correction
terms in degrees 2..n-1.  Local lifts live on a single pencil, a global
candidate is assembled by summing embedded local corrections, and the
degree n component of each relator bracket is the obstruction matrix that
feeds the H2-level commuting diagram.  All matrices are exact, over Z, Q,
or F_p.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import exactla, rings
from .arrangement import Arrangement, localize
from .freelie import DEFAULT_GUARD, _moebius, expand_tree, lyndon_basis, \
    tensor_to_lyndon, witt_rank
from .holonomy import HolonomyAlgebra, embed_word_map, holonomy_graded, \
    restrict_word_map

# ---------------------------------------------------------------------------
# decomposability and the decomposable LCS formula

def is_decomposable(arr, guard=DEFAULT_GUARD, override=False):
    """Decide decomposability from the degree 3 graded piece.

    Returns a report dict with r_global (rank of the degree 3 holonomy
    piece over Q), r_local (sum of local Witt numbers witt(mu(Y), 3)), the
    integer torsion of degree 3, and the verdict.  The restriction map is
    always onto, so equal ranks plus a torsion-free source force an
    isomorphism over Z.  Equal ranks with torsion present get a qualifier
    instead: the map is an isomorphism over Q but not over Z.
    """
    if not isinstance(arr, Arrangement):
        raise TypeError("is_decomposable expects an Arrangement")
    g3 = holonomy_graded(arr, 3, rings.Z, guard=guard, override=override)
    r_global = g3.rank
    r_local = sum(witt_rank(f.mu, 3) for f in arr.flats if f.mu >= 2)
    torsion = list(g3.torsion)
    rep = {
        "decomposable": r_global == r_local and not torsion,
        "r_global": r_global,
        "r_local": r_local,
        "torsion": torsion,
    }
    if r_global == r_local and torsion:
        rep["qualifier"] = "indeterminate over Z, decomposable over Q"
    return rep


def lcs_ranks_decomposable(arr, max_degree, guard=DEFAULT_GUARD, override=False):
    """LCS ranks phi_1..phi_N of the arrangement group, decomposable case.

    Expands prod_n (1-t^n)^phi_n = (1-t)^(|A|-sum mu) prod_Y (1-mu(Y) t)
    by taking logarithms: with c_m = (|A| - sum mu) + sum_Y mu(Y)^m the
    coefficients satisfy sum_{d|m} d phi_d = c_m, inverted by Moebius.
    Only valid for decomposable arrangements; anything else is refused.
    """
    rep = is_decomposable(arr, guard=guard, override=override)
    if not rep["decomposable"]:
        extra = "; " + rep["qualifier"] if "qualifier" in rep else ""
        raise ValueError(
            "the product formula for LCS ranks needs a decomposable "
            "arrangement: degree-3 ranks are r_global=%d, r_local=%d%s"
            % (rep["r_global"], rep["r_local"], extra))
    if max_degree < 1:
        raise ValueError("max_degree must be positive")
    mus = [f.mu for f in arr.flats]
    e = len(arr.atoms) - sum(mus)
    c = {m: e + sum(mu ** m for mu in mus) for m in range(1, max_degree + 1)}
    phis = []
    for m in range(1, max_degree + 1):
        s = sum(_moebius(m // d) * c[d] for d in range(1, m + 1) if m % d == 0)
        if s % m:
            raise ArithmeticError("degree %d coefficient %d not divisible" % (m, s))
        phis.append(s // m)
    if phis and phis[0] != len(arr.atoms):
        raise ArithmeticError("phi_1 = %d but there are %d atoms" % (phis[0], len(arr.atoms)))
    if any(v < 0 for v in phis):
        raise ArithmeticError("negative LCS rank in %r" % (phis,))
    return phis


# ---------------------------------------------------------------------------
# coordinate charts between the global algebra and its localizations

class Charts:
    """Global truncated algebra plus per-flat local algebras and the
    embed / restrict coordinate matrices between them, built on demand."""

    def __init__(self, arr, n, guard=DEFAULT_GUARD, override=False):
        self.arr = arr
        self.n = n
        self.guard = guard
        self.alg = HolonomyAlgebra(arr, max_degree=n, guard=guard, override=override)
        self.local_arr = [localize(arr, f.index) for f in arr.flats]
        self.local_alg = [HolonomyAlgebra(a, max_degree=n, guard=guard,
                                          override=override)
                          for a in self.local_arr]
        self._emb = {}
        self._res = {}

    def embed(self, fi, d):
        """Matrix of h_d(A_Y) -> h_d(A) on quotient coordinates."""
        key = (fi, d)
        m = self._emb.get(key)
        if m is None:
            members = self.arr.flats[fi].members
            loc = self.local_alg[fi]
            if d == 1:
                m = [[1 if members[j] == i else 0 for j in range(loc.alphabet)]
                     for i in range(self.alg.alphabet)]
            else:
                wmap = embed_word_map(self.alg.alphabet, members, d)
                cols = []
                for j in range(loc.dim(d)):
                    vec = loc.lift(d, _unit(loc.dim(d), j))
                    img = {}
                    for c, v in enumerate(vec):
                        if v:
                            img[wmap[c]] = img.get(wmap[c], 0) + v
                    cols.append(self.alg.project(d, img))
                m = _cols_to_matrix(cols, self.alg.dim(d))
            self._emb[key] = m
        return m

    def restrict(self, fi, d):
        """Matrix of h_d(A) -> h_d(A_Y): delete letters outside the flat."""
        key = (fi, d)
        m = self._res.get(key)
        if m is None:
            members = self.arr.flats[fi].members
            loc = self.local_alg[fi]
            if d == 1:
                pos = {a: i for i, a in enumerate(members)}
                m = [[1 if pos.get(j) == i else 0 for j in range(self.alg.alphabet)]
                     for i in range(loc.alphabet)]
            else:
                wmap = restrict_word_map(self.alg.alphabet, members, d)
                cols = []
                for j in range(self.alg.dim(d)):
                    vec = self.alg.lift(d, _unit(self.alg.dim(d), j))
                    img = {}
                    for c, v in enumerate(vec):
                        if v and c in wmap:
                            img[wmap[c]] = img.get(wmap[c], 0) + v
                    cols.append(loc.project(d, img))
                m = _cols_to_matrix(cols, loc.dim(d))
            self._res[key] = m
        return m


def _unit(n, j):
    v = [0] * n
    v[j] = 1
    return v


def _cols_to_matrix(cols, nrows):
    return [[col[i] for col in cols] for i in range(nrows)]


def _mat_vec(m, v):
    return [sum(r[j] * v[j] for j in range(len(v)) if v[j]) for r in m]


def letter_matrix(alg_src, alg_dst, letter_map, d, guard=DEFAULT_GUARD):
    """Matrix on quotient coordinates induced by a bijective letter renaming.

    letter_map[i] is the destination letter for source letter i.  The
    renaming is not assumed order preserving, so each basis element is
    rewritten through its bracketing tree.
    """
    k = alg_src.alphabet
    if alg_dst.alphabet != k or sorted(letter_map) != list(range(k)):
        raise ValueError("letter map is not a bijection between the alphabets")
    if d == 1:
        return [[1 if letter_map[j] == i else 0 for j in range(k)] for i in range(k)]
    basis = lyndon_basis(k, d, guard)
    cols = []
    for j in range(alg_src.dim(d)):
        vec = alg_src.lift(d, _unit(alg_src.dim(d), j))
        poly = {}
        for c, v in enumerate(vec):
            if not v:
                continue
            for w, cf in expand_tree(_rename_tree(basis.trees[c], letter_map)).items():
                poly[w] = poly.get(w, 0) + v * cf
        cols.append(alg_dst.project(d, tensor_to_lyndon(poly, k, d, guard)))
    return _cols_to_matrix(cols, alg_dst.dim(d))


def _rename_tree(tree, letter_map):
    if isinstance(tree, int):
        return letter_map[tree]
    return (_rename_tree(tree[0], letter_map), _rename_tree(tree[1], letter_map))


def restriction_stack(arr, d, charts=None, guard=DEFAULT_GUARD, override=False):
    """Stacked restriction matrix h_d(A) -> direct sum of h_d(A_Y).

    Returns (matrix, local_dims) with one row block per flat, in flat
    order.  Full row rank over Q expresses surjectivity of localization;
    a square unimodular stack is the degree-d decomposability certificate.
    """
    ch = charts or Charts(arr, d, guard=guard, override=override)
    rows = []
    dims = []
    for f in arr.flats:
        block = ch.restrict(f.index, d)
        dims.append(len(block))
        rows.extend(block)
    return rows, dims


# ---------------------------------------------------------------------------
# lifts in correction form

@dataclass(frozen=True)
class LocalLift:
    """Lift data on one pencil: corrections (atom, degree) -> local coords."""
    flat: object
    n: int
    corrections: dict


@dataclass(frozen=True)
class GlobalLift:
    """Assembled lift candidate: corrections (atom, degree) -> global coords."""
    n: int
    corrections: dict


def local_lift(arr, flat_index, corrections, n, guard=DEFAULT_GUARD,
               override=False, alg=None):
    """Build and validate a LocalLift on the given rank-2 flat.

    corrections maps (atom, degree) to a coordinate vector in the degree-d
    piece of the local algebra; atoms may be names or global indices and
    degrees run in 2..n-1.  Below the top degree the corrections of a flat
    must sum to zero in each degree, otherwise the local relator brackets
    pick up nonzero components and the data does not define a lift.
    """
    if not 0 <= flat_index < len(arr.flats):
        raise ValueError("no flat with index %d" % flat_index)
    flat = arr.flats[flat_index]
    loc = alg if alg is not None else HolonomyAlgebra(
        localize(arr, flat_index), max_degree=n, guard=guard, override=override)
    pos = {a: i for i, a in enumerate(flat.members)}
    clean = {}
    for key, vec in corrections.items():
        atom, deg = key
        if isinstance(atom, str):
            atom = arr.atom_index(atom)
        if atom not in pos:
            raise ValueError(
                "correction outside the local Lie piece: atom %r is not in "
                "flat %d %r" % (arr.atoms[atom] if 0 <= atom < len(arr.atoms)
                                else atom, flat_index, flat.members))
        if not 2 <= deg <= n - 1:
            raise ValueError(
                "correction outside the local Lie piece: degree %d not in "
                "2..%d" % (deg, n - 1))
        vec = [int(v) for v in vec]
        if len(vec) != loc.dim(deg):
            raise ValueError(
                "correction outside the local Lie piece: degree %d of the "
                "local algebra has dimension %d, got %d"
                % (deg, loc.dim(deg), len(vec)))
        if any(vec):
            clean[(atom, deg)] = tuple(loc.quotient(deg).reduce(vec))
    for deg in range(2, n - 1):
        total = [0] * loc.dim(deg)
        for h in flat.members:
            v = clean.get((h, deg))
            if v:
                total = [a + b for a, b in zip(total, v)]
        if any(loc.quotient(deg).reduce(total)):
            raise ValueError(
                "corrections on flat %d do not define a lift: the degree %d "
                "corrections must sum to zero in the local algebra"
                % (flat_index, deg))
    return LocalLift(flat=flat, n=n, corrections=clean)


def zero_local_lifts(arr, n):
    """One correction-free LocalLift per flat."""
    return [LocalLift(flat=f, n=n, corrections={}) for f in arr.flats]


def _phi_table(alg, corrections, n):
    """phi(x_a) by degree: {degree: coords}, degree 1 being the unit vector."""
    tab = []
    for a in range(alg.alphabet):
        row = {1: _unit(alg.alphabet, a)}
        for i in range(2, n):
            v = corrections.get((a, i))
            if v and any(v):
                row[i] = list(v)
        tab.append(row)
    return tab


def _relator_component(alg, tab, h, members, m):
    """Degree-m coordinates of [phi(x_h), phi(z_Y)] for the flat Y."""
    total = [0] * alg.dim(m)
    for i in range(1, m):
        u = tab[h].get(i)
        if u is None:
            continue
        j = m - i
        c = [0] * (alg.alphabet if j == 1 else alg.dim(j))
        for kk in members:
            w = tab[kk].get(j)
            if w:
                c = [a + b for a, b in zip(c, w)]
        if not any(c):
            continue
        b = alg.bracket_coords(i, u, j, c)
        total = [a + b2 for a, b2 in zip(total, b)]
    return alg.quotient(m).reduce(total) if m >= 2 else total


def _local_delta_cols(loc, llift, n):
    """Degree-n relator components of a local lift, one column per atom."""
    k = loc.alphabet
    pos = {a: i for i, a in enumerate(llift.flat.members)}
    corr = {(pos[a], d): v for (a, d), v in llift.corrections.items()}
    tab = _phi_table(loc, corr, n)
    members = list(range(k))
    return {a: _relator_component(loc, tab, pos[a], members, n)
            for a in llift.flat.members}


def assemble_global_lift(locals_, arr, n, guard=DEFAULT_GUARD, override=False,
                         charts=None):
    """Assemble local lifts into a global lift candidate and vet it.

    The global correction of an atom in each degree is the sum over flats
    containing it of the embedded local correction.  For the result to be
    an endomorphism of the truncated algebra every relator bracket must
    vanish in degrees up to n-1; a nonzero component is reported with its
    witness and no GlobalLift is produced.  The degree-n components, which
    live past the truncation, are checked against the local ones through
    restriction (the localization square) before returning.
    """
    ch = charts or Charts(arr, n, guard=guard, override=override)
    by_flat = {}
    for ll in locals_:
        if not isinstance(ll, LocalLift):
            raise TypeError("expected LocalLift instances")
        fi = ll.flat.index
        if fi in by_flat:
            raise ValueError("two local lifts given for flat %d" % fi)
        by_flat[fi] = ll
    for f in arr.flats:
        if f.index not in by_flat:
            raise ValueError("missing flat: no local lift for flat %d %r"
                             % (f.index, f.members))
    for f in arr.flats:
        ll = by_flat[f.index]
        if ll.n != n:
            raise ValueError("local lift on flat %d was built for degree %d, "
                             "not %d" % (f.index, ll.n, n))
        local_lift(arr, f.index, ll.corrections, n, guard=guard,
                   override=override, alg=ch.local_alg[f.index])

    glob = {}
    for f in arr.flats:
        ll = by_flat[f.index]
        for (atom, deg), vec in sorted(ll.corrections.items()):
            img = _mat_vec(ch.embed(f.index, deg), list(vec))
            key = (atom, deg)
            cur = glob.get(key)
            glob[key] = img if cur is None else [a + b for a, b in zip(cur, img)]
    corrections = {}
    for key in sorted(glob):
        deg = key[1]
        vec = ch.alg.quotient(deg).reduce(glob[key])
        if any(vec):
            corrections[key] = tuple(vec)

    tab = _phi_table(ch.alg, corrections, n)
    for m in range(3, n):
        for f in arr.flats:
            for h in f.members:
                comp = _relator_component(ch.alg, tab, h, f.members, m)
                if any(comp):
                    raise ValueError(
                        "corrections do not assemble to an endomorphism: the "
                        "relator of atom %r on flat %d %r has a nonzero "
                        "degree %d component %r"
                        % (arr.atoms[h], f.index, f.members, m, list(comp)))

    glift = GlobalLift(n=n, corrections=corrections)
    full = delta_matrix(arr, glift, charts=ch)
    for f in arr.flats:
        total = [0] * ch.alg.dim(n)
        for h in f.members:
            total = [a + b for a, b in zip(total, full[(h, f.index)])]
        if any(ch.alg.quotient(n).reduce(total)):
            raise RuntimeError("degree-%d relator components of flat %d do "
                               "not sum to zero" % (n, f.index))
    for f in arr.flats:
        loc = ch.local_alg[f.index]
        local_cols = _local_delta_cols(loc, by_flat[f.index], n)
        for g in arr.flats:
            res = ch.restrict(f.index, n)
            for h in g.members:
                got = loc.quotient(n).reduce(_mat_vec(res, full[(h, g.index)]))
                want = local_cols[h] if g.index == f.index else [0] * loc.dim(n)
                if list(got) != list(want):
                    raise RuntimeError(
                        "localization square fails at flat %d, relator "
                        "(%r, %d): restricted column %r, local column %r"
                        % (f.index, arr.atoms[h], g.index, list(got), list(want)))
    return glift


def localize_global_lift(arr, glift, charts=None, guard=DEFAULT_GUARD,
                         override=False):
    """Per-flat local lifts recovered by restricting a global lift.

    Restriction deletes every Lyndon word that uses a letter outside the
    flat, so corrections embedded from other flats disappear and assembling
    then localizing returns the original local data.
    """
    n = glift.n
    ch = charts or Charts(arr, n, guard=guard, override=override)
    out = []
    for f in arr.flats:
        loc = ch.local_alg[f.index]
        corr = {}
        for h in f.members:
            for deg in range(2, n):
                vec = glift.corrections.get((h, deg))
                if vec is None:
                    continue
                v = loc.quotient(deg).reduce(_mat_vec(ch.restrict(f.index, deg), list(vec)))
                if any(v):
                    corr[(h, deg)] = tuple(v)
        out.append(LocalLift(flat=f, n=n, corrections=corr))
    return out


def delta_matrix(arr, glift, charts=None, guard=DEFAULT_GUARD, override=False):
    """Degree-n relator components of a global lift, one column per relator.

    Returns {(atom, flat index): coordinate vector in the degree-n piece}.
    These are the entries of the top block of the induced H2 matrix.
    """
    n = glift.n
    ch = charts or Charts(arr, n, guard=guard, override=override)
    tab = _phi_table(ch.alg, glift.corrections, n)
    out = {}
    for f in arr.flats:
        for h in f.members:
            out[(h, f.index)] = list(_relator_component(ch.alg, tab, h, f.members, n))
    return out


def relator_basis(arr):
    """Basis of H2 of the complement: per flat, drop the largest atom.

    The relator classes of a flat sum to zero, so the others form a basis;
    returns the list of (atom, flat index) pairs in flat order.
    """
    out = []
    for f in arr.flats:
        drop = max(f.members)
        out.extend((h, f.index) for h in f.members if h != drop)
    return out


def lift_h2_matrix(arr, glift, charts=None, guard=DEFAULT_GUARD, override=False):
    """Induced map on H2 of the lift, in split coordinates.

    H2 of the degree-n quotient group splits as the degree-n graded piece
    plus H2 of the complement; the lift acts as the identity on the second
    block and by the relator components on the first.  Rows: degree-n
    coordinates then relator basis; columns: relator basis.
    """
    ch = charts or Charts(arr, glift.n, guard=guard, override=override)
    full = delta_matrix(arr, glift, charts=ch)
    pairs = relator_basis(arr)
    top = _cols_to_matrix([full[p] for p in pairs], ch.alg.dim(glift.n))
    return top + exactla.identity(len(pairs))


# ---------------------------------------------------------------------------
# diagram instances

@dataclass(frozen=True)
class DiagramInstance:
    """Matrix data of the H2 comparison triangle over a coefficient ring.

    g2: H2(X_a) -> H2(X_b) on relator bases; la_star, lb_star: induced maps
    of the two lifts into the split H2 of the common nilpotent quotient;
    sigma: splitting H2(N) -> degree-n piece.
    """
    g2: tuple
    la_star: tuple
    lb_star: tuple
    sigma: tuple
    ring: tuple = rings.Z


def _freeze(mat):
    return tuple(tuple(r) for r in mat)


def diagram_instance(g2, la_star, lb_star, sigma, ring=rings.Z):
    return DiagramInstance(_freeze(g2), _freeze(la_star), _freeze(lb_star),
                           _freeze(sigma), ring)


def _is_zero_mat(mat, p):
    for row in mat:
        for v in row:
            if (v % p if p else v) != 0:
                return False
    return True


def _first_bad_column(a, b, p):
    for j in range(len(a[0]) if a else 0):
        for i in range(len(a)):
            d = a[i][j] - b[i][j]
            if (d % p if p else d) != 0:
                return j
    return None


def _invertible(mat, ring):
    n = len(mat)
    if any(len(r) != n for r in mat):
        return False
    if n == 0:
        return True
    p = rings.char(ring)
    if any(not isinstance(v, int) for r in mat for v in r):
        return exactla.inverse_field([list(r) for r in mat], p) is not None
    d = exactla.det_int([list(r) for r in mat])
    if ring == rings.Z:
        return d in (1, -1)
    if p:
        return d % p != 0
    return d != 0


def check_diagram(d):
    """Check the two commutation identities of a DiagramInstance.

    Identity 1: lb_star composed with g2 equals la_star.  Identity 2: sigma
    after la_star equals sigma after lb_star after g2.  Both are exact
    matrix identities over the instance ring; the report carries the first
    violated identity and a witness column.
    """
    if not isinstance(d, DiagramInstance):
        raise TypeError("check_diagram expects a DiagramInstance")
    g2 = [list(r) for r in d.g2]
    la = [list(r) for r in d.la_star]
    lb = [list(r) for r in d.lb_star]
    sg = [list(r) for r in d.sigma]
    ca = len(la[0]) if la else (len(g2[0]) if g2 else 0)
    cb = len(g2)
    h2n = len(la)
    if len(lb) != h2n:
        raise ValueError("shape mismatch: la_star has %d rows, lb_star %d"
                         % (h2n, len(lb)))
    if any(len(r) != ca for r in la):
        raise ValueError("shape mismatch: ragged la_star")
    if any(len(r) != cb for r in lb):
        raise ValueError("shape mismatch: lb_star is %d columns wide but g2 "
                         "has %d rows" % (len(lb[0]) if lb else 0, cb))
    if any(len(r) != ca for r in g2):
        raise ValueError("shape mismatch: g2 must be %dx%d" % (cb, ca))
    if sg and any(len(r) != h2n for r in sg):
        raise ValueError("shape mismatch: sigma must have %d columns" % h2n)
    if not _invertible(g2, d.ring):
        raise ValueError("g2 is not invertible over %s" % rings.name(d.ring))
    p = rings.char(d.ring)
    rep = {"pass": True, "ring": rings.name(d.ring), "failed": None,
           "witness": None, "identity1": True, "identity2": True}
    lhs1 = exactla.mat_mul(lb, g2)
    bad = _first_bad_column(lhs1, la, p) if la else None
    if bad is not None:
        rep.update(
            {"pass": False, "failed": 1, "identity1": False,
             "witness": {"identity": 1, "column": bad,
                         "lhs": [r[bad] for r in lhs1],
                         "rhs": [r[bad] for r in la]}})
        rep["identity2"] = None
        return rep
    lhs2 = exactla.mat_mul(sg, la)
    rhs2 = exactla.mat_mul(exactla.mat_mul(sg, lb), g2)
    bad = _first_bad_column(lhs2, rhs2, p) if lhs2 else None
    if bad is not None:
        rep.update(
            {"pass": False, "failed": 2, "identity2": False,
             "witness": {"identity": 2, "column": bad,
                         "lhs": [r[bad] for r in lhs2],
                         "rhs": [r[bad] for r in rhs2]}})
    return rep


# ---------------------------------------------------------------------------
# lattice isomorphisms and the end-to-end verifier

@dataclass(frozen=True)
class LatticeIso:
    """Atom bijection A -> B inducing a bijection of rank-2 flats."""
    atom_map: tuple
    flat_map: tuple


def lattice_iso(arr_a, arr_b, mapping):
    """Validate an atom bijection as a rank <= 2 lattice isomorphism.

    mapping takes A-atoms to B-atoms, by name or by index (a dict, or a
    sequence giving images in atom order).  Every pencil of A must land
    exactly on a pencil of B of the same size.
    """
    ka, kb = len(arr_a.atoms), len(arr_b.atoms)
    if ka != kb:
        raise ValueError("atom counts differ: %d vs %d" % (ka, kb))
    if isinstance(mapping, dict):
        amap = [None] * ka
        for src, dst in mapping.items():
            i = arr_a.atom_index(src) if isinstance(src, str) else int(src)
            j = arr_b.atom_index(dst) if isinstance(dst, str) else int(dst)
            if not 0 <= i < ka:
                raise ValueError("unknown atom index %d" % i)
            amap[i] = j
    else:
        amap = [arr_b.atom_index(x) if isinstance(x, str) else int(x)
                for x in mapping]
        if len(amap) != ka:
            raise ValueError("mapping lists %d images for %d atoms"
                             % (len(amap), ka))
    if None in amap or sorted(amap) != list(range(kb)):
        raise ValueError("mapping is not a bijection onto the atoms of B")
    pencil_index = {f.members: f.index for f in arr_b.flats}
    fmap = []
    for f in arr_a.flats:
        image = tuple(sorted(amap[h] for h in f.members))
        fj = pencil_index.get(image)
        if fj is None:
            raise ValueError(
                "invalid iso (pencil not preserved): flat %d %r maps onto "
                "%r which is not a pencil of B" % (f.index, f.members, image))
        fmap.append(fj)
    if sorted(fmap) != list(range(len(arr_b.flats))):
        raise ValueError("invalid iso (pencil not preserved): flat images "
                         "are not a bijection")
    return LatticeIso(atom_map=tuple(amap), flat_map=tuple(fmap))


def iso_h2_matrix(arr_a, arr_b, iso):
    """Matrix of the induced map H2(X_A) -> H2(X_B) on relator bases.

    A relator class (H, Y) goes to (g(H), g(Y)); when g(H) is the dropped
    atom of the image flat it is rewritten as minus the sum of the others.
    """
    pairs_a = relator_basis(arr_a)
    pairs_b = relator_basis(arr_b)
    index_b = {p: i for i, p in enumerate(pairs_b)}
    rows = len(pairs_b)
    cols = []
    for h, fi in pairs_a:
        gj = iso.flat_map[fi]
        gh = iso.atom_map[h]
        members = arr_b.flats[gj].members
        drop = max(members)
        col = [0] * rows
        if gh != drop:
            col[index_b[(gh, gj)]] = 1
        else:
            for k in members:
                if k != drop:
                    col[index_b[(k, gj)]] = -1
        cols.append(col)
    return _cols_to_matrix(cols, rows)


def _transport_local(ch_a, ch_b, iso, fi_a, llift_b, n, guard):
    """Pull a B-side local lift back to the matching A-flat by renaming."""
    fa = ch_a.arr.flats[fi_a]
    fb = ch_b.arr.flats[iso.flat_map[fi_a]]
    pos_b = {a: i for i, a in enumerate(fb.members)}
    fwd = [pos_b[iso.atom_map[h]] for h in fa.members]
    back = [0] * len(fwd)
    for i, j in enumerate(fwd):
        back[j] = i
    loc_a = ch_a.local_alg[fi_a]
    loc_b = ch_b.local_alg[iso.flat_map[fi_a]]
    back_atom = {iso.atom_map[h]: h for h in fa.members}
    corr = {}
    for (atom_b, deg), vec in sorted(llift_b.corrections.items()):
        q = letter_matrix(loc_b, loc_a, back, deg, guard=guard)
        v = loc_a.quotient(deg).reduce(_mat_vec(q, list(vec)))
        if any(v):
            corr[(back_atom[atom_b], deg)] = tuple(v)
    return LocalLift(flat=fa, n=n, corrections=corr)


def _stack_restriction(ch, n):
    rows, dims = restriction_stack(ch.arr, n, charts=ch)
    return rows, dims


def _sigma_from_locals(ch, n, ring, local_lams=None):
    """Assemble the splitting H2(N) -> gr_n from per-flat splittings.

    Local splittings are identity-minus-lambda blocks; the stacked degree-n
    restriction matrix must be invertible over the ring (this is the
    decomposability certificate in degree n), and the assembled map is
    [I | -rho^{-1} Lambda] in split coordinates.
    """
    rho, dims = _stack_restriction(ch, n)
    g = ch.alg.dim(n)
    if len(rho) != g:
        raise ValueError(
            "degree-%d localization is not square: %d local against %d "
            "global coordinates; the arrangement is not decomposable in "
            "this degree" % (n, len(rho), g))
    if not _invertible(rho, ring):
        raise ValueError("degree-%d localization matrix is not invertible "
                         "over %s" % (n, rings.name(ring)))
    pairs = relator_basis(ch.arr)
    b2 = len(pairs)
    if local_lams:
        offsets = {}
        off = 0
        for f, d in zip(ch.arr.flats, dims):
            offsets[f.index] = off
            off += d
        stacked = [[0] * b2 for _ in range(len(rho))]
        for fi, lam in sorted(local_lams.items()):
            f = ch.arr.flats[fi]
            local_pairs = [(h, fi) for h in f.members if h != max(f.members)]
            dloc = dims[fi]
            if len(lam) != dloc or any(len(r) != len(local_pairs) for r in lam):
                raise ValueError(
                    "local splitting block on flat %d must be %dx%d"
                    % (fi, dloc, len(local_pairs)))
            for i in range(dloc):
                for j, p in enumerate(local_pairs):
                    stacked[offsets[fi] + i][pairs.index(p)] += lam[i][j]
        p = rings.char(ring)
        if ring == rings.Z:
            sol = exactla.solve_int(rho, exactla.transpose(stacked))
            if sol is None:
                raise ValueError("local splittings do not descend to an "
                                 "integral global splitting")
            lam_global = exactla.transpose(sol)
        else:
            inv = exactla.inverse_field(
                exactla.mat_mod(rho, p) if p else rho, p)
            lam_global = exactla.mat_mul(inv, stacked)
            if p:
                lam_global = exactla.mat_mod(lam_global, p)
    else:
        lam_global = [[0] * b2 for _ in range(g)]
    sigma = [[1 if i == j else 0 for j in range(g)] +
             [-lam_global[i][j] for j in range(b2)] for i in range(g)]
    return sigma, rho


def _norm_perturb(perturb):
    if perturb is None:
        return None
    if isinstance(perturb, str):
        perturb = {"kind": perturb}
    else:
        perturb = dict(perturb)
    if perturb.get("kind") not in ("sigma", "lift"):
        raise ValueError("perturb kind must be 'sigma' or 'lift'")
    return perturb


def verify_decomposable_iso(arr_a, arr_b, iso, n=4, ring=rings.Z,
                            corrections=None, sigma_lams=None, perturb=None,
                            guard=DEFAULT_GUARD, override=False):
    """End-to-end diagram certificate for a lattice isomorphism at level n.

    Builds the degree-n nilpotent comparison on the B side: local lifts
    (zero corrections, or the given B-side corrections keyed by flat),
    their transported copies on the A side, the assembled global lifts,
    the induced H2 matrices, the relabeling matrix g2, and the assembled
    splitting sigma.  Runs check_diagram on the result and returns the
    verdict together with every constructed matrix for audit.

    perturb is a negative-control hook: kind 'sigma' adds a nonzero lambda
    to the splitting on the A leg only, kind 'lift' adds a valid top-degree
    correction to one transported A-side local lift.  Either change must
    make the certificate fail; a passing perturbed run would be a bug.
    """
    if not isinstance(iso, LatticeIso):
        iso = lattice_iso(arr_a, arr_b, iso)
    rep_a = is_decomposable(arr_a, guard=guard, override=override)
    rep_b = is_decomposable(arr_b, guard=guard, override=override)
    for side, rep in (("A", rep_a), ("B", rep_b)):
        if not rep["decomposable"]:
            raise ValueError(
                "arrangement %s is not decomposable (r_global=%d, r_local=%d"
                ", torsion=%r); the comparison needs decomposable inputs"
                % (side, rep["r_global"], rep["r_local"], rep["torsion"]))
    if n < 3:
        raise ValueError("the comparison starts at degree 3")
    perturb = _norm_perturb(perturb)

    ch_a = Charts(arr_a, n, guard=guard, override=override)
    ch_b = Charts(arr_b, n, guard=guard, override=override)

    locals_b = []
    given = corrections or {}
    for f in arr_b.flats:
        corr = given.get(f.index, {})
        locals_b.append(local_lift(arr_b, f.index, corr, n, guard=guard,
                                   override=override,
                                   alg=ch_b.local_alg[f.index]))
    glift_b = assemble_global_lift(locals_b, arr_b, n, guard=guard,
                                   override=override, charts=ch_b)
    recovered = localize_global_lift(arr_b, glift_b, charts=ch_b)
    for want, got in zip(locals_b, recovered):
        if want.corrections != got.corrections:
            raise RuntimeError("localizing the assembled lift did not return "
                               "the local corrections on flat %d"
                               % want.flat.index)

    locals_a = [_transport_local(ch_a, ch_b, iso, f.index,
                                 locals_b[iso.flat_map[f.index]], n, guard)
                for f in arr_a.flats]
    if perturb and perturb["kind"] == "lift":
        fi = perturb.get("flat")
        if fi is None:
            fi = next((f.index for f in arr_a.flats
                       if ch_a.local_alg[f.index].dim(n - 1) > 0), None)
            if fi is None:
                raise ValueError("cannot perturb a lift: every local algebra "
                                 "vanishes in degree %d" % (n - 1))
        loc = ch_a.local_alg[fi]
        deg = int(perturb.get("degree", n - 1))
        vec = list(perturb.get("vector", _unit(loc.dim(deg), 0)))
        atom = perturb.get("atom", arr_a.flats[fi].members[0])
        if isinstance(atom, str):
            atom = arr_a.atom_index(atom)
        corr = dict(locals_a[fi].corrections)
        old = list(corr.get((atom, deg), [0] * loc.dim(deg)))
        corr[(atom, deg)] = tuple(a + b for a, b in zip(old, vec))
        locals_a[fi] = local_lift(arr_a, fi, corr, n, guard=guard,
                                  override=override, alg=loc)
    glift_a = assemble_global_lift(locals_a, arr_a, n, guard=guard,
                                   override=override, charts=ch_a)

    g_n = letter_matrix(ch_a.alg, ch_b.alg, list(iso.atom_map), n, guard=guard)
    pairs_a = relator_basis(arr_a)
    pairs_b = relator_basis(arr_b)
    delta_a_full = delta_matrix(arr_a, glift_a, charts=ch_a)
    delta_b_full = delta_matrix(arr_b, glift_b, charts=ch_b)
    delta_a = _cols_to_matrix(
        [ch_b.alg.quotient(n).reduce(_mat_vec(g_n, delta_a_full[p]))
         for p in pairs_a], ch_b.alg.dim(n))
    delta_b = _cols_to_matrix([delta_b_full[p] for p in pairs_b],
                              ch_b.alg.dim(n))
    g2 = iso_h2_matrix(arr_a, arr_b, iso)
    la = delta_a + g2
    lb = delta_b + exactla.identity(len(pairs_b))

    sigma, rho = _sigma_from_locals(ch_b, n, ring, local_lams=sigma_lams)
    inst = diagram_instance(g2, la, lb, sigma, ring)

    if perturb and perturb["kind"] == "sigma":
        g = ch_b.alg.dim(n)
        b2 = len(pairs_b)
        if g == 0 or b2 == 0:
            raise ValueError("cannot perturb sigma: the degree-%d piece or "
                             "H2 of the complement is zero" % n)
        lam = perturb.get("lam")
        if lam is None:
            lam = [[1 if (i, j) == (0, 0) else 0 for j in range(b2)]
                   for i in range(g)]
        sigma_a = [row[:g] + [row[g + j] - lam[i][j] for j in range(b2)]
                   for i, row in enumerate(sigma)]
        p = rings.char(ring)
        check = check_diagram(inst)
        lhs2 = exactla.mat_mul(sigma_a, la)
        rhs2 = exactla.mat_mul(exactla.mat_mul(sigma, lb), g2)
        bad = _first_bad_column(lhs2, rhs2, p) if lhs2 else None
        if bad is not None:
            check = dict(check)
            check.update(
                {"pass": False, "failed": 2, "identity2": False,
                 "witness": {"identity": 2, "column": bad,
                             "lhs": [r[bad] for r in lhs2],
                             "rhs": [r[bad] for r in rhs2]}})
    else:
        check = check_diagram(inst)

    report = {
        "pass": bool(check["pass"]),
        "ring": rings.name(ring),
        "degree": n,
        "check": check,
        "perturb": perturb,
        "candidates": "transported" if corrections else "zero",
        "decomposable": {"a": rep_a, "b": rep_b},
        "iso": {"atoms": {arr_a.atoms[i]: arr_b.atoms[j]
                          for i, j in enumerate(iso.atom_map)},
                "flats": list(iso.flat_map)},
        "basis": {"relators_a": [[arr_a.atoms[h], fi] for h, fi in pairs_a],
                  "relators_b": [[arr_b.atoms[h], fi] for h, fi in pairs_b],
                  "grn_dim": ch_b.alg.dim(n),
                  "grn_torsion": list(ch_b.alg.torsion(n))},
        "matrices": {"g2": g2, "la_star": la, "lb_star": lb, "sigma": sigma,
                     "rho": rho, "g_n": g_n, "delta_a": delta_a,
                     "delta_b": delta_b},
    }
    return report
