"""Central hyperplane arrangements through their rank <= 2 intersection data.

An arrangement is a list of atoms (hyperplane labels) plus the family of
rank-2 pencils: every unordered pair of atoms lies in exactly one pencil.
Coordinates are optional; when normals (exact rationals) are given the
pencils are derived as maximal coincidence classes of 2-dimensional spans
and, if pencils were also supplied, the two must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from . import exactla


class ArrangementError(ValueError):
    """Invalid arrangement data (bad atoms, normals, or pencil cover)."""


@dataclass(frozen=True)
class Flat2:
    """A rank-2 flat: the pencil of atoms containing it, with its Mobius value."""
    index: int
    members: tuple
    mu: int


@dataclass(frozen=True)
class BettiData:
    b1: int
    b2: int


def _int_rows(vectors):
    """Clear denominators: rational vectors -> integer sparse rows."""
    rows = []
    for v in vectors:
        den = lcm(*(f.denominator for f in v)) if v else 1
        rows.append({j: int(f * den) for j, f in enumerate(v) if f})
    return rows


def _span_rank(vectors):
    return exactla.rank_sparse(_int_rows(vectors))


def pencils_from_normals(atoms, normals):
    """Rank-2 coincidence classes of the normals, as sorted index tuples.

    Raises ArrangementError on zero, proportional, or ragged normals,
    naming the offending atoms.
    """
    m = len(normals)
    if m != len(atoms):
        raise ArrangementError("got %d normals for %d atoms" % (m, len(atoms)))
    dims = {len(v) for v in normals}
    if len(dims) > 1:
        raise ArrangementError("normals have mixed dimensions %s" % sorted(dims))
    for i, v in enumerate(normals):
        if all(x == 0 for x in v):
            raise ArrangementError("normal of atom %r is zero" % (atoms[i],))
    for i in range(m):
        for j in range(i + 1, m):
            if _span_rank([normals[i], normals[j]]) < 2:
                raise ArrangementError(
                    "normals of atoms %r and %r are proportional" % (atoms[i], atoms[j]))
    flats = set()
    for i in range(m):
        for j in range(i + 1, m):
            members = [i, j]
            for l in range(m):
                if l != i and l != j and _span_rank([normals[i], normals[j], normals[l]]) == 2:
                    members.append(l)
            flats.add(tuple(sorted(members)))
    out = sorted(flats)
    _check_pair_cover(atoms, out)
    return out


def _check_pair_cover(atoms, pencils):
    m = len(atoms)
    seen = {}
    for t, pen in enumerate(pencils):
        if len(pen) < 2:
            raise ArrangementError("pencil %r has fewer than two atoms" % (pen,))
        if len(set(pen)) != len(pen) or list(pen) != sorted(pen):
            raise ArrangementError("pencil %r is not a sorted set of atom indices" % (pen,))
        if pen[0] < 0 or pen[-1] >= m:
            raise ArrangementError("pencil %r references a missing atom" % (pen,))
        for a in range(len(pen)):
            for b in range(a + 1, len(pen)):
                pair = (pen[a], pen[b])
                if pair in seen:
                    raise ArrangementError(
                        "atoms %r and %r lie in two pencils" % (atoms[pair[0]], atoms[pair[1]]))
                seen[pair] = t
    for i in range(m):
        for j in range(i + 1, m):
            if (i, j) not in seen:
                raise ArrangementError(
                    "atoms %r and %r lie in no pencil" % (atoms[i], atoms[j]))


class Arrangement:
    """Atoms plus rank-2 pencils; normals optional and exact."""

    def __init__(self, atoms, normals=None, pencils=None):
        atoms = tuple(str(a) for a in atoms)
        if not atoms:
            raise ArrangementError("arrangement needs at least one atom")
        if len(set(atoms)) != len(atoms):
            raise ArrangementError("duplicate atom names")
        if normals is None and pencils is None:
            raise ArrangementError("need normals or pencils")
        if normals is not None:
            normals = tuple(tuple(Fraction(x) for x in v) for v in normals)
            derived = [tuple(p) for p in pencils_from_normals(atoms, normals)]
            if pencils is not None:
                given = sorted(tuple(sorted(p)) for p in pencils)
                if given != derived:
                    raise ArrangementError(
                        "given pencils disagree with the ones derived from normals: "
                        "%s vs %s" % (given, derived))
            pencils = derived
        else:
            pencils = sorted(tuple(sorted(int(i) for i in p)) for p in pencils)
            _check_pair_cover(atoms, pencils)
        self.atoms = atoms
        self.normals = normals
        self.pencils = tuple(pencils)
        self.flats = tuple(
            Flat2(index=t, members=pen, mu=len(pen) - 1)
            for t, pen in enumerate(self.pencils))

    @property
    def n_atoms(self):
        return len(self.atoms)

    def atom_index(self, name):
        try:
            return self.atoms.index(name)
        except ValueError:
            raise ArrangementError("unknown atom %r" % (name,)) from None

    def __repr__(self):
        return "Arrangement(%d atoms, %d pencils)" % (len(self.atoms), len(self.pencils))


def mobius_l2(arr):
    """Mobius values of the rank-2 flats, via the lattice recursion.

    mu(top) = 1, mu(atom) = -mu(top), mu(Y) = -(mu(top) + sum of mu over
    the atoms containing Y); for a pencil of m atoms this is m - 1.
    """
    mu_top = 1
    mu_atom = -mu_top
    return [-(mu_top + mu_atom * len(f.members)) for f in arr.flats]


def betti(arr):
    """First and second Betti numbers of the complement."""
    return BettiData(b1=len(arr.atoms), b2=sum(mobius_l2(arr)))


def localize(arr, flat_index):
    """Sub-arrangement on the atoms of one rank-2 flat (a single pencil)."""
    if not 0 <= flat_index < len(arr.flats):
        raise ArrangementError("no flat with index %d" % flat_index)
    members = arr.flats[flat_index].members
    atoms = [arr.atoms[i] for i in members]
    normals = [arr.normals[i] for i in members] if arr.normals is not None else None
    return Arrangement(atoms, normals=normals,
                       pencils=None if normals is not None else [tuple(range(len(members)))])


# ---------------------------------------------------------------------------
# catalog generators

def braid(n):
    """Braid arrangement A_n: hyperplanes x_i = x_j in C^n, normals e_i - e_j."""
    if n < 2:
        raise ArrangementError("braid(n) needs n >= 2")
    atoms, normals = [], []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            atoms.append("H%d%d" % (i, j))
            v = [Fraction(0)] * n
            v[i - 1] = Fraction(1)
            v[j - 1] = Fraction(-1)
            normals.append(v)
    return Arrangement(atoms, normals=normals)


def pencil(k):
    """k lines through one point: a single pencil on all atoms."""
    if k < 2:
        raise ArrangementError("pencil(k) needs k >= 2")
    return Arrangement(["H%d" % (i + 1) for i in range(k)],
                       pencils=[tuple(range(k))])


def generic(k):
    """k hyperplanes in general position: every pencil is a double point."""
    if k < 1:
        raise ArrangementError("generic(k) needs k >= 1")
    pens = [(i, j) for i in range(k) for j in range(i + 1, k)]
    if k == 1:
        pens = []
    return Arrangement(["H%d" % (i + 1) for i in range(k)], pencils=pens)


def near_pencil(k):
    """One pencil of size k-1 plus double points with the last atom."""
    if k < 3:
        raise ArrangementError("near_pencil(k) needs k >= 3")
    pens = [tuple(range(k - 1))] + [(i, k - 1) for i in range(k - 1)]
    return Arrangement(["H%d" % (i + 1) for i in range(k)], pencils=pens)


_CATALOG = {"braid": braid, "pencil": pencil, "generic": generic, "near_pencil": near_pencil}


def catalog_arrangement(name, param):
    gen = _CATALOG.get(name)
    if gen is None:
        raise ArrangementError(
            "unknown catalog family %r (have: %s)" % (name, ", ".join(sorted(_CATALOG))))
    return gen(param)


def standard_catalog():
    """The deterministic desk-scale corpus used by the test suite."""
    out = []
    for n in (3, 4, 5):
        out.append(("braid(%d)" % n, braid(n)))
    for k in (2, 3, 4, 5, 6):
        out.append(("pencil(%d)" % k, pencil(k)))
    for k in (2, 3, 4, 5, 6):
        out.append(("generic(%d)" % k, generic(k)))
    for k in (3, 4, 5, 6):
        out.append(("near_pencil(%d)" % k, near_pencil(k)))
    return out


# ---------------------------------------------------------------------------
# JSON interchange; big integers as strings beyond the 53-bit safe range

_SAFE = 2 ** 53


def _int_to_json(v):
    return v if abs(v) < _SAFE else str(v)


def rat_to_json(f):
    f = Fraction(f)
    if f.denominator == 1:
        return _int_to_json(f.numerator)
    return [_int_to_json(f.numerator), _int_to_json(f.denominator)]


def rat_from_json(obj):
    if isinstance(obj, bool):
        raise ArrangementError("boolean is not a rational: %r" % (obj,))
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, str):
        try:
            return Fraction(obj)
        except (ValueError, ZeroDivisionError):
            raise ArrangementError("bad rational string %r" % (obj,)) from None
    if isinstance(obj, list) and len(obj) == 2:
        num, den = (rat_from_json(x) for x in obj)
        if den == 0:
            raise ArrangementError("zero denominator in %r" % (obj,))
        return num / den
    if isinstance(obj, float):
        raise ArrangementError("floats are not accepted, use strings or [num, den]: %r" % obj)
    raise ArrangementError("bad rational %r" % (obj,))


def arrangement_to_json(arr):
    out = {"atoms": list(arr.atoms),
           "pencils": [list(p) for p in arr.pencils]}
    if arr.normals is not None:
        out["normals"] = [[rat_to_json(x) for x in v] for v in arr.normals]
    return out


def arrangement_from_json(obj):
    if not isinstance(obj, dict):
        raise ArrangementError("arrangement JSON must be an object")
    if "atoms" not in obj:
        raise ArrangementError("arrangement JSON needs an 'atoms' list")
    atoms = obj["atoms"]
    normals = obj.get("normals")
    pencils = obj.get("pencils")
    if normals is None and pencils is None:
        raise ArrangementError("arrangement JSON needs 'normals' or 'pencils'")
    if normals is not None:
        normals = [[rat_from_json(x) for x in v] for v in normals]
    return Arrangement(atoms, normals=normals, pencils=pencils)


def load_arrangement(path):
    import json
    with open(path) as f:
        try:
            obj = json.load(f)
        except ValueError as e:
            raise ArrangementError("bad JSON in %s: %s" % (path, e)) from None
    return arrangement_from_json(obj)
