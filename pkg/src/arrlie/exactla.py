"""Exact linear algebra over Z, Q and F_p.

Everything here works with arbitrary-precision Python ints.  Rank
computations use sparse gcd-reduced elimination (no fractions, no
floats); Smith normal form is dense with full transform tracking so
callers can build quotient-lattice coordinates from it.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

# Deterministic pool of large primes for the modular rank cross-check.
_CHECK_PRIMES = (
    2147483647, 2147483629, 2147483587, 2147483579, 2147483563,
    2147483549, 2147483543, 2147483497, 2147483489, 2147483477,
)


def rank_sparse(rows, p=None):
    """Rank of the row span, exactly over Q (p=None) or over F_p.

    rows: iterable of {col: int} sparse rows.  Input rows are not modified.
    """
    return rank_sparse_pivots(rows, p=p)[0]


def rank_sparse_pivots(rows, p=None):
    """(rank, sorted pivot columns) of the row span over Q or F_p."""
    live = {}
    for r in rows:
        if p is None:
            d = {c: v for c, v in r.items() if v != 0}
        else:
            d = {}
            for c, v in r.items():
                v %= p
                if v:
                    d[c] = v
        if d:
            live[len(live)] = d
    col_rows = {}
    for rid, row in live.items():
        for c in row:
            col_rows.setdefault(c, set()).add(rid)
    rank = 0
    pivots = []
    while live:
        # pivot column with fewest live rows keeps fill-in low
        col = min(col_rows, key=lambda c: (len(col_rows[c]), c))
        pivots.append(col)
        rids = col_rows[col]
        prid = min(rids, key=lambda rid: (len(live[rid]), abs(live[rid][col]), rid))
        prow = live.pop(prid)
        for c in prow:
            s = col_rows[c]
            s.discard(prid)
            if not s:
                del col_rows[c]
        rank += 1
        pv = prow[col]
        for rid in sorted(col_rows.get(col, ())):
            row = live[rid]
            jv = row[col]
            if p is None:
                g = gcd(pv, jv)
                m1, m2 = pv // g, jv // g
                new = {}
                for c, v in row.items():
                    new[c] = v * m1
                for c, v in prow.items():
                    w = new.get(c, 0) - v * m2
                    if w:
                        new[c] = w
                    elif c in new:
                        del new[c]
                g2 = 0
                for v in new.values():
                    g2 = gcd(g2, v)
                    if g2 == 1:
                        break
                if g2 > 1:
                    new = {c: v // g2 for c, v in new.items()}
            else:
                f = (jv * pow(pv, -1, p)) % p
                new = dict(row)
                for c, v in prow.items():
                    w = (new.get(c, 0) - v * f) % p
                    if w:
                        new[c] = w
                    elif c in new:
                        del new[c]
            for c in row:
                if c not in new:
                    s = col_rows.get(c)
                    if s is not None:
                        s.discard(rid)
                        if not s:
                            del col_rows[c]
            for c in new:
                if c not in row:
                    col_rows.setdefault(c, set()).add(rid)
            if new:
                live[rid] = new
            else:
                del live[rid]
                for c in row:
                    s = col_rows.get(c)
                    if s is not None:
                        s.discard(rid)
                        if not s:
                            del col_rows[c]
    return rank, sorted(pivots)


def dense_to_rows(mat):
    """Dense list-of-lists -> sparse row dicts (zero rows kept as empty)."""
    return [{j: v for j, v in enumerate(row) if v != 0} for row in mat]


def rank_dense(mat, p=None):
    return rank_sparse(dense_to_rows(mat), p=p)


# ---------------------------------------------------------------------------
# dense integer matrix helpers

def identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def zeros(m, n):
    return [[0] * n for _ in range(m)]


def transpose(mat):
    if not mat:
        return []
    return [list(col) for col in zip(*mat)]


def mat_mul(a, b):
    if not a:
        return []
    if not b:
        return [[] for _ in a]
    n, m, q = len(a), len(b), len(b[0])
    out = [[0] * q for _ in range(n)]
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for k in range(m):
            v = ai[k]
            if v:
                bk = b[k]
                for j in range(q):
                    if bk[j]:
                        oi[j] += v * bk[j]
    return out


def mat_vec(a, x):
    return [sum(ai[j] * x[j] for j in range(len(x)) if x[j]) for ai in a]


def mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_mod(a, p):
    return [[v % p for v in row] for row in a]


def is_zero(mat):
    return all(v == 0 for row in mat for v in row)


def det_int(mat):
    """Determinant of a square integer matrix, Bareiss fraction-free."""
    n = len(mat)
    if n == 0:
        return 1
    m = [row[:] for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Smith normal form

def _swap_rows(d, u, uinv, i, k):
    d[i], d[k] = d[k], d[i]
    u[i], u[k] = u[k], u[i]
    for row in uinv:
        row[i], row[k] = row[k], row[i]


def _swap_cols(d, v, vinv, i, k):
    for row in d:
        row[i], row[k] = row[k], row[i]
    for row in v:
        row[i], row[k] = row[k], row[i]
    vinv[i], vinv[k] = vinv[k], vinv[i]


def _addmul_row(d, u, uinv, k, i, c):
    # row_k += c * row_i
    dk, di = d[k], d[i]
    for j in range(len(dk)):
        if di[j]:
            dk[j] += c * di[j]
    uk, ui = u[k], u[i]
    for j in range(len(uk)):
        if ui[j]:
            uk[j] += c * ui[j]
    for row in uinv:
        if row[k]:
            row[i] -= c * row[k]


def _addmul_col(d, v, vinv, k, i, c):
    # col_k += c * col_i
    for row in d:
        if row[i]:
            row[k] += c * row[i]
    for row in v:
        if row[i]:
            row[k] += c * row[i]
    vk, vi = vinv[k], vinv[i]
    for j in range(len(vk)):
        if vk[j]:
            vi[j] -= vk[j] * c
    # note: row_i of vinv -= c * row_k, written entrywise above


def smith_normal_form(mat, check=True):
    """Smith normal form with transforms.

    Returns (divisors, U, Uinv, V, Vinv) where U*mat*V is diagonal with
    the positive divisor chain `divisors` in the upper-left corner.
    Pivots are chosen by smallest absolute value to keep entries small.
    """
    m = len(mat)
    n = len(mat[0]) if m else 0
    d = [list(map(int, row)) for row in mat]
    u, uinv = identity(m), identity(m)
    v, vinv = identity(n), identity(n)
    t = 0
    while t < m and t < n:
        # locate smallest nonzero entry in the trailing block
        best = None
        for i in range(t, m):
            di = d[i]
            for j in range(t, n):
                if di[j] != 0 and (best is None or abs(di[j]) < best[0]):
                    best = (abs(di[j]), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, bi, bj = best
        if bi != t:
            _swap_rows(d, u, uinv, t, bi)
        if bj != t:
            _swap_cols(d, v, vinv, t, bj)
        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, m):
                if d[i][t]:
                    q = d[i][t] // d[t][t]
                    if q:
                        _addmul_row(d, u, uinv, i, t, -q)
                    if d[i][t]:
                        _swap_rows(d, u, uinv, t, i)
                        dirty = True
            for j in range(t + 1, n):
                if d[t][j]:
                    q = d[t][j] // d[t][t]
                    if q:
                        _addmul_col(d, v, vinv, j, t, -q)
                    if d[t][j]:
                        _swap_cols(d, v, vinv, t, j)
                        dirty = True
        # enforce the divisibility chain
        piv = d[t][t]
        fixed = True
        for i in range(t + 1, m):
            di = d[i]
            for j in range(t + 1, n):
                if di[j] % piv:
                    _addmul_row(d, u, uinv, t, i, 1)
                    fixed = False
                    break
            if not fixed:
                break
        if not fixed:
            continue
        if piv < 0:
            for j in range(len(d[t])):
                d[t][j] = -d[t][j]
            for j in range(len(u[t])):
                u[t][j] = -u[t][j]
            for row in uinv:
                row[t] = -row[t]
        t += 1
    divisors = [d[i][i] for i in range(t) if d[i][i] != 0]
    if check and m and n:
        idx = (m * 31 + n * 7) % (len(_CHECK_PRIMES) - 1)
        for p in (_CHECK_PRIMES[idx], _CHECK_PRIMES[idx + 1]):
            rp = rank_sparse(dense_to_rows(mat), p=p)
            expect = sum(1 for dv in divisors if dv % p)
            if rp != expect:
                raise ArithmeticError("smith normal form failed modular cross-check")
    return divisors, u, uinv, v, vinv


def kernel_int(mat):
    """Basis (list of column vectors) of the saturated integer kernel of mat."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    if n == 0:
        return []
    if m == 0:
        return [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    divisors, _u, _uinv, v, _vinv = smith_normal_form(mat)
    r = len(divisors)
    return [[v[i][j] for i in range(n)] for j in range(r, n)]


def image_basis(cols, n):
    """Basis (as column vectors of length n) of the integer column span of cols."""
    cols = [list(c) for c in cols if any(c)]
    if not cols:
        return []
    mat = [[c[i] for c in cols] for i in range(n)]
    divisors, _u, uinv, _v, _vinv = smith_normal_form(mat)
    out = []
    for idx, d in enumerate(divisors):
        out.append([d * uinv[i][idx] for i in range(n)])
    return out


def inverse_field(mat, p=None):
    """Inverse of a square matrix over Q (Fraction entries) or F_p; None if singular."""
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("inverse needs a square matrix")
    if p is None:
        a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
             for i, row in enumerate(mat)]
    else:
        a = [[x % p for x in row] + [int(i == j) for j in range(n)]
             for i, row in enumerate(mat)]
    for col in range(n):
        piv = None
        for i in range(col, n):
            if a[i][col]:
                piv = i
                break
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = (Fraction(1) / a[col][col]) if p is None else pow(a[col][col], p - 2, p)
        a[col] = [x * inv if p is None else (x * inv) % p for x in a[col]]
        for i in range(n):
            if i != col and a[i][col]:
                f = a[i][col]
                if p is None:
                    a[i] = [x - f * y for x, y in zip(a[i], a[col])]
                else:
                    a[i] = [(x - f * y) % p for x, y in zip(a[i], a[col])]
    return [row[n:] for row in a]


def solve_int(a, b_cols):
    """Solve a @ X = B over Z.  b_cols is a list of column vectors.

    Returns the columns of X, or None if some column has no integer solution.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    divisors, u, _uinv, v, _vinv = smith_normal_form(a)
    r = len(divisors)
    out = []
    for b in b_cols:
        c = mat_vec(u, b)
        y = [0] * n
        ok = True
        for i in range(m):
            if i < r:
                if c[i] % divisors[i]:
                    ok = False
                    break
                y[i] = c[i] // divisors[i]
            elif c[i] != 0:
                ok = False
                break
        if not ok:
            return None
        out.append(mat_vec(v, y))
    return out


def right_inverse_int(a):
    """Integer right inverse of a (a @ X = I), or None."""
    m = len(a)
    cols = solve_int(a, [[1 if i == j else 0 for i in range(m)] for j in range(m)])
    if cols is None:
        return None
    return transpose(cols)


class QuotientLattice:
    """Z^w modulo the sublattice spanned by the given generator vectors.

    Coordinates on the quotient are (free part, torsion part); the free
    part has `rank` entries, the torsion part one entry per divisor > 1.
    """

    def __init__(self, w, gens):
        self.w = w
        gens = [list(g) for g in gens]
        if gens:
            mat = [[g[i] for g in gens] for i in range(w)]
            divisors, u, uinv, _v, _vinv = smith_normal_form(mat)
        else:
            divisors, u, uinv = [], identity(w), identity(w)
        self._u = u
        self._uinv = uinv
        self._r = len(divisors)
        self.rank = w - self._r
        self._tors_rows = [(i, divisors[i]) for i in range(self._r) if divisors[i] > 1]
        self.torsion = tuple(d for _, d in self._tors_rows)

    @property
    def dim(self):
        """Total number of quotient coordinates (free + torsion)."""
        return self.rank + len(self.torsion)

    def project(self, x):
        """Quotient coordinates of an ambient vector."""
        u = self._u
        y = [sum(u[i][j] * x[j] for j in range(self.w) if x[j]) for i in range(self.w)]
        free = [y[i] for i in range(self._r, self.w)]
        tors = [y[i] % d for i, d in self._tors_rows]
        return free + tors

    def lift(self, coords):
        """An ambient representative of the class with the given coordinates."""
        x = [0] * self.w
        uinv = self._uinv
        for j, c in enumerate(coords[: self.rank]):
            if c:
                col = self._r + j
                for i in range(self.w):
                    if uinv[i][col]:
                        x[i] += c * uinv[i][col]
        for j, c in enumerate(coords[self.rank:]):
            if c:
                col = self._tors_rows[j][0]
                for i in range(self.w):
                    if uinv[i][col]:
                        x[i] += c * uinv[i][col]
        return x

    def reduce(self, coords):
        """Normalize torsion coordinates into their canonical range."""
        free = list(coords[: self.rank])
        tors = [c % d for c, (_, d) in zip(coords[self.rank:], self._tors_rows)]
        return free + tors

    def add(self, a, b):
        return self.reduce([x + y for x, y in zip(a, b)])

    def scale(self, c, a):
        return self.reduce([c * x for x in a])

    def zero(self):
        return [0] * self.dim

    def rank_over(self, rows, p=None):
        """Rank of the span of the given ambient rows in the quotient, over Q or F_p.

        Torsion is invisible over a field of characteristic not dividing it;
        this just projects to free coordinates and row-reduces.
        """
        proj = []
        for x in rows:
            c = self.project(x)
            proj.append({j: v for j, v in enumerate(c[: self.rank]) if v})
        return rank_sparse(proj, p=p)
