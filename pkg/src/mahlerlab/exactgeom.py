"""Exact rational polytope machinery.

Everything here works over the rationals.  Input coordinates are
`fractions.Fraction`; internally all computations are scaled to integers so
that predicates reduce to signs of integer determinants (Bareiss elimination,
no floating point anywhere).

Provides:

* ``ExactHull`` -- incremental convex hull with simplicial facets, built by
  inserting points in lexicographic order (a placing triangulation).  Yields
  facet hyperplanes, hull vertices and the exact volume of the hull.
* ``dd_vertices`` -- vertex enumeration for a bounded H-polytope
  ``{x : Ax <= b}`` by the double description method on the homogenization
  cone.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence


# ---------------------------------------------------------------------------
# integer linear algebra


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    s = 0
    for x, y in zip(a, b):
        s += x * y
    return s


def gcd_reduce(v: Sequence[int]) -> tuple[int, ...]:
    """Divide an integer vector by the gcd of its entries (sign preserved)."""
    g = 0
    for x in v:
        g = math.gcd(g, abs(x))
    if g in (0, 1):
        return tuple(v)
    return tuple(x // g for x in v)


def bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix, fraction-free elimination."""
    n = len(rows)
    if n == 0:
        return 1
    m = [list(r) for r in rows]
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
        pivot = m[k][k]
        for i in range(k + 1, n):
            mik = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - mik * row_k[j]) // prev
            row_i[k] = 0
        prev = pivot
    return sign * m[n - 1][n - 1]


def int_rank(rows: Iterable[Sequence[int]]) -> int:
    """Rank of an integer matrix (fraction-free row echelon)."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        pivot_row = None
        for i in range(rank, len(m)):
            if m[i][col] != 0:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        m[rank], m[pivot_row] = m[pivot_row], m[rank]
        pivot = m[rank][col]
        for i in range(rank + 1, len(m)):
            mic = m[i][col]
            for j in range(col, ncols):
                m[i][j] = (m[i][j] * pivot - mic * m[rank][j]) // prev
        prev = pivot
        rank += 1
        if rank == len(m):
            break
    return rank


def facet_normal(points: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Normal of the hyperplane through d integer points in R^d.

    Generalized cross product: signed cofactors of the (d-1) x d matrix of
    differences.  Returns the zero vector if the points are affinely
    degenerate.
    """
    d = len(points[0])
    if d == 1:
        return (1,)
    base = points[0]
    diffs = [[p[j] - base[j] for j in range(d)] for p in points[1:]]
    normal = []
    for j in range(d):
        minor = [row[:j] + row[j + 1 :] for row in diffs]
        normal.append((-1) ** j * bareiss_det(minor))
    return gcd_reduce(normal)


def scale_to_int(vectors: Sequence[Sequence[Fraction]]) -> tuple[list[tuple[int, ...]], int]:
    """Scale rational vectors by a common denominator; returns (ints, lcm)."""
    lcm = 1
    for v in vectors:
        for x in v:
            f = Fraction(x)
            lcm = lcm * f.denominator // math.gcd(lcm, f.denominator)
    out = []
    for v in vectors:
        out.append(tuple(int(Fraction(x) * lcm) for x in v))
    return out, lcm


# ---------------------------------------------------------------------------
# incremental hull / placing triangulation


class DegenerateHullError(ValueError):
    """Input points do not span the ambient dimension."""


class ExactHull:
    """Convex hull of rational points with simplicial facet list.

    Points are inserted in lexicographic order on top of an initial full-rank
    simplex.  Facets coplanar with the inserted point are treated as visible
    (together with at least one strictly visible facet), which keeps every
    horizon ridge non-degenerate; the final facet list is a triangulation of
    the boundary.  ``volume`` cones that triangulation over the first hull
    vertex.
    """

    def __init__(self, points: Sequence[Sequence[Fraction]], validate: bool | None = None):
        pts = [tuple(Fraction(x) for x in p) for p in points]
        if not pts:
            raise ValueError("no points")
        self.dim = len(pts[0])
        seen = set()
        uniq = []
        for p in pts:
            if p not in seen:
                seen.add(p)
                uniq.append(p)
        uniq.sort()
        self._frac_points = uniq
        ints, lcm = scale_to_int(uniq)
        self._pts = ints
        self._lcm = lcm
        self._build()
        if validate is None:
            validate = len(self._pts) * len(self.facet_simplices) <= 200_000
        if validate:
            self._validate()

    # -- construction

    def _build(self) -> None:
        pts = self._pts
        d = self.dim
        n = len(pts)
        # initial simplex: greedy scan in lex order, keep points that grow the
        # affine rank
        chosen = [0]
        for i in range(1, n):
            if len(chosen) == d + 1:
                break
            cand = chosen + [i]
            diffs = [
                [pts[k][j] - pts[cand[0]][j] for j in range(d)] for k in cand[1:]
            ]
            if int_rank(diffs) == len(cand) - 1:
                chosen.append(i)
        if len(chosen) < d + 1:
            raise DegenerateHullError(
                f"points span affine rank {len(chosen) - 1} < dim {d}"
            )
        # interior reference: (d+1) * centroid of the initial simplex, kept
        # integral
        self._ref = tuple(sum(pts[i][j] for i in chosen) for j in range(d))
        self._ref_scale = d + 1

        self._facets: dict[int, tuple[tuple[int, ...], tuple[int, ...], int]] = {}
        self._next_fid = 0
        self._ridges: dict[frozenset[int], list[int]] = {}
        for drop in range(d + 1):
            verts = tuple(chosen[k] for k in range(d + 1) if k != drop)
            self._add_facet(verts)

        used = set(chosen)
        for i in range(n):
            if i in used:
                continue
            self._insert(i)

    def _add_facet(self, verts: tuple[int, ...]) -> None:
        pts = self._pts
        normal = facet_normal([pts[v] for v in verts])
        if all(x == 0 for x in normal):
            raise AssertionError("degenerate facet candidate")
        offset = _dot(normal, pts[verts[0]])
        # orient outward: reference point strictly inside
        side = _dot(normal, self._ref) - self._ref_scale * offset
        if side > 0:
            normal = tuple(-x for x in normal)
            offset = -offset
        elif side == 0:
            raise AssertionError("reference point on facet hyperplane")
        fid = self._next_fid
        self._next_fid += 1
        self._facets[fid] = (tuple(sorted(verts)), normal, offset)
        for ridge in self._facet_ridges(tuple(sorted(verts))):
            self._ridges.setdefault(ridge, []).append(fid)

    @staticmethod
    def _facet_ridges(verts: tuple[int, ...]):
        for k in range(len(verts)):
            yield frozenset(verts[:k] + verts[k + 1 :])

    def _remove_facet(self, fid: int) -> None:
        verts, _, _ = self._facets.pop(fid)
        for ridge in self._facet_ridges(verts):
            lst = self._ridges[ridge]
            lst.remove(fid)
            if not lst:
                del self._ridges[ridge]

    def _insert(self, idx: int) -> None:
        p = self._pts[idx]
        strict = False
        visible = []
        for fid, (_, normal, offset) in self._facets.items():
            v = _dot(normal, p) - offset
            if v > 0:
                strict = True
                visible.append(fid)
            elif v == 0:
                visible.append(fid)
        if not strict:
            return  # inside or on the current hull
        visible_set = set(visible)
        horizon = []
        for fid in visible:
            verts, _, _ = self._facets[fid]
            for ridge in self._facet_ridges(verts):
                owners = self._ridges[ridge]
                if len(owners) != 2:
                    raise AssertionError("open ridge in hull complex")
                other = owners[0] if owners[1] == fid else owners[1]
                if other not in visible_set:
                    horizon.append(ridge)
        for fid in visible:
            self._remove_facet(fid)
        for ridge in horizon:
            self._add_facet(tuple(sorted(ridge)) + (idx,))

    def _validate(self) -> None:
        for verts, normal, offset in self._facets.values():
            for p in self._pts:
                if _dot(normal, p) > offset:
                    raise AssertionError("hull validation failed: point outside facet")

    # -- queries

    @property
    def facet_simplices(self) -> list[tuple[int, ...]]:
        return [f[0] for f in self._facets.values()]

    def facets(self) -> list[tuple[tuple[Fraction, ...], Fraction]]:
        """Deduplicated supporting hyperplanes ``<a, x> <= c`` (original coords)."""
        out = {}
        for _, normal, offset in self._facets.values():
            key = gcd_reduce(tuple(normal) + (offset,))
            out[key] = (
                tuple(Fraction(x) for x in key[:-1]),
                Fraction(key[-1], self._lcm),
            )
        return sorted(out.values())

    def vertex_points(self) -> list[tuple[Fraction, ...]]:
        idx = set()
        for verts, _, _ in self._facets.values():
            idx.update(verts)
        return [self._frac_points[i] for i in sorted(idx)]

    def volume(self) -> Fraction:
        d = self.dim
        apex = self._pts[0]  # lexicographically smallest point, a hull vertex
        total = 0
        for verts, _, _ in self._facets.values():
            rows = [
                [self._pts[v][j] - apex[j] for j in range(d)] for v in verts
            ]
            total += abs(bareiss_det(rows))
        return Fraction(total, math.factorial(d)) / Fraction(self._lcm) ** d


# ---------------------------------------------------------------------------
# double description (vertex enumeration from halfspaces)


def _greedy_independent_rows(rows: list[tuple[int, ...]], target: int) -> list[int]:
    chosen: list[int] = []
    for i, _ in enumerate(rows):
        if len(chosen) == target:
            break
        cand = chosen + [i]
        if int_rank([rows[k] for k in cand]) == len(cand):
            chosen.append(i)
    if len(chosen) < target:
        raise ValueError("halfspace system is rank deficient (unbounded body?)")
    return chosen


def _cramer_column_rays(mat: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Extreme rays of the simplicial cone {y : My <= 0} for invertible M.

    Columns r_j with M r_j = -|det M| e_j, via Cramer's rule.
    """
    n = len(mat)
    det = bareiss_det(mat)
    if det == 0:
        raise ValueError("singular initialization matrix")
    sgn = 1 if det > 0 else -1
    rays = []
    for j in range(n):
        col = []
        for i in range(n):
            replaced = [
                list(mat[r][:i]) + [1 if r == j else 0] + list(mat[r][i + 1 :])
                for r in range(n)
            ]
            col.append(bareiss_det(replaced))
        rays.append(gcd_reduce([-sgn * x for x in col]))
    return rays


def dd_vertices(
    A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]
) -> list[tuple[Fraction, ...]]:
    """Vertices of the bounded polytope ``{x : Ax <= b}``.

    Double description on the homogenization cone ``{(x, t) : Ax - tb <= 0}``
    with the combinatorial adjacency test.  Raises ``ValueError`` if the
    polytope is unbounded or the system is rank deficient.
    """
    arows = [tuple(Fraction(x) for x in row) for row in A]
    brow = [Fraction(x) for x in b]
    if not arows:
        raise ValueError("empty halfspace system")
    d = len(arows[0])
    scaled, _ = scale_to_int([row + (-bi,) for row, bi in zip(arows, brow)])
    rows = []
    seen = set()
    for r in scaled:
        r = gcd_reduce(r)
        if r not in seen:
            seen.add(r)
            rows.append(r)
    D = d + 1
    init = _greedy_independent_rows(rows, D)
    order = init + [i for i in range(len(rows)) if i not in set(init)]
    rays = _cramer_column_rays([rows[i] for i in init])

    def zero_mask(ray: tuple[int, ...], upto: int) -> int:
        mask = 0
        for k in range(upto):
            if _dot(rows[order[k]], ray) == 0:
                mask |= 1 << k
        return mask

    masks = [zero_mask(r, D) for r in rays]

    for step in range(D, len(order)):
        row = rows[order[step]]
        vals = [_dot(row, r) for r in rays]
        keep_idx = [i for i, v in enumerate(vals) if v <= 0]
        pos_idx = [i for i, v in enumerate(vals) if v > 0]
        neg_idx = [i for i, v in enumerate(vals) if v < 0]
        new_rays: list[tuple[int, ...]] = []
        seen_new: set[tuple[int, ...]] = set()
        for ip in pos_idx:
            for im in neg_idx:
                common = masks[ip] & masks[im]
                if bin(common).count("1") < D - 2:
                    continue
                adjacent = True
                for k, mk in enumerate(masks):
                    if k in (ip, im):
                        continue
                    if mk & common == common:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                vp, vm = vals[ip], vals[im]
                combo = gcd_reduce(
                    tuple(vp * rays[im][j] - vm * rays[ip][j] for j in range(D))
                )
                if combo not in seen_new:
                    seen_new.add(combo)
                    new_rays.append(combo)
        rays = [rays[i] for i in keep_idx] + new_rays
        upto = step + 1
        masks = [zero_mask(r, upto) for r in rays]

    verts = []
    seen_v: set[tuple[Fraction, ...]] = set()
    for r in rays:
        t = r[-1]
        if t <= 0:
            raise ValueError("polytope is unbounded (recession ray found)")
        v = tuple(Fraction(x, t) for x in r[:-1])
        if v not in seen_v:
            seen_v.add(v)
            verts.append(v)
    return sorted(verts)
