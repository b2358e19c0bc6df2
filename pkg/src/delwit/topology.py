"""Abstract simplicial complexes with mod-2 homology.

Simplices are sorted tuples of vertex indices.  Homology is computed over
GF(2) by column reduction of boundary matrices stored as Python integers
(bit masks), which is exact and fast enough for complexes up to a few
hundred thousand simplices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

Simplex = tuple[int, ...]

MAX_SIMPLICES = 10 ** 6


class ComplexTooLargeError(RuntimeError):
    pass


def normalize_simplex(s) -> Simplex:
    t = tuple(sorted(int(v) for v in s))
    if not t:
        raise ValueError("empty simplex")
    if len(set(t)) != len(t):
        raise ValueError(f"repeated vertex in simplex {t}")
    return t


def facets(s: Simplex):
    """The (k-1)-faces of a k-simplex."""
    return [s[:i] + s[i + 1:] for i in range(len(s))] if len(s) > 1 else []


def all_faces(s: Simplex):
    for k in range(1, len(s) + 1):
        yield from combinations(s, k)


@dataclass
class SimplicialComplex:
    """Downward-closed simplex sets grouped by dimension, plus optional coords."""

    faces: dict[int, set[Simplex]] = field(default_factory=dict)
    vertex_coords: np.ndarray | None = None

    @classmethod
    def from_maximal(cls, simplices, vertex_coords=None) -> "SimplicialComplex":
        faces: dict[int, set[Simplex]] = {}
        for s in simplices:
            s = normalize_simplex(s)
            for f in all_faces(s):
                faces.setdefault(len(f) - 1, set()).add(f)
        coords = None if vertex_coords is None else np.asarray(vertex_coords, dtype=float)
        cx = cls(faces=faces, vertex_coords=coords)
        cx.validate()
        return cx

    # -- basic structure -------------------------------------------------

    @property
    def dim(self) -> int:
        return max(self.faces, default=-1)

    def simplices(self, k: int) -> set[Simplex]:
        return self.faces.get(k, set())

    def counts(self) -> list[int]:
        return [len(self.faces.get(k, ())) for k in range(self.dim + 1)]

    def size(self) -> int:
        return sum(len(v) for v in self.faces.values())

    def __contains__(self, s) -> bool:
        s = normalize_simplex(s)
        return s in self.faces.get(len(s) - 1, ())

    def validate(self) -> None:
        if self.size() > MAX_SIMPLICES:
            raise ComplexTooLargeError(f"{self.size()} simplices")
        for k, simps in self.faces.items():
            for s in simps:
                if len(s) != k + 1:
                    raise ValueError(f"simplex {s} filed under dimension {k}")
                if k > 0:
                    for f in facets(s):
                        if f not in self.faces.get(k - 1, ()):
                            raise ValueError(f"complex not downward closed at {s}: missing {f}")
                if self.vertex_coords is not None and max(s) >= len(self.vertex_coords):
                    raise ValueError(f"vertex {max(s)} has no coordinates")

    def vertices(self) -> set[int]:
        return {v for s in self.faces.get(0, ()) for v in s}

    # -- invariants -------------------------------------------------------

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(simps) for k, simps in self.faces.items())

    def betti_numbers_mod2(self) -> list[int]:
        """Ranks of mod-2 homology H_0 .. H_dim via GF(2) column reduction."""
        if self.size() > MAX_SIMPLICES:
            raise ComplexTooLargeError(f"{self.size()} simplices")
        dim = self.dim
        if dim < 0:
            return []
        index: dict[int, dict[Simplex, int]] = {
            k: {s: i for i, s in enumerate(sorted(self.faces.get(k, ())))}
            for k in range(dim + 1)
        }
        ranks = [0] * (dim + 2)  # ranks[k] = rank of boundary_k, boundary_0 = 0
        for k in range(1, dim + 1):
            rows = index[k - 1]
            cols = sorted(self.faces.get(k, ()))
            pivots: dict[int, int] = {}
            reduced: list[int] = []
            for s in cols:
                col = 0
                for f in facets(s):
                    col ^= 1 << rows[f]
                while col:
                    low = col.bit_length() - 1
                    j = pivots.get(low)
                    if j is None:
                        pivots[low] = len(reduced)
                        break
                    col ^= reduced[j]
                reduced.append(col)
            ranks[k] = len(pivots)
        return [
            len(self.faces.get(k, ())) - ranks[k] - ranks[k + 1]
            for k in range(dim + 1)
        ]

    def connected_components(self) -> int:
        parent: dict[int, int] = {v: v for v in self.vertices()}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for (a, b) in self.faces.get(1, ()):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        return len({find(v) for v in parent})

    def is_closed_pseudomanifold(self, k: int) -> tuple[bool, list[Simplex]]:
        """True iff every (k-1)-simplex bounds exactly two k-simplices.

        Returns the offending (k-1)-simplices otherwise.  Impurity (faces of
        dimension > k absent/present) is reported through the same channel.
        """
        top = self.faces.get(k, set())
        if not top:
            return False, sorted(self.faces.get(k - 1, ()))
        count: dict[Simplex, int] = {}
        for s in top:
            for f in facets(s):
                count[f] = count.get(f, 0) + 1
        offenders = [f for f in sorted(self.faces.get(k - 1, ())) if count.get(f, 0) != 2]
        offenders += [f for f, c in sorted(count.items()) if c != 2 and f not in self.faces.get(k - 1, set())]
        return (not offenders), offenders

    def vertex_degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {v: 0 for v in self.vertices()}
        for (a, b) in self.faces.get(1, ()):
            deg[a] += 1
            deg[b] += 1
        return deg

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "vertices": None
            if self.vertex_coords is None
            else [list(map(float, p)) for p in self.vertex_coords],
            "simplices": {
                str(k): sorted(list(map(int, s)) for s in simps)
                for k, simps in sorted(self.faces.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def from_json_dict(cls, data: dict) -> "SimplicialComplex":
        faces = {
            int(k): {tuple(s) for s in simps}
            for k, simps in data.get("simplices", {}).items()
        }
        coords = data.get("vertices")
        cx = cls(
            faces=faces,
            vertex_coords=None if coords is None else np.asarray(coords, dtype=float),
        )
        cx.validate()
        return cx

    @classmethod
    def from_json(cls, text: str) -> "SimplicialComplex":
        return cls.from_json_dict(json.loads(text))

    def to_off(self) -> str:
        """OFF export of the 2-skeleton; requires coordinates in R^3 or lower."""
        if self.vertex_coords is None:
            raise ValueError("no vertex coordinates")
        d = self.vertex_coords.shape[1]
        if d > 3:
            raise ValueError("OFF export only for ambient dimension <= 3")
        coords = np.zeros((len(self.vertex_coords), 3))
        coords[:, :d] = self.vertex_coords
        tris = sorted(self.faces.get(2, ()))
        lines = ["OFF", f"{len(coords)} {len(tris)} 0"]
        lines += [" ".join(f"{x:.17g}" for x in p) for p in coords]
        lines += ["3 " + " ".join(map(str, t)) for t in tris]
        return "\n".join(lines) + "\n"


def complex_diff(a: SimplicialComplex, b: SimplicialComplex) -> tuple[set[Simplex], set[Simplex]]:
    """Exact symmetric difference (only_in_a, only_in_b)."""
    va = a.vertices() | b.vertices()
    if a.vertex_coords is not None and b.vertex_coords is not None:
        n = min(len(a.vertex_coords), len(b.vertex_coords))
        if max(va, default=-1) >= n or not np.array_equal(
            a.vertex_coords[: len(b.vertex_coords)][:n], b.vertex_coords[:n]
        ):
            raise ValueError("complexes use incompatible vertex index spaces")
    only_a: set[Simplex] = set()
    only_b: set[Simplex] = set()
    for k in set(a.faces) | set(b.faces):
        sa = a.faces.get(k, set())
        sb = b.faces.get(k, set())
        only_a |= sa - sb
        only_b |= sb - sa
    return only_a, only_b
