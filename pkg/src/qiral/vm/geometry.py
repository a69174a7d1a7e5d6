"""Site numbering and neighbour tables for a periodic 4D lattice.

Sites are numbered with x fastest: index = x + Lx*(y + Ly*(z + Lz*t)).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import ir
from ..errors import OddExtent


def check_dims(dims) -> tuple[int, int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or any(d < 1 for d in dims):
        raise ValueError(f"need four positive extents, got {dims}")
    if any(d % 2 for d in dims):
        raise OddExtent(f"lattice extents must be even, got {dims}")
    return dims


class Geometry:
    def __init__(self, dims):
        self.dims = check_dims(dims)
        self.volume = int(np.prod(self.dims))
        idx = np.arange(self.volume)
        lx, ly, lz, _ = self.dims
        self.coords = np.stack([idx % lx, (idx // lx) % ly, (idx // (lx * ly)) % lz,
                                idx // (lx * ly * lz)], axis=1)
        self.parity = self.coords.sum(axis=1) % 2
        self.sites = {
            "L": idx,
            "even": np.flatnonzero(self.parity == 0),
            "odd": np.flatnonzero(self.parity == 1),
        }
        # global site -> position inside each domain (-1 when absent)
        self.local = {}
        for name, sites in self.sites.items():
            table = np.full(self.volume, -1, dtype=np.int64)
            table[sites] = np.arange(len(sites))
            self.local[name] = table

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords) % np.array(self.dims)
        lx, ly, lz, _ = self.dims
        return c[..., 0] + lx * (c[..., 1] + ly * (c[..., 2] + lz * c[..., 3]))

    def displaced(self, offset) -> np.ndarray:
        """Global index of s + offset for every site s."""
        return self.index(self.coords + np.asarray(offset, dtype=np.int64))

    def size(self, domain: str) -> int:
        return len(self.sites[domain])


@lru_cache(maxsize=16)
def geometry(dims) -> Geometry:
    return Geometry(tuple(dims))


def domain_name(s: ir.IndexSet | None) -> str:
    if isinstance(s, ir.Sublattice):
        return s.parity
    return "L"


def unit_vector(d: ir.Dir) -> tuple[int, int, int, int]:
    v = [0, 0, 0, 0]
    v[d.axis] = d.sign
    return tuple(v)
