"""Euclidean gamma matrices in a chiral basis with gamma5 = diag(1, 1, -1, -1)."""

from __future__ import annotations

import numpy as np

from .. import ir

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _build():
    z = np.zeros((2, 2), dtype=complex)
    one = np.eye(2, dtype=complex)
    spatial = [np.block([[z, -1j * p], [1j * p, z]]) for p in _PAULI]
    temporal = np.block([[z, one], [one, z]])
    mats = dict(zip(ir.DIRECTIONS, [*spatial, temporal]))
    g5 = mats["x"] @ mats["y"] @ mats["z"] @ mats["t"]
    return mats, g5


GAMMA, GAMMA5 = _build()
IDENTITY_SPIN = np.eye(4, dtype=complex)


def gamma(d: str | ir.Dir) -> np.ndarray:
    name = d.name if isinstance(d, ir.Dir) else d
    return GAMMA[name]


for _m in (*GAMMA.values(), GAMMA5):
    _m.setflags(write=False)
