"""SU(3) gauge configurations: generation and the QGAUGE1 / QVEC1 file formats."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import check_dims


@dataclass(frozen=True)
class GaugeConfig:
    dims: tuple[int, int, int, int]
    links: np.ndarray  # (volume, 4, 3, 3), direction order x, y, z, t

    def __post_init__(self):
        object.__setattr__(self, "dims", check_dims(self.dims))
        vol = int(np.prod(self.dims))
        if self.links.shape != (vol, 4, 3, 3):
            raise ValueError(f"links have shape {self.links.shape}, expected {(vol, 4, 3, 3)}")

    @property
    def volume(self) -> int:
        return self.links.shape[0]

    def unitarity_error(self) -> float:
        u = self.links
        prod = np.einsum("sdji,sdjk->sdik", u.conj(), u)
        return float(np.abs(prod - np.eye(3)).max())

    def det_error(self) -> float:
        return float(np.abs(np.linalg.det(self.links) - 1).max())


def random_su3(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-ish SU(3) matrices: QR of complex Gaussians, phases fixed, det divided out."""
    z = (rng.standard_normal((n, 3, 3)) + 1j * rng.standard_normal((n, 3, 3))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    q = q * (d / np.abs(d))[:, None, :]
    det = np.linalg.det(q)
    q = q / (det ** (1.0 / 3.0))[:, None, None]
    # one re-orthonormalisation pass keeps unitarity at round-off level
    u, _, vh = np.linalg.svd(q)
    q = u @ vh
    det = np.linalg.det(q)
    return q / (det ** (1.0 / 3.0))[:, None, None]


def random_gauge(dims, seed: int) -> GaugeConfig:
    dims = check_dims(dims)
    vol = int(np.prod(dims))
    rng = np.random.default_rng(seed)
    links = random_su3(rng, vol * 4).reshape(vol, 4, 3, 3)
    return GaugeConfig(dims, links)


def unit_gauge(dims) -> GaugeConfig:
    dims = check_dims(dims)
    vol = int(np.prod(dims))
    return GaugeConfig(dims, np.broadcast_to(np.eye(3, dtype=complex), (vol, 4, 3, 3)).copy())


def random_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def write_gauge(path, cfg: GaugeConfig) -> None:
    with open(path, "wb") as fh:
        fh.write(("QGAUGE1 %d %d %d %d\n" % cfg.dims).encode("ascii"))
        fh.write(np.ascontiguousarray(cfg.links, dtype="<c16").tobytes())


def read_gauge(path) -> GaugeConfig:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 5 or header[0] != "QGAUGE1":
            raise ValueError(f"{path}: not a QGAUGE1 file")
        dims = tuple(int(v) for v in header[1:])
        vol = int(np.prod(dims))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != vol * 36:
        raise ValueError(f"{path}: expected {vol * 36} complex numbers, found {data.size}")
    return GaugeConfig(dims, data.reshape(vol, 4, 3, 3).astype(complex))


def write_vector(path, v: np.ndarray) -> None:
    v = np.ascontiguousarray(np.ravel(v), dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(f"QVEC1 {v.size}\n".encode("ascii"))
        fh.write(v.tobytes())


def read_vector(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 2 or header[0] != "QVEC1":
            raise ValueError(f"{path}: not a QVEC1 file")
        n = int(header[1])
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n:
        raise ValueError(f"{path}: expected {n} complex numbers, found {data.size}")
    return data.astype(complex)
