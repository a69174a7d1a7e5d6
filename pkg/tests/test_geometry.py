import numpy as np
import pytest

from qiral import ir
from qiral.errors import OddExtent
from qiral.vm import (GaugeConfig, check_dims, geometry, random_gauge, random_vector, read_gauge,
                      read_vector, unit_gauge)
from qiral.vm.gauge import write_gauge, write_vector


def test_sites_are_x_fastest():
    g = geometry((4, 2, 2, 2))
    assert g.index((1, 0, 0, 0)) == 1
    assert g.index((0, 1, 0, 0)) == 4
    assert g.index((0, 0, 0, 1)) == 16


@pytest.mark.parametrize("dims", [(3, 2, 2, 2), (2, 2, 2, 0), (2, 2, 2)])
def test_bad_extents_rejected(dims):
    with pytest.raises((OddExtent, ValueError)):
        check_dims(dims)


def test_parity_split_is_even():
    g = geometry((2, 4, 2, 2))
    assert len(g.sites["even"]) == len(g.sites["odd"]) == g.volume // 2
    assert set(g.sites["even"]) | set(g.sites["odd"]) == set(range(g.volume))


def test_periodic_displacement_round_trips():
    g = geometry((4, 4, 2, 2))
    for axis in range(4):
        step = [0, 0, 0, 0]
        step[axis] = 1
        fwd = g.displaced(tuple(step))
        back = g.displaced(tuple(-v for v in step))
        assert np.array_equal(back[fwd], np.arange(g.volume))
        # moving one step flips parity
        assert np.all(g.parity[fwd] != g.parity)


def test_random_links_are_special_unitary():
    cfg = random_gauge((2, 2, 2, 2), 9)
    assert cfg.unitarity_error() < 1e-13
    assert cfg.det_error() < 1e-13


def test_random_gauge_is_seeded():
    a, b = random_gauge((2, 2, 2, 2), 5), random_gauge((2, 2, 2, 2), 5)
    assert np.array_equal(a.links, b.links)
    assert not np.array_equal(a.links, random_gauge((2, 2, 2, 2), 6).links)


def test_unit_gauge():
    cfg = unit_gauge((2, 2, 2, 2))
    assert np.array_equal(cfg.links[3, 2], np.eye(3))


def test_gauge_and_vector_files_round_trip(tmp_path):
    cfg = random_gauge((2, 2, 4, 2), 1)
    write_gauge(tmp_path / "g.bin", cfg)
    back = read_gauge(tmp_path / "g.bin")
    assert back.dims == cfg.dims
    assert np.array_equal(back.links, cfg.links)
    assert (tmp_path / "g.bin").read_bytes().startswith(b"QGAUGE1 2 2 4 2\n")

    v = random_vector(24, 3)
    write_vector(tmp_path / "v.bin", v)
    assert np.array_equal(read_vector(tmp_path / "v.bin"), v)


def test_truncated_gauge_file_rejected(tmp_path):
    cfg = random_gauge((2, 2, 2, 2), 1)
    write_gauge(tmp_path / "g.bin", cfg)
    data = (tmp_path / "g.bin").read_bytes()
    (tmp_path / "g.bin").write_bytes(data[:-16])
    with pytest.raises(ValueError):
        read_gauge(tmp_path / "g.bin")


def test_gauge_config_shape_checked():
    with pytest.raises((ValueError, OddExtent)):
        GaugeConfig((2, 2, 2, 2), np.zeros((3, 4, 3, 3), dtype=complex))


def test_unit_vector_helper():
    from qiral.vm.geometry import unit_vector
    assert unit_vector(ir.Dir("y", -1)) == (0, -1, 0, 0)
