"""Lattice data and the reference LoopIR interpreter."""

from .gamma import GAMMA, GAMMA5, IDENTITY_SPIN, gamma
from .gauge import (GaugeConfig, random_gauge, random_su3, random_vector, read_gauge,
                    read_vector, unit_gauge, write_gauge, write_vector)
from .geometry import Geometry, check_dims, geometry
from .kernels import Kernels
from .machine import (Machine, MaxIterExceeded, RunParams, RunResult, eval_scalar, execute,
                      parallel_execute)

__all__ = ["GAMMA", "GAMMA5", "GaugeConfig", "Geometry", "IDENTITY_SPIN", "Kernels", "Machine",
           "MaxIterExceeded", "RunParams", "RunResult", "check_dims", "eval_scalar", "execute",
           "gamma", "geometry", "parallel_execute", "random_gauge", "random_su3",
           "random_vector", "read_gauge", "read_vector", "unit_gauge", "write_gauge",
           "write_vector"]
