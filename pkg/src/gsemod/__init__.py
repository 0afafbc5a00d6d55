"""GSEMO with a total-Hamming-distance tie-break on OneMinMax, plus the
instrumentation and exact oracles used to study its last optimization stage."""

from ._accel import USE_NUMBA, backend_name

__version__ = "0.1.0"
