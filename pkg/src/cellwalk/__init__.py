"""Degree-k upper random walks on free G-CW complexes of finite type."""

from .group_ring import Group, GroupRingElement, GroupRingMatrix
from .complex import GCWComplex, load_complex, save_complex

__version__ = "0.1.0"

__all__ = ["Group", "GroupRingElement", "GroupRingMatrix", "GCWComplex",
           "load_complex", "save_complex"]
