"""Robust testing and decoding of tensor products of algebraic-geometry codes.

Modules: :mod:`field` and :mod:`linalg` (exact GF(q) arithmetic),
:mod:`codes`, :mod:`families` (Reed-Solomon and elliptic code
sequences), :mod:`tensor`, :mod:`decoder`, :mod:`experiments` and
:mod:`cli`.
"""

from __future__ import annotations

__version__ = "0.1.0"
