"""Toolchain for an external quantum-kernel DSL on the refined host/control-
processor execution model: compiler, timing scheduler, functional VM with a
state-vector backend, and the host-facing runtime."""

__version__ = "0.1.0"
