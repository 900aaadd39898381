"""declab: a numerical laboratory for decoherence in closed quantum systems.

Modules
-------
hilbert
    Finite-dimensional states, observables, tensor factors and partial traces.
framework
    Relevant-observable algebras, coarse-grained states and weak-limit probes.
spinbath
    Central spin coupled to a spin environment: closed forms and brute force.
sid
    Dephasing of states on a discretised continuous spectrum.
dtime
    Decay-time fits and the subsystem/whole-system two-time model.
partition
    Reduced states across partitions and global-state reconstruction.
"""
__version__ = "0.1.0"

from . import dtime, errors, framework, hilbert, partition, sid, spinbath  # noqa: E402

__all__ = ["dtime", "errors", "framework", "hilbert", "partition", "sid", "spinbath", "__version__"]
