"""ddmem: noise and signal-to-noise of decoupled spin-ensemble memories.

Simulates ensembles of two-level spins under repeated inversion-pulse
trains with amplitude errors, static inhomogeneous detunings and drifting
(Ornstein-Uhlenbeck) detunings, and evaluates what the accumulated errors
do to an optical memory read-out: stray population, surviving coherence,
their ratio, and the resulting output-mode SNR.
"""

__version__ = "0.1.0"

from . import analytic, broadening, ensemble, memory, oracle, sequences, su2  # noqa: F401
