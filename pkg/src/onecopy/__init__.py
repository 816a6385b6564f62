"""Single-copy property estimation for shallow quantum circuits.

Layered circuits, lightcone contraction, dense and MPS sampling, the
single-shot Pauli estimator with its Chebyshev guarantee, the classical
Markov analog, and the trace-distance / decision applications.
"""

__version__ = "0.1.0"
