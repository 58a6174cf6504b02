"""Exact arithmetic for the building of a rank-one special unitary group over
a function field: finite fields, quadratic coefficient rings and their ideals,
the local field at the place at infinity, the rank-3 hermitian lattice tree,
arithmetic stabilizers, quotient graphs and their spider decomposition.
"""

__version__ = "0.1.0"
