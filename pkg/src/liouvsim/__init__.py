"""Liouvillian simulator for dissipative lattice fermions and spin chains.

Subpackages build N-fermion Fock bases and excitation labels (fockspace),
integer-partition branching machinery (young), vectorized Liouvillian
superoperators with U(1) sector decompositions (liouville), spectra and
steady states (spectra), dark-state analytics (darkmodes), perturbative
gap series and scaling fits (perturbation), long-time propagation and
oscillation diagnostics (dynamics), and a CLI front end (cli).
"""

__version__ = "0.1.0"
