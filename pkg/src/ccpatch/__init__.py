"""Defect-adaptive color-code toolkit: lattice construction, stabilizer
deformation around broken qubits and couplers, syndrome-extraction circuit
generation, Pauli-frame sampling, and BP-OSD decoding."""

__version__ = "0.1.0"
