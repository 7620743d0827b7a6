# Labelled statevectors: gates, projections, expectation values.
import numpy as np

from telepovm import statevec as sv

# |00> on qubits 5,6 then a CNOT 5 -> 6 after a Hadamard-like rotation
h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
s = sv.basis_state("56", "00")
s = sv.apply_gate(s, h, ["5"])
s = sv.apply_gate(s, sv.CNOT, ["5", "6"])
print(s)  # a Bell pair

# the first label is the most significant bit; reorder keeps the state
t = sv.from_amplitudes("abc", np.arange(8) / np.sqrt(140))
print(t.reorder("cab"))

# contract <0| on qubit b: unnormalized residual plus its probability
res, p = sv.project(t, sv.basis_state("b", "0"), ["b"])
print(res.labels, p)

# <Z> on one qubit of the Bell pair is 0, <ZZ> is 1
print(sv.expectation(s, sv.Z, ["5"]), sv.expectation(s, np.kron(sv.Z, sv.Z), ["5", "6"]))

# global phase does not change fidelity
print(sv.fidelity(s, sv.StateVector(s.labels, 1j * s.amps)))
