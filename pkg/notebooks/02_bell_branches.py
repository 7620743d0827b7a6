# Alice's double Bell measurement: sixteen branches, each a distorted payload on 5,6.
import numpy as np

from telepovm import protocol as pr
from telepovm import statevec as sv

payload = pr.Payload.normalized([0.2, 0.5j, -0.6, 0.3])
channel = pr.Channel(0.7, 0.5, 0.4, np.sqrt(0.1))

world = pr.build_world_state(payload, channel)
print(world.labels, world.amps.size)  # 6 qubits, 64 amplitudes

for outcome, residual in pr.bell_branches(world):
    closed, prob = pr.collapsed_closed_form(payload, channel, outcome.key)
    f = sv.fidelity(residual.normalized(), closed)
    print(f"{outcome.pair23.value:>5} {outcome.pair14.value:>5}  P={outcome.probability:.5f}"
          f"  closed form P={prob:.5f}  F={f:.12f}  {pr.CLOSED_FORMS[outcome.key]}")

# sampled outcome, reproducible from the generator
rng = np.random.default_rng(0)
outcome, state56 = pr.measure_bell_pairs(world, rng)
print(outcome, state56)
