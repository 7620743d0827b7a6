# The five-element POVM on the ancillas, its feasibility range and its invariants.
import numpy as np

from telepovm import analysis
from telepovm import povm as pv
from telepovm import protocol as pr

channel = pr.Channel(0.7, 0.5, 0.4, np.sqrt(0.1))
d = pv.DistortionVector.from_channel(channel)
x_min = pv.min_valid_x(d)
print("x_min =", x_min)

for x in (x_min, 0.5 * (x_min + 4), 4.0):
    povm = pv.build_povm(d, x)
    rep = povm.check()
    p = analysis.total_success_probability(channel, x)
    print(f"x={x:.6f}  residual={rep['completeness_residual']:.1e}  "
          f"min eig={rep['min_eigenvalue']:.1e}  ranks={rep['ranks']}  p={p:.6f}")

# P5 is diagonal; at x_min one entry touches zero
print(np.round(pv.build_povm(d).elements[4].real, 6))

# below x_min the inconclusive element stops being positive
try:
    pv.build_povm(d, 1.2)
except pv.InfeasibleX as e:
    print("rejected:", e)

# every Bell branch gets a plan: a Pauli pre-correction and a distortion vector
for key, plan in pv.derive_all_plans(channel).items():
    print(key[0].value, key[1].value, plan.pre_correction, np.round(plan.distortion.values(), 4))
