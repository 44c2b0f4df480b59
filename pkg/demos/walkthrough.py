"""Short tour: load data, compute a kernel, follow a translation, scan A2.

Run with ``python3 demos/walkthrough.py``.
"""
import os

import numpy as np

from scatterkern.appendix_suite import a2_scalar_check, appendix1_khat
from scatterkern.asymptotics import forward_schedule, run_theorem2
from scatterkern.fm_spaces import kernel_compute
from scatterkern.scattering_data import load_data, validate

HERE = os.path.dirname(os.path.abspath(__file__))

data = load_data(os.path.join(HERE, "appendix1.json"))
print("validation:", validate(data).checks)

mu = 1 + 1j
k = kernel_compute("h2hat", data, mu)
z = np.array([0.5 + 0.5j, 2 + 1j])
print("hat kernel:", k(z))
print("closed form:", appendix1_khat(z, mu))

run = run_theorem2(data, mu, forward_schedule(6, 0.5, 10.0))
for x, v in zip(run.x, run.values):
    print(f"x = {x:6.2f}   FM distance = {v:.3e}")

rep = a2_scalar_check(data.amplitude)
print("A2 supremum:", rep.supremum, rep.verdict)
