"""Unit conventions and physical constants.

The package works in hbar = 1 units:

* time in seconds,
* angular frequencies (and noise strengths for Pauli channels) in 1/s,
* position in angstrom,
* mass expressed as m/hbar in s/angstrom^2, so that [q, p] = i holds with
  q in angstrom and p in 1/angstrom.

With these conventions the position-noise strengths quoted in Hz/A^2 and
Hz/A^4 enter the dissipator directly.
"""

import numpy as np

ATOMIC_MASS_KG = 1.66053906660e-27
HBAR_SI = 1.054571817e-34
ANGSTROM = 1e-10

#: m/hbar for a single atomic mass unit, in s/angstrom^2.
AMU = ATOMIC_MASS_KG / HBAR_SI * ANGSTROM**2

#: Default oscillator mass: 100 ions of 40Ca+ (m/hbar, s/angstrom^2).
MASS_100_CA40 = 100 * 39.9626 * AMU

TWO_PI = 2 * np.pi
