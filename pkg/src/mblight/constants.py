"""Physical constants (SI units, CODATA 2018)."""

import math

HBAR = 1.054571817e-34  # reduced Planck constant (J s)
PLANCK = 2.0 * math.pi * HBAR  # Planck constant (J s)
E0 = 1.602176634e-19  # elementary charge (C)
C0 = 299792458.0  # vacuum speed of light (m/s)
MU0 = 1.25663706212e-6  # vacuum permeability (H/m)
EPS0 = 1.0 / (MU0 * C0 * C0)  # vacuum permittivity (F/m)
