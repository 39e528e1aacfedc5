"""Physical constants in the (nm, eV) unit system used throughout qdrom."""

# hbar^2 / (2 m0) converted to eV nm^2.  Derived once from CODATA-2018 SI
# values (hbar = 1.054571817e-34 J s, m0 = 9.1093837015e-31 kg,
# e = 1.602176634e-19 C) and frozen here; tests cross-check against
# scipy.constants.
KINETIC_SCALE = 0.03809982110968584

# Potential-energy slope of a 1 kV/cm electric field acting on an electron:
# 1 kV/cm = 1e-4 V/nm, and abs(charge) = 1 e, so 1e-4 eV/nm.  Sign
# convention: a positive field component raises the potential energy on the
# positive-coordinate side of the domain center.
EV_PER_NM_PER_KVCM = 1.0e-4

# GaAs/InAs material parameters used by the bundled scenarios.
MASS_GAAS = 0.067
MASS_INAS = 0.023
BAND_OFFSET_EV = 0.544
