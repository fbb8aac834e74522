"""
What an I/Q imbalance does to a subcarrier
==========================================

A mismatched mixer scales the wanted signal by ``k1`` and leaks a conjugated
copy, scaled by ``k2``, onto the mirror subcarrier.  This script draws a few
branches at a given image rejection ratio and shows how large that leak is.
"""

import numpy as np

from iqlink import IqBranchParams, Side, irr_db, iq_coeffs, sample_imbalance

# A branch with 5% gain error and 3 degrees of phase error.
params = IqBranchParams(gain=1.05, phase=np.deg2rad(3.0), side=Side.TX)
pair = iq_coeffs(params)
print(f"k1 = {pair.k1:.4f}, k2 = {pair.k2:.4f}, IRR = {irr_db(pair):.1f} dB")

# Random branches never fall below the requested IRR floor.
rng = np.random.default_rng(1)
for floor in (15.0, 25.0, 35.0):
    irrs = [irr_db(iq_coeffs(sample_imbalance(floor, Side.RX, rng))) for _ in range(2000)]
    print(f"floor {floor:4.1f} dB: drawn IRR min {min(irrs):5.2f} dB, median {np.median(irrs):5.2f} dB")

# The leak appears as a second term on the mirror subcarrier.
x = np.exp(1j * np.pi / 4)
print(f"symbol {x:.3f} -> wanted {pair.k1 * x:.3f}, image {pair.k2 * np.conj(x):.3f}")
