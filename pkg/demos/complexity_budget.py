"""
What augmented processing costs
===============================

Augmented combining doubles the adaptive filter length and processes the
mirror subcarrier too.  Relative to the whole receive chain (FFT included)
the extra cost stays below 2x for LMS and 4x for RLS.
"""

from iqlink import FlopModelInputs, chain_ratio, fft_flops, format_table2

print(format_table2())

print(f"FFT of size 1024: {fft_flops(1024):.0f} flops")
for n_rx, streams in ((4, 2), (64, 8)):
    for algo in ("lms", "rls"):
        r = chain_ratio(FlopModelInputs(1024, n_rx, streams, algo))
        print(f"N={n_rx:3d} S={streams:2d} {algo}: augmented chain costs {r:.2f}x the linear one")
