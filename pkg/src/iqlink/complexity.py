"""Real-flop cost model of the receive chain: FFT, weight estimation, combining.

All counts are real additions plus multiplications.  The FFT is done once per
RX branch and shared by every subcarrier, so it is charged per subcarrier as
``fft_flops(C) / C`` for each of the N branches, identically in the linear
and augmented chains.  Weight estimation and combining are charged per
stream with ``N_in = N`` (linear) or ``N_in = 2N`` (augmented).
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Algorithm",
    "Processing",
    "FlopModelInputs",
    "fft_flops",
    "lms_flops",
    "rls_flops",
    "combining_flops",
    "chain_flops",
    "chain_ratio",
    "TABLE2_ROWS",
    "TABLE2_FFT_SIZES",
    "TABLE2_PRINTED",
    "table2",
    "format_table2",
    "table2_csv",
]


class Algorithm(enum.Enum):
    LMS = "lms"
    RLS = "rls"


class Processing(enum.Enum):
    LINEAR = "linear"
    AUGMENTED = "augmented"


def _is_pow2(c: int) -> bool:
    return isinstance(c, int) and c >= 2 and c & (c - 1) == 0


@dataclass(frozen=True)
class FlopModelInputs:
    fft_size: int
    n_rx: int
    n_streams: int
    algo: Algorithm = Algorithm.LMS
    processing: Processing = Processing.AUGMENTED

    def __post_init__(self):
        if not _is_pow2(self.fft_size):
            raise ValueError(f"fft_size must be a power of two >= 2, got {self.fft_size}")
        if self.n_rx < 1 or self.n_streams < 1:
            raise ValueError("n_rx and n_streams must be >= 1")
        object.__setattr__(self, "algo", Algorithm(self.algo))
        object.__setattr__(self, "processing", Processing(self.processing))

    @property
    def n_in(self) -> int:
        return 2 * self.n_rx if self.processing is Processing.AUGMENTED else self.n_rx


def fft_flops(c: int) -> float:
    """Split-radix FFT cost of a ``c``-point transform (Johnson-Frigo count).

    Evaluated in exact rational arithmetic; the result is an integer for
    every power of two.
    """
    if not _is_pow2(c):
        raise ValueError(f"FFT size must be a power of two >= 2, got {c}")
    lg = c.bit_length() - 1
    sign = -1 if lg % 2 else 1
    exact = (
        Fraction(34, 9) * c * lg
        - Fraction(124, 27) * c
        - 2 * lg
        - Fraction(2, 9) * sign * lg
        + Fraction(16, 27) * sign
        + 8
    )
    return float(exact)


def _check_n_in(n_in: int):
    if n_in < 1:
        raise ValueError(f"n_in must be >= 1, got {n_in}")


def lms_flops(n_in: int) -> int:
    _check_n_in(n_in)
    return 16 * n_in + 6


def rls_flops(n_in: int) -> int:
    _check_n_in(n_in)
    return 32 * n_in * n_in + 20 * n_in


def combining_flops(n_in: int) -> int:
    _check_n_in(n_in)
    return 8 * n_in - 2


_ALGO = {Algorithm.LMS: lms_flops, Algorithm.RLS: rls_flops}


def chain_flops(inputs: FlopModelInputs) -> float:
    """Per-subcarrier flops of one complete receive chain."""
    fft_share = inputs.n_rx * fft_flops(inputs.fft_size) / inputs.fft_size
    per_stream = _ALGO[inputs.algo](inputs.n_in) + combining_flops(inputs.n_in)
    return fft_share + inputs.n_streams * per_stream


def chain_ratio(inputs: FlopModelInputs) -> float:
    """Augmented over linear chain cost; ``inputs.processing`` is ignored."""
    aug = chain_flops(FlopModelInputs(inputs.fft_size, inputs.n_rx, inputs.n_streams, inputs.algo, Processing.AUGMENTED))
    lin = chain_flops(FlopModelInputs(inputs.fft_size, inputs.n_rx, inputs.n_streams, inputs.algo, Processing.LINEAR))
    return aug / lin


TABLE2_ROWS = ((1, 1), (10, 5), (20, 10), (100, 50))
TABLE2_FFT_SIZES = (64, 256, 1024, 2048, 8192)

# published two-decimal values, rows as TABLE2_ROWS, columns as TABLE2_FFT_SIZES
TABLE2_PRINTED = {
    Algorithm.LMS: (
        (1.52, 1.45, 1.39, 1.37, 1.33),
        (1.86, 1.81, 1.77, 1.75, 1.72),
        (1.92, 1.90, 1.87, 1.86, 1.84),
        (1.98, 1.98, 1.97, 1.97, 1.96),
    ),
    Algorithm.RLS: (
        (2.63, 2.48, 2.36, 2.31, 2.21),
        (3.81, 3.80, 3.79, 3.78, 3.77),
        (3.91, 3.91, 3.90, 3.90, 3.90),
        (3.98, 3.98, 3.98, 3.98, 3.98),
    ),
}


def table2() -> dict:
    """``{algo: [[ratio per FFT size] per (N, S) row]}``."""
    return {
        algo: [
            [chain_ratio(FlopModelInputs(c, n, s, algo)) for c in TABLE2_FFT_SIZES]
            for n, s in TABLE2_ROWS
        ]
        for algo in Algorithm
    }


def format_table2(decimals: int = 2) -> str:
    """Aligned text rendering, one block per algorithm."""
    tab = table2()
    lines = []
    for algo in Algorithm:
        lines.append(f"Augmented / linear complexity ratio, {algo.name} weights")
        lines.append(f"{'N':>5} {'S':>4} | " + " ".join(f"{c:>6}" for c in TABLE2_FFT_SIZES))
        lines.append("-" * len(lines[-1]))
        for (n, s), row in zip(TABLE2_ROWS, tab[algo]):
            lines.append(f"{n:>5} {s:>4} | " + " ".join(f"{r:>6.{decimals}f}" for r in row))
        lines.append("")
    return "\n".join(lines)


def table2_csv() -> str:
    """CSV with columns ``algo, N, S, C64, C256, ...`` and four-decimal ratios."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["algo", "N", "S"] + [f"C{c}" for c in TABLE2_FFT_SIZES])
    tab = table2()
    for algo in Algorithm:
        for (n, s), row in zip(TABLE2_ROWS, tab[algo]):
            writer.writerow([algo.value, n, s] + [f"{r:.4f}" for r in row])
    return buf.getvalue()
