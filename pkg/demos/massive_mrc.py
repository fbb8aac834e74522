"""
Why matched filtering stops improving
=====================================

With many receive antennas, MRC averages out noise and other users, but the
device's own transmit image leak is combined coherently along with it.  The
SINR therefore levels off near the transmitter's image rejection ratio
(20 dB here) while the Wiener receivers keep gaining about 3 dB per doubling.
"""

from iqlink import ExperimentConfig, ScenarioTemplate, run_sweep

cfg = ExperimentConfig(
    sweep_param="n_rx",
    sweep_values=(16, 64, 256),
    template=ScenarioTemplate.massive_mimo(n_users=1, n_users_cp=1),
    preset="massive",
    receivers=("mrc", "lmmse", "augmented_lmmse"),
    modes=("none", "txrx"),
    n_trials=50,
)
table = run_sweep(cfg)
for receiver in cfg.receivers:
    for mode in cfg.modes:
        n, y = table.curve(receiver, mode)
        print(f"{receiver.value:16s} {mode.value:5s} " + "  ".join(f"N={int(a)}: {b:5.1f}" for a, b in zip(n, y)))
