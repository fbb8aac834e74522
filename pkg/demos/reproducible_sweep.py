"""
Running and saving a sweep
==========================

Experiments are described by a small INI file.  Every trial gets its own
seed derived from the master seed, so the table is the same for any number
of worker threads.
"""

import io

from iqlink import emit_results, parse_config, read_results, run_sweep

text = """
[experiment]
receivers = lmmse, augmented_lmmse
modes = none, txrx
trials = 20
seed = 99

[scenario]
n_rx = 8
n_users = 2
n_users_cp = 2
n_interferers = 2

[sweep]
parameter = irr_min_db
values = 10:30:10
"""
cfg = parse_config(text)
one = run_sweep(cfg, threads=1)
two = run_sweep(cfg, threads=2)
print("identical across thread counts:", one == two)

buf = io.StringIO()
emit_results(one, buf, "csv")
print(buf.getvalue())
buf.seek(0)
print("CSV round trip equals rounded table:", read_results(buf, "csv") == one.rounded())
