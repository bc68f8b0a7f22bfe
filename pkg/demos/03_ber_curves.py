"""Uncoded 16-QAM BER of the four precoders on i.i.d. Rayleigh channels.

Writes ``ber_curves.csv`` next to this script; pass a trial count to trade
runtime for confidence (default 60 trials, a few seconds).
"""

import sys
from pathlib import Path

from ezfsim import SystemConfig, ber_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 60
grid = [-9.0, -6.0, -3.0, 0.0, 3.0, 6.0, 9.0, 12.0]

for p, m in ((4, 16), (8, 8)):
    cfg = SystemConfig(n_t=64, n_bcu=p, m=m, n_users=8, n_r=4, n_streams=2)
    curve = ber_sweep(cfg, power_db=grid, trials=trials, seed=1)
    print(f"\nP={p} M={m} L_tot={cfg.l_tot}  ({curve.bits} bits per point)")
    print("P_BS dB " + "".join(f"{s:>10}" for s in curve.schemes))
    for j, pdb in enumerate(grid):
        print(f"{pdb:>7.0f} " + "".join(f"{curve.ber[i, j]:>10.4f}" for i in range(len(curve.schemes))))
    out = Path(__file__).with_name(f"ber_curves_P{p}_M{m}.csv")
    out.write_text(curve.to_csv())
    print("wrote", out.name)

# With M = 8 antennas per BCU and L_tot = 16 streams, no BCU can invert its
# local channel, so FD flattens out into an error floor.  CEN and DEZF print
# identical columns because they build the same precoder.
