"""Fronthaul load of the clustered precoders versus a centralized baseband.

Every number here is a closed-form count of real scalars per coherence
block; no random draws are involved.
"""

from ezfsim.fronthaul import REFERENCE_BASE, analytic_load, format_percent, reference_tables

cfg = REFERENCE_BASE
print(cfg)

# The centralized unit streams every antenna sample: 2 reals per antenna and symbol.
zeta_cen = analytic_load("CEN", cfg)
print("centralized load:", zeta_cen)

# APD pays for metrics, one equalizer block per user, one Gram per BCU and the symbols.
zeta_apd = analytic_load("APD", cfg)
print("APD load:", zeta_apd, "gain", format_percent(zeta_apd, zeta_cen), "%")

# Growing the number of users eats into the advantage; DEZF crosses zero first.
for name, rows in reference_tables().items():
    print(f"\n{name}")
    print(f"{'K':>4} {'P':>4} {'M':>4} {'eta':>8} {'APD %':>8} {'DEZF %':>8}")
    for apd, dezf in rows:
        c = apd.cfg
        print(f"{c.n_users:>4} {c.n_bcu:>4} {c.m:>4} {c.eta:>8.4f} {apd.gain_percent:>8} {dezf.gain_percent:>8}")

# Where does APD stop paying off at this antenna count?
k = cfg.n_users
while analytic_load("APD", cfg.replace(n_users=k)) < zeta_cen and k * cfg.n_streams < cfg.n_t:
    k += 1
print(f"\nAPD load reaches the centralized load at K = {k} users")
