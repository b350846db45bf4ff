"""Plug-in standard error and stratified bootstrap interval for the ATT.

The plug-in variance sums per-cell influence terms; the bootstrap
resamples every cell independently. Both should describe the same spread.
"""

from triplex import bootstrap_ci, dgm_linear, estimate, generate, plugin_variance

table, tau = generate(dgm_linear(), 2000, seed=4)
point = estimate(table, "CCC_EMP").tau_hat

rep = plugin_variance(table)
print(f"tau_hat = {point:.4f} (true {tau})")
print(f"plug-in se = {rep.se:.4f}")
for name, v in rep.as_dict()["V"].items():
    print(f"    {name}: {v:.4f}")

boot = bootstrap_ci(table, "CCC_EMP", B=400, level=0.90, seed=4)
print(f"bootstrap se = {boot.se_boot:.4f}")
print(f"90% percentile CI [{boot.lo:.4f}, {boot.hi:.4f}]")
print(f"90% normal CI     [{boot.normal_lo:.4f}, {boot.normal_hi:.4f}]")
