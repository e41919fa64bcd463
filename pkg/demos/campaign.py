"""A reduced Monte Carlo campaign with SVG plots.

The full default campaign (three noise levels, K = 2..20, 100 trials) takes
a few minutes; its output is kept in data/campaign.  This version runs 10
trials and writes into a temporary directory.
"""

import tempfile
from pathlib import Path

from doaloc import CampaignConfig, monte_carlo
from doaloc.montecarlo import results_csv
from doaloc.svgplot import campaign_plots

cfg = CampaignConfig(trials=10, k_values=(4, 6, 8, 12, 16, 20))
result = monte_carlo(cfg)
out = Path(tempfile.mkdtemp())
(out / "results.csv").write_text(results_csv(result))
for row in result.rows():
    if row["K"] in (4, 20):
        print(f"sigma {row['sigma_az_deg']:g}  K={row['K']:2d}  {row['method']:7s} median position error {row['median_pos_err']:.4f}")
print("plots:", *campaign_plots(result.rows(), out / "plots"), sep="\n  ")
