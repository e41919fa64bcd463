"""How many epochs does each method need?

Noiseless data: the linear system needs six epochs, the relaxed SDP four.
With three epochs the SDP still returns a pose but flags it as ambiguous.
Then a small noisy comparison of the full and the reduced constraint set.
"""

import warnings

import numpy as np

from doaloc import CampaignConfig, generate_scenario, monte_carlo
from doaloc.pipeline import solve_linear, solve_sdp_o

warnings.simplefilter("ignore")

for K in (3, 4, 6):
    scn = generate_scenario(K, seed=1)
    ls = solve_linear(scn.measurements())
    sdp = solve_sdp_o(scn.measurements())
    e_ls = scn.evaluate(ls.rotation, ls.translation) if ls.status == "optimal" else None
    e_sdp = scn.evaluate(sdp.rotation, sdp.translation)
    print(
        f"K={K}: LS {ls.status:14s} "
        + (f"pos err {e_ls.position_error:.1e} " if e_ls else "")
        + f"| SDP+O pos err {e_sdp.position_error:.1e}, ambiguous={sdp.ambiguous}"
    )

base = dict(sigmas_deg=(1.0,), k_values=(8,), trials=100, methods=("sdp",))
for cs in ("full", "independent-only"):
    med = monte_carlo(CampaignConfig(**base, constraint_set=cs)).median("sdp", 1.0, 8, "rotation")
    print(f"{cs:17s} median rotation error at 1 deg noise, K=8: {np.rad2deg(med):.2f} deg")
