"""Geometries that leave the pose undetermined, and how they are detected.

A broadcaster flying level makes the linear system rank deficient.  One
flying a straight line leaves the rotation about that line free, and a
constant relative offset (all DOA parallel) leaves the range free.
"""

import warnings

from doaloc import TrajectoryParams, detect_unsuitable, generate_scenario
from doaloc.scenario import parallel_doa_scenario, straight_line_scenario

warnings.simplefilter("ignore")

cases = {
    "generic": generate_scenario(8, seed=2),
    "level broadcaster": generate_scenario(8, seed=2, params=TrajectoryParams(planar_a=True)),
    "straight line": straight_line_scenario(8),
    "parallel DOA": parallel_doa_scenario(8),
}
for name, scn in cases.items():
    d = detect_unsuitable(scn.measurements())
    print(f"{name:18s} rank {d.ls_rank:2d}  flags {sorted(f.value for f in d.flags) or '-'}")
    for msg in d.messages:
        print("    ", msg)
