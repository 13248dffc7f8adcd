"""The radius as a surface over candidate zero locations.

Writes a CSV of the fixed-s radius over a grid (the same format the CLI's
`surface` command emits) and renders it when the companion plots package is
installed. The minimum sits near 0.83 + 0.56j at roughly 0.2086.
"""

import shutil
import subprocess

import numpy as np

from zeroradius import StateSpaceSystem, StructuredPattern, norm_surface

plant = StateSpaceSystem(
    A=np.array([[0.74, -0.12, -0.38],
                [-0.69, 1.62, -0.21],
                [-2.08, 0.63, 0.14]]),
    B=np.array([[1.06], [0.71], [0.61]]),
    C=np.array([[-1.23, 1.02, -0.66],
                [-0.26, 2.51, 1.13]]),
    D=np.array([[1.33], [-2.89]]),
)
pattern = StructuredPattern.from_indices([0, 2], [0, 2], (5, 4))

re_axis, im_axis, norms = norm_surface(plant, pattern, (0.0, 1.6, -1.2, 1.2),
                                       (33, 25))
i, j = np.unravel_index(np.nanargmin(norms), norms.shape)
print(f"grid minimum {norms[i, j]:.4f} at {re_axis[i]:.2f} + {im_axis[j]:.2f}j")

with open("norm_surface.csv", "w") as fh:
    fh.write("re,im,norm\n")
    for a, re in enumerate(re_axis):
        for b, im in enumerate(im_axis):
            v = norms[a, b]
            fh.write(f"{float(re)!r},{float(im)!r},"
                     f"{'' if np.isnan(v) else repr(float(v))}\n")
print("surface written to norm_surface.csv")

if shutil.which("zeroradius-plots"):
    subprocess.run(["zeroradius-plots", "surface", "norm_surface.csv",
                    "--out", "norm_surface.png", "--mark-min"], check=True)
else:
    print("install the plots package to render: "
          "zeroradius-plots surface norm_surface.csv --out norm_surface.png "
          "--mark-min")
