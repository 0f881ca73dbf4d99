"""Numerical toolkit for exposing boundary points of pseudoconvex domains.

The package is organised bottom-up:

* :mod:`expose_lab.hermpoly`   exact calculus for Hermitian polynomials
* :mod:`expose_lab.geometry`   local domains, normal-form charts, curvature certificates
* :mod:`expose_lab.holo`       holomorphic scalar expressions and map expressions
* :mod:`expose_lab.peak`       peak functions with measured Gaussian decay
* :mod:`expose_lab.convexify`  the convexifying shear, its parameter planner and verifier
* :mod:`expose_lab.onevar`     one-variable engine (Moebius, fits, Cauchy, Riemann maps)
* :mod:`expose_lab.ballexpose` exposing maps of the ball along a dumbbell
* :mod:`expose_lab.hull`       maximum-principle evidence on an annulus slice
* :mod:`expose_lab.render`     deterministic SVG figures and curve tables
* :mod:`expose_lab.scenarios`  named experiments and the scenario runner
* :mod:`expose_lab.cli`        the ``expose-lab`` command line
"""

__version__ = "0.1.0"
