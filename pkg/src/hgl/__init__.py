"""hgl: solvers for the epitaxial growth equation u_t + Lap^2 u = det(D^2 u) + lambda*h.

Subpackages cover the uniform-grid operators (:mod:`hgl.grid`), the
self-similar shooting solver (:mod:`hgl.selfsim`), the 2D stationary problem
(:mod:`hgl.stationary`), the radial stationary problem (:mod:`hgl.radial`),
the parabolic time-stepper (:mod:`hgl.evolution`) and the command line
interface (:mod:`hgl.cli`).
"""

__version__ = "0.1.0"
