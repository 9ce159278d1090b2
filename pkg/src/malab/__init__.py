"""Numerical laboratory for anisotropic self-similar Monge-Ampere solutions.

Subpackages:

* :mod:`malab.profile`  -- boundary profile construction and audits
* :mod:`malab.model`    -- analytic evaluators for the model solution and rhs
* :mod:`malab.masolver` -- wide-stencil monotone Dirichlet solver
* :mod:`malab.metrics`  -- Holder seminorms, oscillations, exponent fits
* :mod:`malab.sections` -- sublevel-set geometry and blow-up diagnostics
* :mod:`malab.cli`      -- experiment orchestration and command line
"""

__version__ = "0.1.0"
