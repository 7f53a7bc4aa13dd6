"""Viscous shock and rarefaction composites for systems of viscous conservation laws.

Submodules: ``model`` (flux, viscosity, entropy), ``eigen`` (eigen-frames),
``hugoniot`` (wave curves), ``shock_profile`` and ``rarefaction`` (the waves),
``superposition`` (composite ansatz and weight), ``solver`` (time stepping),
``diagnostics`` (relative-entropy functionals) and ``cli``.
"""

__version__ = "0.1.0"
