"""Simulation toolkit for autonomous multipartite entanglement engines.

Modules: :mod:`qcore` (linear algebra), :mod:`builder` (targets and machines),
:mod:`dynamics` (Liouvillians, steady states), :mod:`filtering` (heralding),
:mod:`bell` (Bell expressions), :mod:`optimizer` (sweeps) and :mod:`cli`.
"""

__version__ = "0.1.0"
