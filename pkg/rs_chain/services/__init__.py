"""Computation services.

Modules are imported directly (``from rs_chain.services import rs_game``);
nothing is re-exported here so that ``rs_chain.models`` can depend on
``piecewise`` without an import cycle.
"""
