"""Exact-arithmetic toolkit for a low-rank matrix hitting-set generator.

Modules: ``ring`` (rationals, prime fields, eps-series), ``circuit``,
``abp``, ``cyclecover``, ``mmtensor``, ``pitgen``, ``formats`` and ``cli``.
"""

__version__ = "0.1.0"
