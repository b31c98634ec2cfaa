"""equiweyl: symmetry-reduced semiclassical spectral asymptotics, numerically.

Core layout: geometry (model surfaces), modespec (per-mode eigensolvers),
peterweyl (character bookkeeping), reduction (reduced phase-space measures),
mollify (h-dependent test functions), weyllab (theorem sides and rate fits),
experiment (batch runs), service (FastAPI wrapper), cli (thin client).
"""

__version__ = "0.1.0"
