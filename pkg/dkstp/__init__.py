"""
Dimension-keeping semi-tensor product compressed sensing (DK-STP-CS).

Blockwise image compression with a measurement matrix that is smaller than
the signal by the grouping factor, reconstruction by L1 minimization in a
DCT basis, and desk-scale tooling for analyzing sensing matrices.
"""

from dkstp.config import CONFIG

__version__ = CONFIG.version
