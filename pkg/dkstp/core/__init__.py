"""
Numerical core of the toolkit.

This package provides:

* STP algebra and the implicit DK-STP sensing operator.
* Seeded measurement matrices, the DCT basis and sparse solvers.
* Matrix certification (spark, coherence, RIP) and error metrics.
* Logging configuration and persisted settings.
"""
