"""
Controller layer: the compression pipeline and the experiments built on it.
"""
