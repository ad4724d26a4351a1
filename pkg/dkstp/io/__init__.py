"""
File formats: binary PGM images, compressed packets, CSV/JSON reports.
"""
