"""
This package contains the modules related to writing run outputs to
disk.

@sort: filestore
"""

__all__ = ['filestore']
