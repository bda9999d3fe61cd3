"""
qcong

Exact truncated q-series arithmetic and a partition-count oracle for checking
identities and congruences of 5-regular partitions into distinct parts.
"""

__version__ = "1.0.0"
