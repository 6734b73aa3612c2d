"""
rtscalib: Extrinsic calibration of multiple robotic total stations from moving-prism trajectories.
"""

__version__ = "0.1.0"
