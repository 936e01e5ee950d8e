"""
SpectralDMRI CLI
================
argparse front end over core.pipeline.
"""
