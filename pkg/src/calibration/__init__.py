"""
KernelTestLab - Calibration
Resampling plans, replicate fan-out, p-values and quantiles
"""
