"""
KernelTestLab - Gaussian-Kernel Hypothesis Testing
Goodness-of-fit, two-sample and joint-independence tests with fixed,
median-heuristic and adaptive scaling, plus the power-study harness
"""

__version__ = "1.0.0"
