"""
KernelTestLab - Hypothesis Tests
GOF, HOM and IND problems, adaptive tests and reports
"""
