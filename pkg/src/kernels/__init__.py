"""
KernelTestLab - Kernels
Distances, Gram matrices, U-statistic sums and Fourier checks
"""
