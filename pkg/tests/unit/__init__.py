"""
KernelTestLab - Test Suite
"""
