"""
KernelTestLab - Command Line Interface
"""
