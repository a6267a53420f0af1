"""
KernelTestLab - Benchmark
Power studies, DAG selection and output writers
"""
