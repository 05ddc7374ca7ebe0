"""
Scripted studies built on the solvers and the integrator
"""
