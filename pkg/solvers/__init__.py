"""
Stationary and normalized ground-state solvers
"""
