"""
Time integration, virial diagnostics and blow-up monitoring
"""
