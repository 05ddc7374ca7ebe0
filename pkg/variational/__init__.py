"""
Scalar functionals, dilation algebra and Fourier rearrangement
"""
