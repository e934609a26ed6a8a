"""
Telegraph Dynamics - exact diagonalization and time evolution of a particle switching
between two sides of a symmetric system coupled to a discretized continuum
"""
