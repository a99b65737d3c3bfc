"""Blow-up laboratory for 1D semilinear waves with scale-invariant damping."""
