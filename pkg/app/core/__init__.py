"""Numerical core: special functions, cone algebra, priors, risks, Monte Carlo and regions."""
