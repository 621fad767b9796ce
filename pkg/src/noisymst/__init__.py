"""Monte Carlo laboratory for noise sensitivity of random minimum spanning forests."""
