"""Non-monogenity of the octic fields Q(i, m^(1/4)), m = 2, 3 mod 4, by exact computation."""

__version__ = "0.1.0"
