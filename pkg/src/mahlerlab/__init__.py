"""mahlerlab: volume products, symplectic reductions and capacity estimates
of centrally symmetric convex bodies, with exact rational arithmetic for
polytopes and seeded numerics everywhere else."""

__version__ = "0.1.0"
