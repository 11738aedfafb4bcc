"""Lower bounds on the query complexity of unitary transformations via semidefinite programming."""
__version__ = "0.1.0"
