"""Z2 homology of real projective sets cut out by quadratic inequality systems."""

__version__ = "0.1.0"
