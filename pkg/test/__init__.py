# Test package for lattice-cf
