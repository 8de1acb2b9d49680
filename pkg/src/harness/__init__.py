"""Learning-curve experiment harness."""
