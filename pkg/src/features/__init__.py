"""Fixed convolutional feature extraction."""
