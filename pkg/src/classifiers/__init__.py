"""Classifier heads trained on extracted features."""
