"""Data-space and feature-space augmentation."""
