"""warpbench - data-space vs feature-space augmentation benchmarks."""
