"""Dataset loading, balancing and caching."""
