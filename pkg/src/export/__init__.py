"""Dataset and metadata writers."""
