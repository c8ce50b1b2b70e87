"""HTTP service subpackage."""
