"""Build aligned German speech corpora from public-domain audiobooks."""

__version__ = "0.1.0"
