"""wesad_extractor: WESAD pickle archives to the canonical feature CSV."""

__version__ = "0.1.0"
