"""I/O backends: canonical codec, configuration files, reports and archives."""
