"""Data model for simulated chains and the crosschain protocol."""
