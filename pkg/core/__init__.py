"""Shared runtime utilities: crash-safe I/O and versioned config contracts."""
