"""Per-module properties and worked examples."""
