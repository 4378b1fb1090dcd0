"""Cross-module checks: oracle equivalence, sweeps, acceptance runs and the CLI."""
