"""Good-case latency simulations for Byzantine broadcast."""
