"""Series engine, oracle and verification services."""
