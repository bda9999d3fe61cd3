"""Test suite for qcong."""
