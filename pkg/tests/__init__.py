"""Tests for rtscalib."""
