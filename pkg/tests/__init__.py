"""Tests package for vpprobe."""
