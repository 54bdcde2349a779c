"""Tests for bankrisk."""
