"""Quasilocal energy-momentum of surfaces going to spatial infinity."""
