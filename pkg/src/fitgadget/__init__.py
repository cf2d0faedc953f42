"""Gadget compiler for equation satisfiability in finite solvable groups."""
