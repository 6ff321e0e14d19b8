"""Mutation-based validation data generation reused as a stuck-at test set."""
