"""Experiment harness: baselines, trace files, multi-seed runs and reporting."""
