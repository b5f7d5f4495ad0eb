"""Experiment drivers behind the ``quetron`` command-line tool.

Each driver takes an :class:`~quetron.models.ExperimentConfig`, runs one
sweep or audit and writes its artifacts through
:class:`~quetron.reports.ResultWriter`.
"""
