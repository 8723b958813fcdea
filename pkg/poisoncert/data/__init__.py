"""
poisoncert/data/__init__.py
Feature tables, preprocessing and synthetic generators.
"""

from poisoncert.data.preprocess import (
    ProcessedDataset,
    load_dataset,
    preprocess,
    preprocess_split,
    save_dataset,
)
from poisoncert.data.synthetic import gen_blobs, gen_gaussian_task
from poisoncert.data.tables import FeatureTable, load_table, save_table, train_test_split

__all__ = [
    "FeatureTable",
    "ProcessedDataset",
    "gen_blobs",
    "gen_gaussian_task",
    "load_dataset",
    "load_table",
    "preprocess",
    "preprocess_split",
    "save_dataset",
    "save_table",
    "train_test_split",
]
