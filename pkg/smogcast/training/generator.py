from typing import Iterator, List, Tuple

import numpy as np

from smogcast.core.exceptions import DataError
from smogcast.datapipe.windows import WindowedDataset


class DataGenerator:
    """
    Batches of a windowed dataset, reshuffled every epoch.

    Epoch e uses the permutation drawn from a generator seeded with (seed, e),
    so orders differ between epochs but repeat exactly for a fixed seed. The
    last batch keeps the remainder.
    """

    def __init__(self, dataset: WindowedDataset, batch_size: int = 1, seed: int = 42):
        if len(dataset) == 0:
            raise DataError("Cannot batch an empty dataset")
        if batch_size < 1:
            raise DataError(f"batch_size must be positive, got {batch_size}")
        self.dataset = dataset
        self.batch_size = batch_size
        self.seed = seed

    def __len__(self) -> int:
        return -(-len(self.dataset) // self.batch_size)

    def order(self, epoch: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, epoch])
        return rng.permutation(len(self.dataset))

    def index_batches(self, epoch: int) -> List[np.ndarray]:
        order = self.order(epoch)
        return [order[i:i + self.batch_size] for i in range(0, len(order), self.batch_size)]

    def epoch(self, epoch: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for idx in self.index_batches(epoch):
            yield self.dataset.samples[idx], self.dataset.targets[idx]


def data_generator(dataset: WindowedDataset, batch_size: int = 1, seed: int = 42) -> DataGenerator:
    return DataGenerator(dataset, batch_size, seed)
