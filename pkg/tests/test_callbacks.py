import pytest

from smogcast.models.config import EarlyStopConfig, PlateauConfig
from smogcast.training.callbacks import EarlyStopping, ReduceLROnPlateau


def test_early_stopping_counts_non_improving_epochs():
    stop = EarlyStopping(EarlyStopConfig(patience=2))
    losses = [1.0, 0.9, 0.8, 0.85, 0.86, 0.5]
    fired = [stop.update(e, loss) for e, loss in enumerate(losses, start=1)]
    assert fired == [False, False, False, False, True, False]


def test_early_stopping_min_delta():
    stop = EarlyStopping(EarlyStopConfig(patience=1, min_delta=0.1))
    assert stop.update(1, 1.0) is False
    # 0.95 is not better than 1.0 - 0.1
    assert stop.update(2, 0.95) is True


def test_improvement_resets_patience():
    stop = EarlyStopping(EarlyStopConfig(patience=2))
    for epoch, loss in enumerate([1.0, 1.1, 0.9, 1.0], start=1):
        assert stop.update(epoch, loss) is False
    assert stop.update(5, 1.0) is True


def test_plateau_reduces_and_resets():
    plateau = ReduceLROnPlateau(PlateauConfig(patience=2, factor=0.5, min_lr=1e-4))
    lr = 1e-3
    events = []
    for epoch, loss in enumerate([1.0, 1.0, 1.0, 1.0, 1.0], start=1):
        lr, fired = plateau.update(epoch, loss, lr)
        events.append((lr, fired))
    assert events == [
        (1e-3, False),
        (1e-3, False),
        (5e-4, True),
        (5e-4, False),
        (2.5e-4, True),
    ]


def test_plateau_respects_min_lr():
    plateau = ReduceLROnPlateau(PlateauConfig(patience=0, factor=0.5, min_lr=1e-4))
    assert plateau.update(1, 1.0, 1.5e-4) == (1.5e-4, False)
    lr, fired = plateau.update(2, 1.0, 1.5e-4)
    assert fired is True
    assert lr == pytest.approx(1e-4)
    lr, fired = plateau.update(3, 1.0, lr)
    assert fired is False
    assert lr == pytest.approx(1e-4)
