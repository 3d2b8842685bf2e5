from typing import Optional


class SmogcastError(Exception):
    """Base error; carries an HTTP status so the API can render it directly"""

    status_code: int = 500
    default_detail: str = "Internal error"

    def __init__(self, detail: Optional[str] = None):
        self.detail = detail or self.default_detail
        super().__init__(self.detail)


class ShapeMismatchError(SmogcastError):
    status_code = 400
    default_detail = "Tensor shapes are inconsistent"


class NonFiniteError(SmogcastError):
    status_code = 422
    default_detail = "Non-finite value encountered"


class TrainingDivergedError(NonFiniteError):
    def __init__(self, epoch: int, batch_index: int, loss: float):
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        super().__init__(f"Non-finite loss {loss!r} at epoch {epoch}, batch {batch_index}")


class FormatError(SmogcastError):
    status_code = 400
    default_detail = "Malformed container file"


class FingerprintMismatchError(SmogcastError):
    status_code = 409
    default_detail = "Checkpoint does not match the declared architecture"


class DataError(SmogcastError):
    status_code = 400
    default_detail = "Invalid dataset"


class ConfigError(SmogcastError):
    status_code = 400
    default_detail = "Invalid configuration"


class NotFoundError(SmogcastError):
    status_code = 404
    default_detail = "Resource not found"
