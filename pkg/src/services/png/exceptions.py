from exceptions import StorageError, ValidationFailedError


class PngDecodeError(StorageError):
    prefix = "PNG decode failed"


class UnsupportedPngError(ValidationFailedError):
    prefix = "Unsupported PNG"
