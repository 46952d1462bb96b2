from exceptions import ValidationFailedError


class PairingError(ValidationFailedError):
    prefix = "Image pairing failed"


class SsimInputError(ValidationFailedError):
    prefix = "Invalid SSIM input"
