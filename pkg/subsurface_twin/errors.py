"""
Exceptions raised by the pipescan modules
"""


class PipescanError(Exception):
    """ Base class of every pipescan error """


class DomainError(PipescanError, ValueError):
    """ An argument lies outside the domain of an operation """


class ConfigurationError(PipescanError, ValueError):
    """ A configuration is inconsistent or malformed """


class FileFormatError(PipescanError, ValueError):
    """ A binary record could not be decoded """


class TrainingError(PipescanError, RuntimeError):
    """
    The CNN diverged while training

    :param message: The description of the failure
    :param epoch: The epoch index at which the failure was detected
    """

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
        """ The epoch index at which training failed """
