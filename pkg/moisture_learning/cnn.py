"""
A small convolutional network trained by backpropagation, float64 numpy throughout

conv(8, 3x3) + ReLU, maxpool 2x2, conv(16, 3x3) + ReLU, maxpool 2x2, dense(64) + ReLU,
dense(C) + softmax
"""

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from reporting import log
from scan_files.protocol import CnnRecord, read_record, write_record
from subsurface_twin import constants
from subsurface_twin.errors import DomainError, FileFormatError, TrainingError

PARAMETER_NAMES = ("conv1_w", "conv1_b", "conv2_w", "conv2_b",
                   "dense1_w", "dense1_b", "dense2_w", "dense2_b")
""" The parameter blocks in storage order """

KERNEL = 3
""" The side of the convolution kernels """


def _windows(padded: np.ndarray) -> np.ndarray:
    """
    :param padded: A zero padded batch, shape (B, C, H + 2, W + 2)
    :return: A read-only view of every 3x3 window, shape (B, C, H, W, 3, 3)
    """
    batch, channels, height, width = padded.shape
    stride_b, stride_c, stride_h, stride_w = padded.strides

    return np.lib.stride_tricks.as_strided(
        padded,
        (batch, channels, height - KERNEL + 1, width - KERNEL + 1, KERNEL, KERNEL),
        (stride_b, stride_c, stride_h, stride_w, stride_h, stride_w),
        writeable=False)


def _pad(x: np.ndarray) -> np.ndarray:
    return np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))


def conv_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """ Stride 1, zero padding 1 convolution of a (B, C, H, W) batch """
    return np.einsum("bihwkl,oikl->bohw", _windows(_pad(x)), weight) + bias[None, :, None, None]


def conv_backward(x: np.ndarray, weight: np.ndarray, dout: np.ndarray) \
        -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    :return: The gradients with respect to the input, the weight and the bias
    """
    dweight = np.einsum("bihwkl,bohw->oikl", _windows(_pad(x)), dout)
    dbias = dout.sum(axis=(0, 2, 3))
    rotated = np.rot90(weight, 2, axes=(2, 3))
    dx = np.einsum("bohwkl,oikl->bihw", _windows(_pad(dout)), rotated)
    return dx, dweight, dbias


def _pool_windows(x: np.ndarray) -> np.ndarray:
    batch, channels, height, width = x.shape
    blocks = x.reshape(batch, channels, height // 2, 2, width // 2, 2)
    return blocks.transpose(0, 1, 2, 4, 3, 5).reshape(batch, channels, height // 2, width // 2, 4)


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    :return: The pooled batch and the index of the maximum in each 2x2 window, the first
        maximum in row-major order when several are equal
    """
    windows = _pool_windows(x)
    routes = windows.argmax(axis=-1)
    return np.take_along_axis(windows, routes[..., None], axis=-1)[..., 0], routes


def maxpool_backward(dout: np.ndarray, routes: np.ndarray) -> np.ndarray:
    batch, channels, half_h, half_w = dout.shape
    windows = np.zeros((batch, channels, half_h, half_w, 4))
    np.put_along_axis(windows, routes[..., None], dout[..., None], axis=-1)
    blocks = windows.reshape(batch, channels, half_h, half_w, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return blocks.reshape(batch, channels, 2 * half_h, 2 * half_w)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """ The mean cross entropy of softmax(logits) """
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(labels.size), labels].mean())


class CnnModel:
    """
    The network and its parameters

    ...

    Attributes
    ----------

    n_classes: int
        The number of output classes

    seed: int
        The seed of the weight initialisation

    input_size: int
        The side of the square input images, divisible by 4

    params: dict[str, np.ndarray]
        The parameter blocks, named by PARAMETER_NAMES

    Methods
    -------

    forward(images)
        The class probabilities of a batch

    loss_and_grads(images, labels)
        The mean cross entropy and its gradient for every parameter block

    """

    def __init__(self, n_classes: int, seed: int = constants.DEFAULT_SEED,
                 input_size: int = constants.CLASSIFIER_PIXELS):
        if n_classes < 2:
            raise DomainError(f"need at least two classes, got {n_classes}")
        if input_size < 4 or input_size % 4 != 0:
            raise DomainError(f"input size must be a positive multiple of 4, got {input_size}")

        self.n_classes = n_classes
        self.seed = seed
        self.input_size = input_size
        self.params: dict[str, np.ndarray] = self._initial_params()

    def _initial_params(self) -> dict[str, np.ndarray]:
        """ He uniform weights, zero biases, the output layer shrunk to predict uniformly """
        rng = np.random.default_rng(self.seed)
        flat = constants.CONV2_FILTERS * (self.input_size // 4) ** 2

        def he(shape: tuple[int, ...], fan_in: int, scale: float = 1.0) -> np.ndarray:
            limit = scale * math.sqrt(6.0 / fan_in)
            return rng.uniform(-limit, limit, size=shape)

        return {
            "conv1_w": he((constants.CONV1_FILTERS, 1, KERNEL, KERNEL), KERNEL * KERNEL),
            "conv1_b": np.zeros(constants.CONV1_FILTERS),
            "conv2_w": he((constants.CONV2_FILTERS, constants.CONV1_FILTERS, KERNEL, KERNEL),
                          constants.CONV1_FILTERS * KERNEL * KERNEL),
            "conv2_b": np.zeros(constants.CONV2_FILTERS),
            "dense1_w": he((flat, constants.DENSE_UNITS), flat),
            "dense1_b": np.zeros(constants.DENSE_UNITS),
            "dense2_w": he((constants.DENSE_UNITS, self.n_classes), constants.DENSE_UNITS,
                           constants.OUTPUT_INIT_SCALE),
            "dense2_b": np.zeros(self.n_classes),
        }

    def copy(self) -> "CnnModel":
        model = CnnModel.__new__(CnnModel)
        model.n_classes = self.n_classes
        model.seed = self.seed
        model.input_size = self.input_size
        model.params = {name: block.copy() for name, block in self.params.items()}
        return model

    def _batch(self, images: np.ndarray) -> np.ndarray:
        images = np.asarray(images, dtype=float)
        if images.ndim == 2:
            images = images[None]
        if images.ndim != 3 or images.shape[1:] != (self.input_size, self.input_size):
            raise DomainError(f"expected images of {self.input_size}x{self.input_size}, "
                              f"got shape {images.shape}")
        return images[:, None, :, :]

    def forward_cache(self, images: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        """
        :param images: A batch (B, s, s) or a single (s, s) image
        :return: The logits and every intermediate value of the forward pass
        """
        p = self.params
        cache = {"input": self._batch(images)}

        cache["conv1_pre"] = conv_forward(cache["input"], p["conv1_w"], p["conv1_b"])
        cache["conv1"] = np.maximum(cache["conv1_pre"], 0)
        cache["pool1"], cache["pool1_routes"] = maxpool_forward(cache["conv1"])

        cache["conv2_pre"] = conv_forward(cache["pool1"], p["conv2_w"], p["conv2_b"])
        cache["conv2"] = np.maximum(cache["conv2_pre"], 0)
        cache["pool2"], cache["pool2_routes"] = maxpool_forward(cache["conv2"])

        cache["flat"] = cache["pool2"].reshape(cache["pool2"].shape[0], -1)
        cache["dense1_pre"] = cache["flat"] @ p["dense1_w"] + p["dense1_b"]
        cache["dense1"] = np.maximum(cache["dense1_pre"], 0)
        logits = cache["dense1"] @ p["dense2_w"] + p["dense2_b"]

        return logits, cache

    def forward(self, images: np.ndarray) -> np.ndarray:
        """
        :param images: A batch (B, s, s) or a single (s, s) image
        :return: The class probabilities, shape (B, C)
        """
        logits, _ = self.forward_cache(images)
        return softmax(logits)

    def predict(self, images: np.ndarray) -> np.ndarray:
        return self.forward(images).argmax(axis=1)

    def loss_and_grads(self, images: np.ndarray, labels) -> tuple[float, dict[str, np.ndarray]]:
        """
        :param images: A non-empty batch (B, s, s)
        :param labels: The class index of every image
        :return: The mean cross entropy and the gradient of every parameter block
        """
        labels = np.asarray(labels, dtype=int).ravel()
        logits, cache = self.forward_cache(images)
        batch = logits.shape[0]

        if batch == 0 or labels.size != batch:
            raise DomainError(f"{labels.size} labels for a batch of {batch} images")
        if np.any(labels < 0) or np.any(labels >= self.n_classes):
            raise DomainError(f"labels must lie in [0, {self.n_classes})")

        p = self.params
        grads: dict[str, np.ndarray] = {}

        dlogits = softmax(logits)
        dlogits[np.arange(batch), labels] -= 1
        dlogits /= batch

        grads["dense2_w"] = cache["dense1"].T @ dlogits
        grads["dense2_b"] = dlogits.sum(axis=0)
        ddense1 = (dlogits @ p["dense2_w"].T) * (cache["dense1_pre"] > 0)

        grads["dense1_w"] = cache["flat"].T @ ddense1
        grads["dense1_b"] = ddense1.sum(axis=0)
        dpool2 = (ddense1 @ p["dense1_w"].T).reshape(cache["pool2"].shape)

        dconv2 = maxpool_backward(dpool2, cache["pool2_routes"]) * (cache["conv2_pre"] > 0)
        dpool1, grads["conv2_w"], grads["conv2_b"] = conv_backward(cache["pool1"], p["conv2_w"],
                                                                   dconv2)

        dconv1 = maxpool_backward(dpool1, cache["pool1_routes"]) * (cache["conv1_pre"] > 0)
        _, grads["conv1_w"], grads["conv1_b"] = conv_backward(cache["input"], p["conv1_w"],
                                                              dconv1)

        return cross_entropy(logits, labels), grads


def cnn_forward(model: CnnModel, image: np.ndarray) -> np.ndarray:
    """
    :param model: The network
    :param image: One (s, s) image
    :return: The probability of every class
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise DomainError(f"expected a single 2D image, got shape {image.shape}")
    return model.forward(image)[0]


def cnn_loss_and_grads(model: CnnModel, images: np.ndarray, labels) \
        -> tuple[float, dict[str, np.ndarray]]:
    return model.loss_and_grads(images, labels)


@dataclass(frozen=True)
class TrainConfig:
    """ Adam on the mean cross entropy with early stopping on validation accuracy """

    learning_rate: float = constants.LEARNING_RATE
    beta1: float = constants.ADAM_BETA1
    beta2: float = constants.ADAM_BETA2
    epsilon: float = constants.ADAM_EPSILON
    batch_size: int = constants.BATCH_SIZE
    max_epochs: int = constants.MAX_EPOCHS
    patience: int = constants.PATIENCE
    seed: int = constants.DEFAULT_SEED

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.batch_size < 1 \
                or self.max_epochs < 0 or self.patience < 1 \
                or not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            raise DomainError(f"invalid training configuration {self}")

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "TrainConfig":
        try:
            return TrainConfig(**data)
        except TypeError as error:
            raise DomainError(f"malformed training document: {error}") from error


@dataclass
class Adam:
    """ The Adam optimiser state of one model """

    config: TrainConfig
    step_count: int = 0
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        """ Updates the parameters in place """
        config = self.config
        self.step_count += 1
        correction1 = 1 - config.beta1 ** self.step_count
        correction2 = 1 - config.beta2 ** self.step_count

        for name, grad in grads.items():
            first = self.first.setdefault(name, np.zeros_like(grad))
            second = self.second.setdefault(name, np.zeros_like(grad))
            first *= config.beta1
            first += (1 - config.beta1) * grad
            second *= config.beta2
            second += (1 - config.beta2) * grad ** 2
            params[name] -= config.learning_rate * (first / correction1) / \
                (np.sqrt(second / correction2) + config.epsilon)


@dataclass(frozen=True)
class EpochStats:
    """ The losses and accuracies after one training epoch """

    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def _evaluate(model: CnnModel, images: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    logits, _ = model.forward_cache(images)
    return cross_entropy(logits, labels), float(np.mean(logits.argmax(axis=1) == labels))


def cnn_train(model: CnnModel, train_images: np.ndarray, train_labels,
              val_images: np.ndarray, val_labels, config: Optional[TrainConfig] = None) \
        -> tuple[CnnModel, list[EpochStats]]:
    """
    Trains a copy of the model with mini-batch Adam

    The shuffle of every epoch comes from the config seed. Training stops after `patience`
    epochs without a better validation accuracy.

    :param model: The starting network, left untouched
    :param train_images: The training batch (N, s, s)
    :param train_labels: The training labels
    :param val_images: The validation batch
    :param val_labels: The validation labels
    :param config: The optimiser and stopping settings
    :return: The snapshot with the best validation accuracy and the per-epoch history
    """
    config = config if config is not None else TrainConfig()
    train_images = np.asarray(train_images, dtype=float)
    val_images = np.asarray(val_images, dtype=float)
    train_labels = np.asarray(train_labels, dtype=int)
    val_labels = np.asarray(val_labels, dtype=int)

    if train_labels.size == 0 or val_labels.size == 0:
        raise DomainError("training and validation splits must not be empty")

    trained = model.copy()
    best = model.copy()
    history: list[EpochStats] = []

    if config.max_epochs == 0:
        return best, history

    optimizer = Adam(config)
    rng = np.random.default_rng(config.seed)
    best_accuracy = -1.0
    stale = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(train_labels.size)

        for start in range(0, order.size, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grads = trained.loss_and_grads(train_images[batch], train_labels[batch])
            if not math.isfinite(loss):
                raise TrainingError("training loss diverged", epoch)
            optimizer.step(trained.params, grads)

        train_loss, train_accuracy = _evaluate(trained, train_images, train_labels)
        val_loss, val_accuracy = _evaluate(trained, val_images, val_labels)
        if not math.isfinite(train_loss):
            raise TrainingError("training loss diverged", epoch)

        history.append(EpochStats(epoch, train_loss, train_accuracy, val_loss, val_accuracy))
        log.progress(f"[CNN] epoch {epoch + 1}/{config.max_epochs} loss {train_loss:.4f} "
                     f"val accuracy {val_accuracy:.3f}")

        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best = trained.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    return best, history


def save_cnn(model: CnnModel, path: str, train_config: Optional[TrainConfig] = None,
             classes: Optional[list[float]] = None, training: Optional[dict[str, Any]] = None):
    """
    :param model: The network
    :param path: The MWNN file
    :param train_config: The settings it was trained with
    :param classes: The moisture level of every class
    :param training: The pipeline, band plan and acquisition the inputs came from
    """
    meta = {"architecture": [f"conv{constants.CONV1_FILTERS}", "maxpool2",
                             f"conv{constants.CONV2_FILTERS}", "maxpool2",
                             f"dense{constants.DENSE_UNITS}", f"dense{model.n_classes}"],
            "seed": model.seed, "input_size": model.input_size,
            "train_config": None if train_config is None else train_config.to_dict(),
            "classes": classes, "training": training}
    write_record(CnnRecord(model.n_classes, [model.params[name] for name in PARAMETER_NAMES],
                           meta), path)


def load_cnn(path: str) -> tuple[CnnModel, Optional[list[float]]]:
    """
    :param path: An MWNN file
    :return: The network and the moisture level of every class, if recorded
    """
    return cnn_from_record(read_record(path, CnnRecord), path)


def cnn_from_record(record: CnnRecord, path: str = "MWNN record") \
        -> tuple[CnnModel, Optional[list[float]]]:
    """
    :param record: A decoded MWNN record
    :param path: The file it was read from, for error messages
    :return: The network and the moisture level of every class, if recorded
    """
    try:
        model = CnnModel(record.n_classes, int(record.meta["seed"]),
                         int(record.meta["input_size"]))
    except (KeyError, DomainError) as error:
        raise FileFormatError(f"{path}: bad MWNN trailer: {error}") from error

    if len(record.blocks) != len(PARAMETER_NAMES):
        raise FileFormatError(f"{path}: expected {len(PARAMETER_NAMES)} parameter blocks")

    for name, block in zip(PARAMETER_NAMES, record.blocks):
        if block.shape != model.params[name].shape:
            raise FileFormatError(f"{path}: block {name} has shape {block.shape}")
        model.params[name] = block

    return model, record.meta.get("classes")
