"""The four frozen backbone architectures and their expected feature counts.

The classifier head (including its pooling stage) is dropped and the final
convolutional activation is flattened; the expected counts below are the
hard gate that guards against truncating at the wrong layer.

ResNet50 is the odd one out: its published input size of 244 would yield
131,072 features instead of the expected 100,352, so its default input
size is 224, the only size that matches the gate.  Any size can be forced
with the input-size override; the count check stays authoritative.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Architecture:
    name: str
    default_input_size: int
    expected_features: int
    preprocess_id: str  # which keras preprocess_input family applies


ARCHITECTURES = {
    "VGG16": Architecture("VGG16", 244, 25_088, "vgg16"),
    "ResNet50": Architecture("ResNet50", 224, 100_352, "resnet50"),
    "DenseNet121": Architecture("DenseNet121", 244, 50_176, "densenet121"),
    "InceptionResNetV2": Architecture("InceptionResNetV2", 299, 98_304, "inception_resnet_v2"),
}


def get_architecture(name: str) -> Architecture:
    if name not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {name!r}, expected one of {sorted(ARCHITECTURES)}")
    return ARCHITECTURES[name]


def _keras_applications():
    try:
        from tensorflow.keras import applications
    except ImportError as exc:
        raise RuntimeError(
            "TensorFlow is required for feature extraction; install the "
            "tensorflow or tensorflow-cpu distribution"
        ) from exc
    return applications


def build_backbone(arch: Architecture, input_size: int, weights: str | None = "imagenet"):
    """Frozen keras backbone without the classifier head or its pooling."""
    apps = _keras_applications()

    constructors = {
        "VGG16": apps.VGG16,
        "ResNet50": apps.ResNet50,
        "DenseNet121": apps.DenseNet121,
        "InceptionResNetV2": apps.InceptionResNetV2,
    }
    model = constructors[arch.name](
        include_top=False,
        weights=weights,
        input_shape=(input_size, input_size, 3),
        pooling=None,
    )
    model.trainable = False
    return model


def preprocess(arch: Architecture, batch):
    apps = _keras_applications()

    fns = {
        "vgg16": apps.vgg16.preprocess_input,
        "resnet50": apps.resnet50.preprocess_input,
        "densenet121": apps.densenet.preprocess_input,
        "inception_resnet_v2": apps.inception_resnet_v2.preprocess_input,
    }
    return fns[arch.preprocess_id](batch)
