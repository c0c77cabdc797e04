"""Architecture zoo: six image classifiers, six audio classifiers, plus
small desk-scale networks for quick sweeps.

The image family is all stride-1 'same' convolution stacks: A/C end in a
class-wide conv + global average pooling, B/D/E add fully connected heads,
F flattens into a fully connected tower. The audio family prepends a
batch-normalized conv stem to repeated conv/ELU/maxpool/dropout loops.
Nominal parameter totals quoted for these families elsewhere are kept for
reporting, but the counted totals are the source of truth here; the two
are not asserted equal.
"""

from .model import ModelSpec

# Informational only; compare, never assert.
NOMINAL_PARAM_TOTALS = {
    "image-a": 701_386,
    "image-b": 1_080_000,
    "image-c": 1_144_138,
    "image-d": 1_280_000,
    "image-e": 1_620_000,
    "image-f": 1_686_090,
    "audio-a": 101_412,
    "audio-b": 170_000,
    "audio-c": 430_000,
    "audio-d": 810_000,
    "audio-e": 824_868,
    "audio-f": 3_715_460,
}


def _conv(channels):
    return ("conv", channels, 3)


def _image_stem():
    # conv(32, 64) + relu / conv(128) + dropout / conv(128, 128) + relu
    return (
        _conv(32), ("relu",), _conv(64), ("relu",),
        _conv(128), ("dropout", 0.5),
        _conv(128), ("relu",), _conv(128), ("relu",),
    )


def _image_block():
    return (_conv(128), ("dropout", 0.5),
            _conv(128), ("relu",), _conv(128), ("relu",))


def _fc_head(units, num_classes, rate=0.5):
    head = []
    for u in units:
        head += [("fc", u), ("dropout", rate)]
    return tuple(head) + (("fc", num_classes), ("softmax",))


def image_zoo(num_classes: int = 10) -> dict:
    trunk_a = _image_stem() + _image_block()
    trunk_c = _image_stem() + _image_block() + _image_block()
    conv_head = (_conv(num_classes), ("gap",), ("softmax",))
    return {
        "image-a": ModelSpec("image-a", trunk_a + conv_head),
        "image-b": ModelSpec("image-b", trunk_a + (("gap",),)
                             + _fc_head((128, 128), num_classes)),
        "image-c": ModelSpec("image-c", trunk_c + conv_head),
        "image-d": ModelSpec("image-d", trunk_c + (("gap",),)
                             + _fc_head((128, 128), num_classes)),
        "image-e": ModelSpec("image-e", trunk_a + (("gap",),)
                             + _fc_head((256, 256), num_classes)),
        "image-f": ModelSpec("image-f", _image_stem() + (_conv(128), ("dropout", 0.5),
                             ("flatten",)) + _fc_head((128, 256, 256), num_classes)),
    }


def _conv_loop():
    return (_conv(32), ("elu",), ("maxpool",), ("dropout", 0.5))


def audio_zoo(num_classes: int = 12) -> dict:
    stem = (_conv(32), ("batchnorm",), ("relu",))

    def body(loops, fc_units):
        layers = stem + _conv_loop() * loops + (("flatten",),)
        return layers + _fc_head(fc_units, num_classes, rate=0.6)

    return {
        "audio-a": ModelSpec("audio-a", body(3, ())),
        "audio-b": ModelSpec("audio-b", body(4, (128,))),
        "audio-c": ModelSpec("audio-c", body(3, (64, 128))),
        "audio-d": ModelSpec("audio-d", body(3, (128,))),
        "audio-e": ModelSpec("audio-e", body(3, (128, 128))),
        "audio-f": ModelSpec("audio-f", body(2, (128,))),
    }


def desk_zoo(num_classes: int = 10) -> dict:
    """Small nets sized for minutes-long sweeps on a CPU."""
    return {
        "small-conv": ModelSpec("small-conv", (
            _conv(16), ("relu",), ("maxpool",),
            _conv(32), ("relu",), ("maxpool",),
            ("flatten",), ("fc", 64), ("relu",),
            ("fc", num_classes), ("softmax",))),
        "tiny-conv": ModelSpec("tiny-conv", (
            _conv(8), ("relu",), ("maxpool",),
            ("flatten",), ("fc", 32), ("relu",),
            ("fc", num_classes), ("softmax",))),
        "tiny-fc": ModelSpec("tiny-fc", (
            ("flatten",), ("fc", 32), ("relu",),
            ("fc", num_classes), ("softmax",))),
    }


def zoo_ids() -> list:
    return (sorted(image_zoo()) + sorted(audio_zoo()) + sorted(desk_zoo()))


def get_architecture(arch_id: str, num_classes: int | None = None) -> ModelSpec:
    """Look up an architecture by id, optionally overriding the class count."""
    for family, default_classes in ((image_zoo, 10), (audio_zoo, 12), (desk_zoo, 10)):
        specs = family(num_classes if num_classes is not None else default_classes)
        if arch_id in specs:
            return specs[arch_id]
    raise KeyError(f"unknown architecture {arch_id!r}; known: {', '.join(zoo_ids())}")
