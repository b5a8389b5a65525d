"""Torch architectures for the export presets.

Each preset is a frontend/head pair of plain Sequential modules built from
the layer kinds the neutral format can carry (conv2d, relu, maxpool,
flatten, dense).  Construction is deterministic in the seed: the modules
are created in a fixed order after ``torch.manual_seed``.
"""

from dataclasses import dataclass

import torch
from torch import nn

PRESETS = ("tiny-vgg", "linear-head", "relu-head")
NUM_CLASSES = 5


@dataclass
class PresetModel:
    """A frontend/head pair plus the metadata the container needs."""

    name: str
    frontend: nn.Sequential
    head: nn.Sequential
    input_shape: tuple
    num_classes: int

    def forward(self, x):
        activations = self.frontend(x)
        return activations, self.head(activations)

    @torch.no_grad()
    def logits(self, x):
        _, out = self.forward(x)
        return out


def build_preset(name, seed):
    """Construct a preset's modules with seed-reproducible initialization."""
    torch.manual_seed(seed)
    if name == "linear-head":
        frontend = nn.Sequential(
            nn.Conv2d(3, 8, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2, 2),
        )
        head = nn.Sequential(nn.Flatten(0), nn.Linear(8 * 4 * 4, NUM_CLASSES))
        return PresetModel(name, frontend, head, (3, 8, 8), NUM_CLASSES)
    if name == "relu-head":
        frontend = nn.Sequential(
            nn.Conv2d(3, 8, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2, 2),
        )
        head = nn.Sequential(
            nn.Flatten(0),
            nn.Linear(8 * 4 * 4, 16),
            nn.ReLU(),
            nn.Linear(16, NUM_CLASSES),
        )
        return PresetModel(name, frontend, head, (3, 8, 8), NUM_CLASSES)
    if name == "tiny-vgg":
        frontend = nn.Sequential(
            nn.Conv2d(3, 8, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(8, 8, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2, 2),
            nn.Conv2d(8, 16, 3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2, 2),
        )
        head = nn.Sequential(
            nn.Flatten(0),
            nn.Linear(16 * 4 * 4, 32),
            nn.ReLU(),
            nn.Linear(32, NUM_CLASSES),
        )
        return PresetModel(name, frontend, head, (3, 16, 16), NUM_CLASSES)
    raise ValueError(f"unknown preset {name!r}, expected one of {PRESETS}")


def _module_record(module):
    if isinstance(module, nn.Conv2d):
        if module.groups != 1 or module.dilation != (1, 1):
            raise ValueError("only plain convolutions are exportable")
        stride = module.stride[0]
        padding = module.padding[0]
        if module.stride != (stride, stride) or module.padding != (padding, padding):
            raise ValueError("only square stride/padding are exportable")
        return {
            "kind": "conv2d",
            "stride": stride,
            "padding": padding,
            "weight": module.weight.detach().numpy(),
            "bias": module.bias.detach().numpy(),
        }
    if isinstance(module, nn.Linear):
        return {
            "kind": "dense",
            "weight": module.weight.detach().numpy(),
            "bias": module.bias.detach().numpy(),
        }
    if isinstance(module, nn.ReLU):
        return {"kind": "relu"}
    if isinstance(module, nn.MaxPool2d):
        window = module.kernel_size if isinstance(module.kernel_size, int) else module.kernel_size[0]
        stride = module.stride if isinstance(module.stride, int) else module.stride[0]
        return {"kind": "maxpool", "window": window, "stride": stride}
    if isinstance(module, nn.Flatten):
        return {"kind": "flatten"}
    raise ValueError(f"module {type(module).__name__} has no neutral-format equivalent")


def layer_records(model):
    """Flatten a PresetModel into neutral-format layer dicts plus the split."""
    frontend = [_module_record(m) for m in model.frontend]
    head = [_module_record(m) for m in model.head]
    return frontend + head, len(frontend)
