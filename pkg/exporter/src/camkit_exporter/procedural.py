"""Procedurally generated images and a tiny training loop.

No dataset is downloaded or redistributed: training images are synthesized
as class-keyed bright patches over smooth noise, which is enough to pull
the preset weights away from their random initialization so exported
activations are non-degenerate.
"""

import numpy as np
import torch
from torch import nn


def class_patch_image(input_shape, class_index, num_classes, rng):
    """Noisy image with a bright square whose position encodes the class."""
    c, h, w = input_shape
    image = 0.25 + 0.1 * rng.standard_normal((c, h, w))
    side = max(2, h // 4)
    # walk patch positions along the diagonal band, one slot per class
    span_h = max(1, h - side)
    span_w = max(1, w - side)
    top = int(round(span_h * class_index / max(1, num_classes - 1)))
    left = int(round(span_w * (num_classes - 1 - class_index) / max(1, num_classes - 1)))
    image[:, top:top + side, left:left + side] += 0.9
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def evaluation_images(input_shape, num_classes, count, seed):
    """The images an export ships as samples: one per class slot, cycling."""
    rng = np.random.default_rng(seed)
    return [
        class_patch_image(input_shape, i % num_classes, num_classes, rng) for i in range(count)
    ]


def train(model, seed, epochs=4, per_class=8, lr=0.05):
    """A few epochs of SGD on the procedural patches; deterministic on CPU."""
    rng = np.random.default_rng(seed)
    images = []
    labels = []
    for class_index in range(model.num_classes):
        for _ in range(per_class):
            images.append(class_patch_image(model.input_shape, class_index, model.num_classes, rng))
            labels.append(class_index)
    batch = [torch.from_numpy(img) for img in images]
    targets = torch.tensor(labels)

    params = list(model.frontend.parameters()) + list(model.head.parameters())
    optimizer = torch.optim.SGD(params, lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    model.frontend.train()
    model.head.train()
    for _ in range(epochs):
        optimizer.zero_grad()
        logits = torch.stack([model.forward(x)[1] for x in batch])
        loss = loss_fn(logits, targets)
        loss.backward()
        optimizer.step()
    model.frontend.eval()
    model.head.eval()
    return float(loss.detach())
