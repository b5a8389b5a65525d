"""Export orchestration: build a preset, record its tensors, write files.

An export directory holds one model container, one sample container per
sample plus its recorded activation and gradient tensors, and a
``manifest.json`` tying everything together with SHA-256 checksums, the
framework version, and the seed.  Exports are deterministic: the same
preset/seed/train flags reproduce every byte.
"""

import hashlib
import json
import os

import numpy as np
import torch

from . import neutral, presets, procedural

MANIFEST_NAME = "manifest.json"
DEFAULT_SAMPLES = 4


class ManifestError(ValueError):
    """A manifest whose files are missing or fail their checksums."""


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def record_sample(model, image):
    """Run one image through the model, recording every cross-check tensor.

    Returns (target_class, logits, activations, activation_gradients) where
    the gradient is of the target logit with respect to the activation
    stack, taken with autograd.
    """
    x = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32))
    activations = model.frontend(x)
    activations.retain_grad()
    logits = model.head(activations)
    target = int(torch.argmax(logits).item())
    logits[target].backward()
    return (
        target,
        logits.detach().numpy().astype(np.float32),
        activations.detach().numpy().astype(np.float32),
        activations.grad.numpy().astype(np.float32),
    )


def export_sample(model, image, out_dir, stem):
    """Write one sample container plus its recorded tensors; returns its
    manifest record."""
    target, logits, activations, gradients = record_sample(model, image)
    sample_file = f"{stem}.camkit"
    activations_file = f"{stem}.activations.camkit"
    gradients_file = f"{stem}.gradients.camkit"
    neutral.write_sample(os.path.join(out_dir, sample_file), image, target, ref_logits=logits)
    neutral.write_tensors(os.path.join(out_dir, activations_file), {"activations": activations})
    neutral.write_tensors(os.path.join(out_dir, gradients_file), {"gradients": gradients})
    return {
        "sample_file": sample_file,
        "activations_file": activations_file,
        "gradients_file": gradients_file,
        "target_class": target,
        "logits": [float(v) for v in logits],
    }


def export_model(preset, seed, train=False, out_dir=".", num_samples=DEFAULT_SAMPLES):
    """Build, optionally train, and export one preset; returns the manifest."""
    if preset not in presets.PRESETS:
        raise ValueError(f"unknown preset {preset!r}, expected one of {presets.PRESETS}")
    if num_samples < 1:
        raise ValueError(f"need at least one sample, got {num_samples}")
    os.makedirs(out_dir, exist_ok=True)

    model = presets.build_preset(preset, seed)
    final_loss = None
    if train:
        final_loss = procedural.train(model, seed)
    model.frontend.eval()
    model.head.eval()

    layers, split = presets.layer_records(model)
    model_file = "model.camkit"
    neutral.write_model(
        os.path.join(out_dir, model_file),
        input_shape=model.input_shape,
        split=split,
        num_classes=model.num_classes,
        layers=layers,
    )

    images = procedural.evaluation_images(model.input_shape, model.num_classes, num_samples, seed + 1)
    samples = [
        export_sample(model, image, out_dir, f"sample{i}") for i, image in enumerate(images)
    ]

    produced = [model_file]
    for record in samples:
        produced += [record["sample_file"], record["activations_file"], record["gradients_file"]]
    manifest = {
        "format": "camkit-export-manifest v1",
        "preset": preset,
        "seed": seed,
        "trained": train,
        "final_training_loss": final_loss,
        "framework": {"name": "torch", "version": torch.__version__},
        "files": {name: _sha256(os.path.join(out_dir, name)) for name in produced},
        "samples": samples,
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="ascii") as f:
        json.dump(manifest, f, sort_keys=True, indent=2)
        f.write("\n")
    verify_manifest(out_dir)
    return manifest


def load_manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST_NAME), "r", encoding="ascii") as f:
        return json.load(f)


def verify_manifest(out_dir):
    """Check the manifest invariant: every referenced file exists and its
    checksum matches.  Returns the manifest on success."""
    manifest = load_manifest(out_dir)
    for name, checksum in manifest["files"].items():
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            raise ManifestError(f"{out_dir}: manifest references missing file {name!r}")
        actual = _sha256(path)
        if actual != checksum:
            raise ManifestError(
                f"{out_dir}: checksum mismatch for {name!r}: manifest {checksum[:12]}…, file {actual[:12]}…"
            )
    for record in manifest["samples"]:
        for key in ("sample_file", "activations_file", "gradients_file"):
            if record[key] not in manifest["files"]:
                raise ManifestError(f"{out_dir}: sample file {record[key]!r} missing from checksum table")
    return manifest
