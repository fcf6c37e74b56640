"""Regenerates the checked-in test media under crates/core/tests/data.

Uses the public-domain sample photographs bundled with scikit-image.
"""
import os

import numpy as np
import skimage.data
import skimage.io
import skimage.transform

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "tests", "data")


def clip(image, center, half, size, frames, amp_deg, amp_px):
    cy, cx = center
    out = []
    for i in range(frames):
        phase = 2 * np.pi * i / frames
        angle = np.deg2rad(amp_deg * np.sin(phase))
        dx = amp_px * np.sin(phase + 1.0)
        dy = 0.6 * amp_px * np.cos(phase)
        scale = 1.0 + 0.03 * np.sin(2 * phase)
        tf = (
            skimage.transform.SimilarityTransform(translation=(-cx, -cy))
            + skimage.transform.SimilarityTransform(rotation=angle, scale=scale)
            + skimage.transform.SimilarityTransform(translation=(half + dx, half + dy))
        )
        warped = skimage.transform.warp(
            image, tf.inverse, output_shape=(2 * half, 2 * half), mode="edge"
        )
        small = skimage.transform.resize(warped, (size, size), anti_aliasing=True)
        out.append((np.clip(small, 0, 1) * 255).round().astype(np.uint8))
    return out


def write_clip(name, frames):
    d = os.path.join(OUT, "clips", name)
    os.makedirs(d, exist_ok=True)
    for i, f in enumerate(frames):
        skimage.io.imsave(os.path.join(d, f"frame_{i:05d}.png"), f, check_contrast=False)


def main():
    os.makedirs(OUT, exist_ok=True)
    astronaut = skimage.data.astronaut()
    skimage.io.imsave(os.path.join(OUT, "natural_512.png"), astronaut, check_contrast=False)
    write_clip("portrait_a", clip(astronaut, (140, 220), 120, 64, 16, 6.0, 10.0))
    write_clip("portrait_b", clip(skimage.data.chelsea(), (150, 230), 130, 64, 16, 5.0, 8.0))
    with open(os.path.join(OUT, "clips", "manifest.tsv"), "w") as fh:
        fh.write("portrait_a\tportrait_a\t16\n")
        fh.write("portrait_b\tportrait_b\t16\n")


if __name__ == "__main__":
    main()
