"""Regenerate the bundled PGM test images from scikit-image's sample data.

Run once; the outputs under src/splitgibbs/data/ are committed.
"""
import numpy as np
from skimage import data

from splitgibbs.io import bundled_image_path, write_pgm


def downsample(img, f):
    r, c = img.shape[0] // f * f, img.shape[1] // f * f
    return img[:r, :c].reshape(r // f, f, c // f, f).mean(axis=(1, 3))


def main():
    camera = downsample(data.camera().astype(float), 2)  # 256 x 256
    write_pgm(bundled_image_path("cameraman256.pgm"), camera)
    write_pgm(bundled_image_path("cameraman64.pgm"), camera[40:104, 84:148])
    coins = data.coins().astype(float)
    write_pgm(bundled_image_path("coins64.pgm"), downsample(coins[20:148, 10:138], 2))


if __name__ == "__main__":
    main()
