"""Writes the sample corpus used by the tests: 256x256 grayscale P5 PGMs
derived from the images bundled with scikit-image."""
import pathlib
import sys

import numpy as np
from skimage import color, data, transform


def gray256(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3])
    else:
        img = img.astype(np.float64) / 255.0
    h, w = img.shape
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    img = img[top:top + side, left:left + side]
    img = transform.resize(img, (256, 256), anti_aliasing=True)
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    h, w = img.shape
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + img.tobytes())


def main(root):
    root = pathlib.Path(root)
    train = {"astronaut": data.astronaut, "coffee": data.coffee, "chelsea": data.chelsea,
             "rocket": data.rocket, "coins": data.coins}
    test = {"camera": data.camera}
    for sub, images in (("train", train), ("test", test)):
        (root / sub).mkdir(parents=True, exist_ok=True)
        for name, load in images.items():
            write_pgm(root / sub / f"{name}.pgm", gray256(load()))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
