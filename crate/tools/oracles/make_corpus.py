"""Build the desk-scale photo corpus from sample images bundled with
scikit-image, scikit-learn and matplotlib.

Writes 256x256 PNG crops into data/corpus/eval and data/corpus/train.
Train and eval crops come from disjoint regions of each source photo.
"""
import os
import sys

import matplotlib
import skimage
import sklearn
from PIL import Image

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
SK = os.path.join(os.path.dirname(skimage.__file__), "data")
SKL = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images")
MPL = os.path.join(matplotlib.get_data_path(), "sample_data")

# name -> (path, downscale, eval boxes, train boxes); boxes are (x, y) of 256x256 crops
SOURCES = {
    "astronaut": (f"{SK}/astronaut.png", 1, [(0, 0), (256, 256)], [(256, 0)]),
    "brick": (f"{SK}/brick.png", 1, [(0, 0)], [(256, 256)]),
    "camera": (f"{SK}/camera.png", 1, [(128, 0), (256, 256)], [(0, 256)]),
    "chelsea": (f"{SK}/chelsea.png", 1, [(100, 20)], []),
    "coffee": (f"{SK}/coffee.png", 1, [(0, 0), (300, 0)], []),
    "coins": (f"{SK}/coins.png", 1, [(0, 0)], []),
    "grass": (f"{SK}/grass.png", 1, [(0, 0)], [(256, 256)]),
    "gravel": (f"{SK}/gravel.png", 1, [(0, 0)], [(256, 256)]),
    "ihc": (f"{SK}/ihc.png", 1, [(0, 0)], [(256, 256)]),
    "moon": (f"{SK}/moon.png", 1, [(0, 0)], [(256, 256)]),
    "motorcycle": (f"{SK}/motorcycle_left.png", 1, [(0, 0)], [(485, 244)]),
    "hubble": (f"{SK}/hubble_deep_field.jpg", 1, [(0, 0), (600, 0)], [(300, 600)]),
    "retina": (f"{SK}/retina.jpg", 2, [(100, 100), (350, 350)], [(0, 450)]),
    "rocket": (f"{SK}/rocket.jpg", 1, [(0, 0)], [(300, 171)]),
    "cell": (f"{SK}/cell.png", 1, [(0, 0)], [(256, 400)]),
    "china": (f"{SKL}/china.jpg", 1, [(0, 0)], [(320, 171)]),
    "flower": (f"{SKL}/flower.jpg", 1, [(0, 0)], [(320, 171)]),
    "grace_hopper": (f"{MPL}/grace_hopper.jpg", 1, [(0, 0), (256, 300)], [(0, 300)]),
}


def load(path, downscale):
    im = Image.open(path)
    if im.mode not in ("L", "RGB"):
        im = im.convert("RGB")
    if downscale > 1:
        im = im.reduce(downscale)
    return im


def main():
    n_eval = n_train = 0
    for name, (path, down, evals, trains) in SOURCES.items():
        im = load(path, down)
        for split, boxes in (("eval", evals), ("train", trains)):
            for k, (x, y) in enumerate(boxes):
                if x + 256 > im.width or y + 256 > im.height:
                    sys.exit(f"{name}: crop {x},{y} outside {im.size}")
                crop = im.crop((x, y, x + 256, y + 256))
                out = os.path.join(ROOT, "data", "corpus", split, f"{name}_{k}.png")
                crop.save(out, optimize=True)
                if split == "eval":
                    n_eval += 1
                else:
                    n_train += 1
    print(f"eval={n_eval} train={n_train}")


if __name__ == "__main__":
    main()
