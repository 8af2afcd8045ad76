"""Freeze reference values for the Rust test suites.

Outputs under crates/core/tests/fixtures/:
  metrics/*.png + metrics.json  10-pair suite scored by fsim_ref.py
  reference_jpeg/*.jpg          libjpeg (via Pillow) output at Q 35/50/75/95
  reference_jpeg.json           libjpeg sizes for the eval corpus + DQT tables
"""
import io
import json
import os

import numpy as np
import skimage
from PIL import Image, ImageFilter

from fsim_ref import fsim, psnr, ssim

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))
EVAL = os.path.join(ROOT, "data", "corpus", "eval")
FIX = os.path.join(ROOT, "crates", "core", "tests", "fixtures")
SK = os.path.join(os.path.dirname(skimage.__file__), "data")


def jpeg_roundtrip(im, quality):
    buf = io.BytesIO()
    im.save(buf, "JPEG", quality=quality)
    buf.seek(0)
    return Image.open(buf).convert(im.mode)


def noisy(im, sigma, seed):
    rng = np.random.default_rng(seed)
    a = np.asarray(im, dtype=np.float64)
    a = np.clip(np.round(a + rng.normal(0, sigma, a.shape)), 0, 255).astype(np.uint8)
    return Image.fromarray(a)


def metrics_suite():
    out = os.path.join(FIX, "metrics")
    os.makedirs(out, exist_ok=True)
    ev = lambda n: Image.open(os.path.join(EVAL, n + ".png"))
    big_astro = Image.open(os.path.join(SK, "astronaut.png")).convert("L")
    big_retina = Image.open(os.path.join(SK, "retina.jpg")).convert("L").reduce(2)
    cases = [
        ("astronaut_q10", ev("astronaut_0"), lambda i: jpeg_roundtrip(i, 10)),
        ("camera_q20", ev("camera_0"), lambda i: jpeg_roundtrip(i, 20)),
        ("coffee_q30", ev("coffee_0"), lambda i: jpeg_roundtrip(i, 30)),
        ("gravel_q50", ev("gravel_0"), lambda i: jpeg_roundtrip(i, 50)),
        ("china_q75", ev("china_0"), lambda i: jpeg_roundtrip(i, 75)),
        ("chelsea_noise5", ev("chelsea_0"), lambda i: noisy(i, 5, 1)),
        ("moon_noise15", ev("moon_0"), lambda i: noisy(i, 15, 2)),
        ("flower_blur", ev("flower_0"), lambda i: i.filter(ImageFilter.BoxBlur(1))),
        ("astronaut512_q40", big_astro, lambda i: jpeg_roundtrip(i, 40)),
        ("retina705_q25", big_retina, lambda i: jpeg_roundtrip(i, 25)),
    ]
    rows = []
    for name, ref, distort in cases:
        dis = distort(ref)
        ref.save(os.path.join(out, f"{name}_ref.png"), optimize=True)
        dis.save(os.path.join(out, f"{name}_dis.png"), optimize=True)
        rows.append(
            {
                "name": name,
                "psnr": psnr(ref, dis),
                "ssim": ssim(ref, dis),
                "fsim": fsim(ref, dis),
            }
        )
        print(rows[-1])
    with open(os.path.join(FIX, "metrics.json"), "w") as f:
        json.dump(rows, f, indent=2)


def reference_jpeg():
    out = os.path.join(FIX, "reference_jpeg")
    os.makedirs(out, exist_ok=True)
    for name in ("astronaut_0", "camera_0"):
        im = Image.open(os.path.join(EVAL, name + ".png"))
        for q in (35, 50, 75, 95):
            im.save(os.path.join(out, f"{name}_q{q}.jpg"), "JPEG", quality=q)
    sizes = {}
    for fname in sorted(os.listdir(EVAL)):
        im = Image.open(os.path.join(EVAL, fname))
        per_q = {}
        for q in (50, 75, 95):
            buf = io.BytesIO()
            im.save(buf, "JPEG", quality=q)
            per_q[str(q)] = buf.tell()
        sizes[fname] = per_q
    probe = Image.open(os.path.join(out, "astronaut_0_q50.jpg"))
    tables = {str(k): list(v) for k, v in probe.quantization.items()}
    with open(os.path.join(FIX, "reference_jpeg.json"), "w") as f:
        json.dump(
            {
                "encoder": "libjpeg-turbo via Pillow, 4:2:0, optimize=False",
                "sizes": sizes,
                "q50_tables_natural": tables,
            },
            f,
            indent=2,
        )


if __name__ == "__main__":
    metrics_suite()
    reference_jpeg()
