#!/usr/bin/env python3
"""Regenerate the image-format fixtures under tests/data/io.

PNG files are written by Pillow and NIfTI files by nibabel, so the C++
readers are checked against independent writers. values.json records the
expected intensities (row-major, slowest axis first).
"""

import json
import pathlib

import nibabel as nib
import numpy as np
from PIL import Image

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests/data/io"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    expected = {}

    g8 = (np.arange(6 * 5).reshape(6, 5) * 8).astype(np.uint8)
    Image.fromarray(g8, mode="L").save(OUT / "gray8.png")
    expected["gray8.png"] = {"dims": [6, 5], "values": g8.ravel().tolist()}

    g16 = (np.arange(4 * 7).reshape(4, 7) * 2341).astype(np.uint16)
    Image.fromarray(g16).save(OUT / "gray16.png")
    expected["gray16.png"] = {"dims": [4, 7], "values": g16.ravel().tolist()}

    bw = np.zeros((5, 9), dtype=bool)
    bw[1:4, 2:7] = True
    Image.fromarray(bw).convert("1").save(OUT / "mask1bit.png")
    expected["mask1bit.png"] = {"dims": [5, 9], "values": (bw.astype(np.uint8) * 255).ravel().tolist()}

    # Volume indexed [z, y, x]; NIfTI stores x fastest, so hand nibabel [x, y, z].
    vol = (np.arange(3 * 4 * 5).reshape(3, 4, 5) - 20).astype(np.int16)
    img = nib.Nifti1Image(vol.transpose(2, 1, 0), affine=np.diag([0.5, 0.75, 2.0, 1.0]))
    img.header.set_slope_inter(2.0, 1.0)
    img.header.set_zooms((0.5, 0.75, 2.0))
    nib.save(img, OUT / "scaled_int16.nii.gz")
    expected["scaled_int16.nii.gz"] = {"dims": [3, 4, 5], "spacing": [2.0, 0.75, 0.5],
                                       "values": (vol.astype(float) * 2.0 + 1.0).ravel().tolist()}

    fvol = np.linspace(0.0, 1.0, 2 * 3 * 4, dtype=np.float32).reshape(2, 3, 4)
    big = nib.Nifti1Image(fvol.transpose(2, 1, 0), affine=np.eye(4), header=nib.Nifti1Header(endianness=">"))
    nib.save(big, OUT / "bigendian_f32.nii")
    expected["bigendian_f32.nii"] = {"dims": [2, 3, 4], "spacing": [1.0, 1.0, 1.0],
                                     "values": fvol.astype(float).ravel().tolist()}

    (OUT / "values.json").write_text(json.dumps(expected, indent=1) + "\n")
    for name in expected:
        print(name)


if __name__ == "__main__":
    main()
