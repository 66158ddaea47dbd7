#!/usr/bin/env python3
"""Regenerate the reference models under tests/data/onnx.

Each case directory holds model.onnx, input.bin, expected.bin (float32,
little-endian, row-major) and meta.json with the tensor dims. Expected outputs
come from onnxruntime, so the C++ interpreter is checked against an
independent implementation.

Needs torch, onnx and onnxruntime; only run when the fixtures change.
"""

import argparse
import json
import pathlib

import numpy as np
import onnx
import onnxruntime as ort
import torch
from torch import nn


class UNet2d(nn.Module):
    def __init__(self, w=4):
        super().__init__()
        self.enc = nn.Sequential(nn.Conv2d(1, w, 3, padding=1), nn.BatchNorm2d(w), nn.ReLU())
        self.pool = nn.MaxPool2d(2)
        self.mid = nn.Sequential(nn.Conv2d(w, 2 * w, 3, padding=1), nn.BatchNorm2d(2 * w), nn.ReLU())
        self.up = nn.ConvTranspose2d(2 * w, w, 2, stride=2)
        self.dec = nn.Sequential(nn.Conv2d(2 * w, w, 3, padding=1), nn.ReLU(), nn.Conv2d(w, 1, 1))

    def forward(self, x):
        e = self.enc(x)
        m = self.mid(self.pool(e))
        return torch.sigmoid(self.dec(torch.cat([e, self.up(m)], dim=1)))


class UNet3d(nn.Module):
    def __init__(self, w=3):
        super().__init__()
        self.enc = nn.Sequential(nn.Conv3d(1, w, 3, padding=1), nn.InstanceNorm3d(w, affine=True), nn.LeakyReLU())
        self.pool = nn.MaxPool3d(2)
        self.mid = nn.Sequential(nn.Conv3d(w, w, 3, padding=1), nn.LeakyReLU(0.1))
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.dec = nn.Conv3d(2 * w, 1, 3, padding=1)

    def forward(self, x):
        e = self.enc(x)
        m = self.up(self.mid(self.pool(e)))
        return torch.sigmoid(self.dec(torch.cat([e, m], dim=1)))


class Mixed2d(nn.Module):
    """Less common attributes: dilation, groups, stride, ceil pooling, bilinear resize."""

    def __init__(self):
        super().__init__()
        self.a = nn.Conv2d(1, 4, 3, padding=2, dilation=2)
        self.act = nn.PReLU(4)
        self.g = nn.Conv2d(4, 4, 3, padding=1, groups=2, stride=2)
        self.pool = nn.MaxPool2d(3, stride=2, padding=1, ceil_mode=True)
        self.t = nn.ConvTranspose2d(4, 2, 3, stride=2, padding=1, output_padding=1)
        self.out = nn.Conv2d(2, 1, 1)

    def forward(self, x):
        h = self.act(self.a(x))
        h = torch.tanh(self.g(h))
        h = self.pool(h)
        h = nn.functional.interpolate(h, scale_factor=2.0, mode="bilinear", align_corners=False)
        h = torch.clamp(self.t(h) * 0.5 - 0.1, -1.0, 1.0) / 2.0
        return torch.sigmoid(self.out(h))


CASES = {
    "unet2d": (UNet2d, (1, 1, 24, 20)),
    "unet3d": (UNet3d, (1, 1, 12, 10, 8)),
    "mixed2d": (Mixed2d, (1, 1, 17, 23)),
}


def randomize_norm_stats(model, gen):
    for m in model.modules():
        if isinstance(m, nn.BatchNorm2d):
            m.running_mean.copy_(torch.randn(m.num_features, generator=gen) * 0.1)
            m.running_var.copy_(torch.rand(m.num_features, generator=gen) + 0.5)


def export(name, out_dir, seed):
    cls, shape = CASES[name]
    gen = torch.Generator().manual_seed(seed)
    torch.manual_seed(seed)
    model = cls().eval()
    with torch.no_grad():
        randomize_norm_stats(model, gen)
    x = torch.rand(shape, generator=gen)
    spatial = {i: f"s{i}" for i in range(2, len(shape))}
    case = out_dir / name
    case.mkdir(parents=True, exist_ok=True)
    path = case / "model.onnx"
    torch.onnx.export(model, (x,), str(path), input_names=["image"], output_names=["prob"],
                      dynamic_axes={"image": spatial, "prob": spatial}, opset_version=17, dynamo=False)
    onnx.checker.check_model(onnx.load(str(path)))
    sess = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
    xs = x.numpy().astype(np.float32)
    y = sess.run(None, {"image": xs})[0].astype(np.float32)
    xs.astype("<f4").tofile(case / "input.bin")
    y.astype("<f4").tofile(case / "expected.bin")
    (case / "meta.json").write_text(json.dumps({"input_dims": list(xs.shape), "output_dims": list(y.shape)}) + "\n")
    ops = sorted({n.op_type for n in onnx.load(str(path)).graph.node})
    print(f"{name}: {xs.shape} -> {y.shape} ops={','.join(ops)}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "tests/data/onnx")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    for name in CASES:
        export(name, args.out, args.seed)


if __name__ == "__main__":
    main()
