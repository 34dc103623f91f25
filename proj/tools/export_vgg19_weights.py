#!/usr/bin/env python3
"""Convert torchvision VGG-19 weights into the backbone weights file read by impress.

Usage:
    export_vgg19_weights.py OUT.bin                 # downloads via torchvision
    export_vgg19_weights.py OUT.bin --state vgg19.pth

Only the convolutions up to conv3_4 are written.
"""
import argparse
import struct

import torch

LAYERS = {
    "features.0": "conv1_1",
    "features.2": "conv1_2",
    "features.5": "conv2_1",
    "features.7": "conv2_2",
    "features.10": "conv3_1",
    "features.12": "conv3_2",
    "features.14": "conv3_3",
    "features.16": "conv3_4",
}


def load_state(path):
    if path:
        return torch.load(path, map_location="cpu")
    import torchvision

    model = torchvision.models.vgg19(weights=torchvision.models.VGG19_Weights.IMAGENET1K_V1)
    return model.state_dict()


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("out")
    parser.add_argument("--state", help="torchvision vgg19 state_dict file")
    args = parser.parse_args()

    state = load_state(args.state)
    tensors = []
    for src, dst in LAYERS.items():
        tensors.append((dst + ".weight", state[src + ".weight"]))
        tensors.append((dst + ".bias", state[src + ".bias"]))

    with open(args.out, "wb") as f:
        f.write(b"IMPRESSW")
        f.write(struct.pack("<II", 1, len(tensors)))
        for name, t in tensors:
            t = t.detach().to(torch.float32).contiguous()
            raw = name.encode()
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", t.dim()))
            f.write(struct.pack("<%dq" % t.dim(), *t.shape))
            f.write(t.numpy().astype("<f4").tobytes())
    print("wrote %d tensors to %s" % (len(tensors), args.out))


if __name__ == "__main__":
    main()
