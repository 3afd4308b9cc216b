#!/usr/bin/env python3
"""Export a Keras application backbone to the skinbench weight format (.sbw).

Only sequential graphs are supported: MobileNet, VGG16 and VGG19. The output
file goes to <out-dir>/<id>.sbw, where skinbench looks for genuine weights
(see SKINBENCH_WEIGHTS_DIR).

    python3 tools/export_keras_backbone.py MobileNet --out-dir ~/.cache/skinbench/weights
    python3 tools/export_keras_backbone.py VGG16 --weights none   # architecture only

VGG expects caffe-style input (BGR, mean-subtracted, 0..255). That transform is
folded into the first convolution so the exported net takes [0, 1] RGB input;
the fold is exact except for the one-pixel zero-padded border.
"""

import argparse
import json
import os
import struct
import sys

import numpy as np

FNV_OFFSET = 1469598103934665603
FNV_PRIME = 1099511628211
CAFFE_MEAN_BGR = np.array([103.939, 116.779, 123.68], dtype=np.float64)
SOURCE = "imagenet (keras-applications export, include_top=False)"


def fnv1a_hex(tensors):
    h = FNV_OFFSET
    mask = (1 << 64) - 1
    for t in tensors:
        for b in t.astype("<f4").tobytes():
            h = ((h ^ b) * FNV_PRIME) & mask
    return "%016x" % h


def sanitize(model_id):
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in model_id)


def build(model_id, weights):
    from tensorflow import keras

    apps = {
        "MobileNet": keras.applications.MobileNet,
        "VGG16": keras.applications.VGG16,
        "VGG19": keras.applications.VGG19,
    }
    if model_id not in apps:
        sys.exit("unsupported backbone %r (sequential exports: %s)" % (model_id, ", ".join(apps)))
    return apps[model_id](include_top=False, weights=weights, pooling="avg", input_shape=(224, 224, 3))


def padding_of(layer):
    return "same" if layer.padding == "same" else "valid"


def square(pair, what, name):
    if pair[0] != pair[1]:
        sys.exit("layer %s has a non-square %s %r" % (name, what, pair))
    return int(pair[0])


def convert(model):
    """Returns (layers, tensors) in the order the C++ loader consumes them."""
    layers, tensors = [], []
    for layer in model.layers:
        kind = type(layer).__name__
        name = layer.name
        if kind in ("InputLayer", "Dropout", "Reshape"):
            continue
        if kind == "Conv2D":
            kernel, *bias = layer.get_weights()
            layers.append({
                "kind": "conv2d", "filters": int(layer.filters), "use_bias": bool(layer.use_bias),
                "kernel": square(layer.kernel_size, "kernel", name),
                "stride": square(layer.strides, "stride", name), "padding": padding_of(layer),
            })
            tensors.append(kernel.astype(np.float32).reshape(-1))
            if layer.use_bias:
                tensors.append(bias[0].astype(np.float32))
            act = layer.activation.__name__
            if act == "relu":
                layers.append({"kind": "relu"})
            elif act != "linear":
                sys.exit("layer %s uses unsupported activation %s" % (name, act))
        elif kind == "DepthwiseConv2D":
            kernel, *bias = layer.get_weights()
            if kernel.shape[3] != 1:
                sys.exit("layer %s has depth_multiplier != 1" % name)
            layers.append({
                "kind": "depthwise_conv2d", "use_bias": bool(layer.use_bias),
                "kernel": square(layer.kernel_size, "kernel", name),
                "stride": square(layer.strides, "stride", name), "padding": padding_of(layer),
            })
            tensors.append(kernel.astype(np.float32).reshape(-1))
            if layer.use_bias:
                tensors.append(bias[0].astype(np.float32))
        elif kind == "BatchNormalization":
            params = iter(layer.get_weights())
            channels = layer.get_weights()[-1].shape[0]
            gamma = next(params) if layer.scale else np.ones(channels)
            beta = next(params) if layer.center else np.zeros(channels)
            mean, var = next(params), next(params)
            scale = gamma / np.sqrt(var + layer.epsilon)
            layers.append({"kind": "affine"})
            tensors.append(scale.astype(np.float32))
            tensors.append((beta - mean * scale).astype(np.float32))
        elif kind == "ReLU":
            cap = layer.max_value
            cap = None if cap is None else float(np.asarray(cap))
            if cap is None:
                layers.append({"kind": "relu"})
            elif cap == 6.0:
                layers.append({"kind": "relu6"})
            else:
                sys.exit("layer %s has unsupported max_value %r" % (name, cap))
        elif kind == "Activation":
            if layer.activation.__name__ != "relu":
                sys.exit("layer %s uses unsupported activation" % name)
            layers.append({"kind": "relu"})
        elif kind == "ZeroPadding2D":
            (top, bottom), (left, right) = layer.padding
            layers.append({"kind": "zero_pad2d", "pad": [int(top), int(bottom), int(left), int(right)]})
        elif kind == "MaxPooling2D":
            size = square(layer.pool_size, "pool", name)
            if square(layer.strides, "stride", name) != size:
                sys.exit("layer %s pools with stride != size" % name)
            layers.append({"kind": "max_pool2d", "kernel": size, "stride": size, "padding": padding_of(layer)})
        elif kind == "GlobalAveragePooling2D":
            layers.append({"kind": "global_avg_pool"})
        else:
            sys.exit("layer %s of type %s cannot be exported" % (name, kind))
    return layers, tensors


def fold_caffe_input(layers, tensors):
    """First conv consumes [0,1] RGB instead of 0..255 mean-subtracted BGR."""
    first = layers[0]
    if first["kind"] != "conv2d" or not first["use_bias"]:
        sys.exit("caffe-style fold needs a biased first convolution")
    k = first["kernel"]
    w = tensors[0].reshape(k, k, 3, first["filters"]).astype(np.float64)
    bias = tensors[1].astype(np.float64)
    # x_bgr = 255 * u_rgb[::-1] - mean  =>  W'[..., c_rgb, :] = 255 * W[..., 2 - c_rgb, :]
    bias = bias - np.einsum("hwco,c->o", w, CAFFE_MEAN_BGR)
    w_rgb = 255.0 * w[:, :, ::-1, :]
    tensors[0] = w_rgb.astype(np.float32).reshape(-1)
    tensors[1] = bias.astype(np.float32)


def write_sbw(path, model_id, value_range, layers, tensors, source):
    header = {
        "format": "skinbench-backbone",
        "id": model_id,
        "input": {"height": 224, "width": 224, "channels": 3, "value_range": value_range},
        "weights_source": source,
        "layers": layers,
        "param_sizes": [int(t.size) for t in tensors],
        "payload_fnv1a": fnv1a_hex(tensors),
    }
    text = json.dumps(header, separators=(",", ":")).encode()
    with open(path, "wb") as out:
        out.write(b"SKBW")
        out.write(bytes([1]))
        out.write(struct.pack("<Q", len(text)))
        out.write(text)
        for t in tensors:
            out.write(t.astype("<f4").tobytes())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("backbone", help="MobileNet, VGG16 or VGG19")
    parser.add_argument("--weights", default="imagenet",
                        help="'imagenet' (download), 'none' (architecture only) or a local .h5 path")
    parser.add_argument("--out-dir", default=os.environ.get(
        "SKINBENCH_WEIGHTS_DIR", os.path.join(os.path.expanduser("~"), ".cache", "skinbench", "weights")))
    args = parser.parse_args(argv)

    weights = None if args.weights.lower() == "none" else args.weights
    model = build(args.backbone, weights)
    layers, tensors = convert(model)
    if args.backbone.startswith("VGG"):
        fold_caffe_input(layers, tensors)
        value_range = "unit"
    else:
        value_range = "symmetric"
    source = SOURCE if weights == "imagenet" else ("untrained (architecture only)" if weights is None else weights)

    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, sanitize(args.backbone) + ".sbw")
    write_sbw(path, args.backbone, value_range, layers, tensors, source)
    count = sum(int(t.size) for t in tensors)
    print("%s: %d layers, %d parameters -> %s (%d bytes)" % (args.backbone, len(layers), count, path,
                                                             os.path.getsize(path)))


if __name__ == "__main__":
    main()
