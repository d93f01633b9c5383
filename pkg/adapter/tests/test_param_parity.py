"""Bit-compatibility of the regenerated parameter streams.

The vectors were frozen from the engine's native backends; this adapter's
independent generator must reproduce them exactly at float32.
"""

import json
from pathlib import Path

import numpy as np

from fwadapter import generator

VECTORS = json.loads((Path(__file__).parent / "data" / "param_test_vectors.json").read_text())


class TestWordStream:
    def test_generator_words(self):
        for case in VECTORS["words"]:
            got = generator.generator_word(case["seed"], case["from"], case["to"], case["slot"], case["index"])
            assert got == case["word"]

    def test_unit_floats(self):
        for case in VECTORS["unit_floats"]:
            stream = generator.unit_stream(case["seed"], case["from"], case["to"], case["slot"], case["index"] + 1)
            assert float(stream[case["index"]]) == case["value"]


class TestParameterParity:
    def test_conv_kernel_bitwise(self):
        case = VECTORS["conv_weights"][0]
        kernel = generator.conv_kernel(
            case["seed"], case["from"], case["to"], case["out_channels"], case["in_channels"], case["kernel"]
        )
        assert kernel.dtype == np.float32
        expected = np.array(case["values"], dtype=np.float32)
        assert np.array_equal(kernel.reshape(-1).view(np.uint32), expected.view(np.uint32))

    def test_depthwise_kernel_bitwise(self):
        case = VECTORS["depthwise_weights"][0]
        kernel = generator.depthwise_kernel(case["seed"], case["from"], case["to"], case["channels"], case["kernel"])
        expected = np.array(case["values"], dtype=np.float32)
        assert np.array_equal(kernel.reshape(-1).view(np.uint32), expected.view(np.uint32))

    def test_batchnorm_stats_bitwise(self):
        case = VECTORS["batchnorm"][0]
        gamma, beta, mean, var = generator.batchnorm_stats(case["seed"], case["from"], case["to"], case["channels"])
        for got, key in ((gamma, "gamma"), (beta, "beta"), (mean, "mean"), (var, "var")):
            expected = np.array(case[key], dtype=np.float32)
            assert np.array_equal(got.view(np.uint32), expected.view(np.uint32)), key

    def test_prelu_slope(self):
        for case in VECTORS["prelu"]:
            assert float(generator.prelu_slope(case["seed"], case["from"], case["to"])) == case["slope"]
