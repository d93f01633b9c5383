"""Hostile requests produce crash frames, and the process keeps serving."""

import json
import os
import select
import subprocess
import sys

import pytest

ADAPTER = [sys.executable, "-m", "fwadapter", "--framework", "torch"]

RELU_MODEL = {
    "version": 1,
    "vertex_count": 2,
    "input_shape": [1, 1, 2, 2],
    "edges": [{"from": 0, "to": 1, "op": "ReLU", "params": {}}],
}
GOOD_INPUT = {"shape": [1, 1, 2, 2], "data": [-1.0, 0.0, 2.0, -3.0]}


@pytest.fixture
def adapter():
    proc = subprocess.Popen(ADAPTER, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0)

    def send(obj):
        proc.stdin.write((json.dumps(obj) + "\n").encode())
        proc.stdin.flush()

    def recv(timeout=30.0):
        buf = bytearray()
        fd = proc.stdout.fileno()
        while b"\n" not in buf:
            ready, _, _ = select.select([fd], [], [], timeout)
            assert ready, "adapter did not reply"
            chunk = os.read(fd, 65536)
            assert chunk, "adapter closed stdout"
            buf.extend(chunk)
        return json.loads(bytes(buf).split(b"\n", 1)[0])

    send({"type": "hello", "version": 1})
    assert recv()["type"] == "hello_ack"
    yield send, recv
    if proc.poll() is None:
        send({"type": "shutdown"})
        proc.wait(timeout=10)
    proc.stdin.close()
    proc.stdout.close()


def assert_still_serving(send, recv):
    send({"type": "execute", "model": RELU_MODEL, "input": GOOD_INPUT, "param_seed": 3})
    reply = recv()
    assert reply["type"] == "result"
    assert reply["output"]["data"] == [0.0, 0.0, 2.0, 0.0]


class TestCrashContainment:
    def test_shape_hostile_input(self, adapter):
        send, recv = adapter
        send({
            "type": "execute",
            "model": RELU_MODEL,
            "input": {"shape": [1, 1, 3, 3], "data": [0.0] * 9},
            "param_seed": 1,
        })
        reply = recv()
        assert reply["type"] == "crash"
        assert reply["phase"] == "build"
        assert_still_serving(send, recv)

    def test_data_length_mismatch(self, adapter):
        send, recv = adapter
        send({
            "type": "execute",
            "model": RELU_MODEL,
            "input": {"shape": [1, 1, 2, 2], "data": [1.0, 2.0]},
            "param_seed": 1,
        })
        assert recv()["type"] == "crash"
        assert_still_serving(send, recv)

    def test_malformed_model_object(self, adapter):
        send, recv = adapter
        send({"type": "execute", "model": {"version": 9}, "input": GOOD_INPUT, "param_seed": 1})
        reply = recv()
        assert reply["type"] == "crash"
        assert reply["phase"] == "build"
        assert_still_serving(send, recv)

    def test_dangling_edge_reference(self, adapter):
        send, recv = adapter
        bad = {
            "version": 1,
            "vertex_count": 4,
            "input_shape": [1, 1, 2, 2],
            "edges": [{"from": 2, "to": 3, "op": "ReLU", "params": {}}],
        }
        send({"type": "execute", "model": bad, "input": GOOD_INPUT, "param_seed": 1})
        reply = recv()
        assert reply["type"] == "crash"
        assert_still_serving(send, recv)

    def test_unsupported_operator_message_format(self, adapter):
        send, recv = adapter
        bad = {
            "version": 1,
            "vertex_count": 2,
            "input_shape": [1, 1, 2, 2],
            "edges": [{"from": 0, "to": 1, "op": "FlashAttention", "params": {}}],
        }
        send({"type": "execute", "model": bad, "input": GOOD_INPUT, "param_seed": 1})
        reply = recv()
        assert reply["type"] == "crash"
        assert reply["message"] == "unsupported-operator:FlashAttention"
        assert_still_serving(send, recv)

    def test_nonfinite_tokens_round_trip(self, adapter):
        send, recv = adapter
        send({
            "type": "execute",
            "model": {
                "version": 1,
                "vertex_count": 2,
                "input_shape": [1, 1, 2, 2],
                "edges": [{"from": 0, "to": 1, "op": "Identity", "params": {}}],
            },
            "input": {"shape": [1, 1, 2, 2], "data": ["NaN", "Inf", "-Inf", 1.0]},
            "param_seed": 1,
        })
        reply = recv()
        assert reply["type"] == "result"
        assert reply["output"]["data"] == ["NaN", "Inf", "-Inf", 1.0]
