import json

import numpy as np
import pytest
import torch

from castsum.model import encode_subtree
from castsum.nn import (
    AdamWConfig,
    CheckpointError,
    GraphError,
    OptimState,
    adamw_step,
    backward,
    grad_check,
    load_checkpoint,
    save_checkpoint,
)
from test_acceptance import grad_check_setup


def f64(*values):
    return torch.tensor(values, dtype=torch.float64, requires_grad=True)


class TestBackward:
    def test_square(self):
        x = f64(1.5)
        assert backward((x * x).sum(), {"x": x})["x"].item() == 3.0

    def test_tanh_at_zero(self):
        x = f64(0.0)
        assert backward(torch.tanh(x).sum(), {"x": x})["x"].item() == 1.0

    def test_non_scalar(self):
        x = f64(1.0, 2.0)
        with pytest.raises(GraphError):
            backward(x * 2, {"x": x})

    def test_unreachable_gets_zero(self):
        x, y = f64(1.0), f64(5.0, 6.0)
        g = backward((x * 3).sum(), {"x": x, "y": y})
        assert torch.equal(g["y"], torch.zeros(2, dtype=torch.float64))

    def test_linearity(self):
        gen = torch.Generator().manual_seed(0)
        for _ in range(20):
            w = torch.randn(4, 3, generator=gen, dtype=torch.float64).requires_grad_()
            a, b = torch.randn(3, generator=gen, dtype=torch.float64), torch.randn(3, generator=gen, dtype=torch.float64)

            def fa():
                return torch.tanh(w @ a).sum()

            def fb():
                return torch.softmax(w @ b, -1).max()

            both = backward(fa() + fb(), {"w": w})["w"]
            apart = backward(fa(), {"w": w})["w"] + backward(fb(), {"w": w})["w"]
            assert torch.allclose(both, apart, atol=1e-14)


class TestAdamW:
    def test_first_step(self):
        p = torch.tensor([1.0], dtype=torch.float64)
        adamw_step({"p": p}, {"p": torch.tensor([0.5], dtype=torch.float64)}, OptimState(), AdamWConfig(lr=0.1, weight_decay=0.01))
        # the hand value leaves out eps in the denominator, worth about 2e-9 here
        assert p.item() == pytest.approx(0.899, abs=1e-8)

    def test_zero_gradient(self):
        p = torch.tensor([0.3, -2.0])
        before = p.clone()
        state = OptimState()
        for _ in range(10):
            adamw_step({"p": p}, {"p": torch.zeros(2)}, state, AdamWConfig(lr=0.1, weight_decay=0.0))
        assert torch.equal(p, before)
        assert state.t == 10

    def test_quadratic(self):
        p = torch.zeros(1, dtype=torch.float64, requires_grad=True)
        state, hyper = OptimState(), AdamWConfig(lr=0.05, weight_decay=0.0)
        for _ in range(500):
            g = backward(((p - 2) ** 2).sum(), {"p": p})
            adamw_step({"p": p}, g, state, hyper)
        assert abs(p.item() - 2) < 0.05

    def test_no_decay_matches_torch_adam(self):
        gen = torch.Generator().manual_seed(3)
        p0 = torch.randn(5, 4, generator=gen)
        grad = torch.randn(5, 4, generator=gen)
        mine = p0.clone()
        adamw_step({"w": mine}, {"w": grad}, OptimState(), AdamWConfig(lr=1e-3, weight_decay=0.0))
        ref = p0.clone().requires_grad_()
        opt = torch.optim.Adam([ref], lr=1e-3, foreach=False)
        ref.grad = grad.clone()
        opt.step()
        assert torch.equal(mine, ref.detach())

    def test_state_shapes(self):
        p = torch.zeros(2, 3)
        state = OptimState()
        adamw_step({"p": p}, {"p": torch.ones(2, 3)}, state, AdamWConfig())
        assert state.m["p"].shape == state.v["p"].shape == (2, 3)
        with pytest.raises(ValueError):
            adamw_step({"p": p}, {"p": torch.ones(3)}, state, AdamWConfig())


class TestGradCheck:
    def test_linear(self):
        # central differences carry no truncation error on a linear loss; what
        # is left is rounding in the loss value, about ulp(|loss|) / eps, so
        # the weights sit at init scale to keep |loss| small
        gen = torch.Generator().manual_seed(0)
        w = (0.01 * torch.randn(50, generator=gen, dtype=torch.float64)).requires_grad_()
        x = torch.randn(50, generator=gen, dtype=torch.float64)
        assert grad_check(lambda: (w * x).sum(), {"w": w}, fraction=1.0) <= 1e-10

    def test_softmax_cross_entropy(self):
        gen = torch.Generator().manual_seed(1)
        W = torch.randn(6, 5, generator=gen, dtype=torch.float64).requires_grad_()
        X = torch.randn(8, 5, generator=gen, dtype=torch.float64)
        y = torch.randint(0, 6, (8,), generator=gen)

        def loss():
            return -torch.log_softmax(X @ W.T, -1)[torch.arange(8), y].mean()

        assert grad_check(loss, {"W": W}) <= 1e-6

    def test_subtree_rvnn(self):
        gen = torch.Generator().manual_seed(2)
        d = 4
        params = {
            "embed": torch.randn(10, d, generator=gen, dtype=torch.float64).requires_grad_(),
            "WC": torch.randn(d, d, generator=gen, dtype=torch.float64).requires_grad_(),
            "WA": torch.randn(d, d, generator=gen, dtype=torch.float64).requires_grad_(),
        }
        target = torch.randn(d, generator=gen, dtype=torch.float64)
        labels, parents = [0, 3, 4, 7, 2, 9], [-1, 0, 1, 1, 0, 4]

        def loss():
            s = encode_subtree(labels, parents, params["embed"], params["WC"], params["WA"])
            return ((s - target) ** 2).sum()

        assert grad_check(loss, params, fraction=1.0) <= 1e-6

    def test_full_loss_loose_bound(self):
        model, batch = grad_check_setup()
        assert grad_check(lambda: model.loss(batch), dict(model.named_parameters())) <= 1e-4

    def test_reports_coordinates(self):
        w = f64(1.0, 2.0, 3.0)
        rows = []
        grad_check(lambda: (w**2).sum(), {"w": w}, report=rows)
        assert len(rows) == 3 and all(r[0] == "w" for r in rows)


class TestCheckpoint:
    def test_round_trip_and_layout(self, tmp_path):
        tensors = {"a": torch.arange(6, dtype=torch.float32).reshape(2, 3), "b": torch.tensor([1.5, -2.0])}
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, tensors, note="x")
        loaded, meta = load_checkpoint(path)
        assert meta["note"] == "x" and meta["version"] == 1
        for k in tensors:
            assert torch.equal(loaded[k], tensors[k])
        raw = path.read_bytes()
        header, payload = raw.split(b"\n", 1)
        manifest = json.loads(header)
        assert [e["offset"] for e in manifest["tensors"]] == [0, 6]
        assert np.frombuffer(payload, dtype="<f4").tolist() == [0, 1, 2, 3, 4, 5, 1.5, -2.0]

    def test_version_error(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(json.dumps({"version": 99, "tensors": []}).encode() + b"\n")
        with pytest.raises(CheckpointError, match="v99"):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, {"a": torch.ones(10)})
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)
