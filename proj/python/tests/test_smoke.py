import math

import numpy as np
import pytest

import _lyapnet as ln


@pytest.fixture(scope="module")
def chain2():
    return ln.make_chain(2, coupling=0.1)


def test_chain_field(chain2):
    sys, _ = chain2
    f = sys.field(np.array([1.0, 1.0]))
    assert f == pytest.approx([-0.9, -0.9])


def test_small_gain_verdicts(chain2):
    _, iss = chain2
    cert = ln.check_small_gain(iss)
    assert cert.passed
    assert cert.min_margin > 0.0
    assert cert.to_dict()["verdict"] == "pass_on_grid"


def test_composed_reference_matches_closed_form(chain2):
    sys, iss = chain2
    box = ln.Box.centered(2, 1.0)
    ref = ln.normalize_to_w1(ln.compose_lyapunov(iss), box, 4096, 0)
    # Normalized chain reference is sum z_i^4 / 4 on the unit box.
    for x in ([0.5, -0.5], [1.0, 0.0], [0.3, 0.8]):
        expect = sum(v**4 / 4.0 for v in x)
        assert ref.value(np.array(x)) == pytest.approx(expect, abs=1e-8)


def test_network_forward_and_grad():
    net = ln.SublayerNet([1, 1], 4, ln.ActivationKind.Tanh, seed=3)
    x = np.array([0.2, -0.4])
    w = net.forward(x)
    g = net.grad_x(x)
    h = 1e-6
    fd = (net.forward(x + [h, 0.0]) - net.forward(x - [h, 0.0])) / (2 * h)
    assert g[0] == pytest.approx(fd, abs=1e-6)
    assert math.isfinite(w)


def test_train_and_verify(chain2):
    sys, _ = chain2
    net = ln.SublayerNet([1, 1], 8, ln.ActivationKind.Softplus, seed=0)
    cfg = ln.TrainingConfig()
    cfg.steps = 200
    cfg.batch = 64
    cfg.lr0 = 1e-2
    report = ln.train(net, sys, cfg)
    assert not report.aborted
    assert report.curve[-1][0] < report.curve[0][0]

    verdict = ln.verify_network_pointwise(
        net, sys, ln.Box.centered(2, 1.0), samples=500, seed=1
    )
    assert verdict.samples == 500
    assert 0.0 <= verdict.violation_rate <= 1.0


def test_fit_to_reference(chain2):
    sys, iss = chain2
    box = ln.Box.centered(2, 1.0)
    ref = ln.normalize_to_w1(ln.compose_lyapunov(iss), box, 4096, 0)
    net = ln.SublayerNet([1, 1], 8, ln.ActivationKind.Tanh, seed=1)
    cfg = ln.FitConfig()
    cfg.steps = 500
    report = ln.fit_to_reference(net, ref, box, cfg)
    assert report.sup_error < 0.2


def test_rk4(chain2):
    sys, _ = chain2
    traj = ln.integrate_rk4(sys, np.array([1.0, 0.0]), 1.0, 1e-3)
    assert traj.times[-1] == pytest.approx(1.0)
    assert not traj.diverged
    assert np.linalg.norm(traj.final_state) < 1.0


def test_checkpoint_roundtrip(tmp_path):
    net = ln.DenseNet1(3, 5, ln.ActivationKind.Softplus, seed=9)
    path = str(tmp_path / "ckpt.bin")
    ln.save_checkpoint(net, path)
    back = ln.load_checkpoint(path)
    x = np.array([0.1, -0.2, 0.3])
    assert back.forward(x) == net.forward(x)


def test_transform_assignment():
    theta = 0.5
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    sub = ln.SublayerNet([1, 1], 3, ln.ActivationKind.Softplus, seed=4)
    tn = ln.TransformNet(2, 1, 3, ln.ActivationKind.Softplus, seed=5)
    params = tn.params
    per_sub = 3 * 3
    off = 2 * 1 * 2 + 2 * 1  # transform weights + biases
    params[off : off + 2 * per_sub] = sub.params[: 2 * per_sub]
    params[-1] = sub.params[-1]
    tn.params = params
    tn.assign_transform(rot, [1, 1])
    for x in ([0.3, 0.4], [-0.7, 0.1]):
        x = np.array(x)
        assert tn.forward(x) == pytest.approx(sub.forward(rot @ x), abs=1e-12)


def test_power_law():
    fit = ln.fit_power_law([2.0, 4.0, 8.0], [12.0, 48.0, 192.0])
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
