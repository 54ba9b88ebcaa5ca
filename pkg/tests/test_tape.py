import numpy as np
import pytest

from branchsig.models import tape
from branchsig.models.tape import Var


def numeric_grad(fn, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (fn(xp) - fn(xm)) / (2 * h)
    return g


CASES = {
    "broadcast_mul": lambda a: tape.total(tape.mul(a, Var(np.arange(3.0))[None][0:1] + 1.0)),
    "matmul_tanh": lambda a: tape.mean(tape.tanh(a @ np.ones((3, 2)) * 0.3)),
    "cumsum_square": lambda a: tape.total(tape.square(tape.cumsum(a, axis=0))),
    "slice_concat": lambda a: tape.total(tape.concat([a[1:], a[:1] * 2.0], axis=0) * a),
    "reshape_swap": lambda a: tape.total(tape.swapaxes(tape.reshape(a, (2, 3, 1)) * tape.reshape(a, (2, 1, 3)), 1, 2)
                                         * np.arange(18.0).reshape(2, 3, 3)),
    "prepend_sub": lambda a: tape.total(tape.square(tape.prepend_zero(a) - 1.0)),
    "rsub_neg": lambda a: tape.total(1.0 - (-a)),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_gradients_match_finite_differences(name):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3))
    fn = CASES[name]
    v = Var(x)
    out = fn(v)
    out.backward()
    num = numeric_grad(lambda z: float(fn(Var(z)).value), x)
    np.testing.assert_allclose(v.grad, num, rtol=1e-6, atol=1e-8)


def test_shared_node_accumulates():
    v = Var(np.array([2.0]))
    y = v * v + v
    tape.total(y).backward()
    assert v.grad[0] == pytest.approx(5.0)


def test_backward_requires_scalar():
    with pytest.raises(ValueError):
        Var(np.ones(3)).backward()
