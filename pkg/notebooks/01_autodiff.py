# Autodiff engine tour: build a graph, backprop, check against finite differences.
import numpy as np

from misa import tensor as T
from misa.gradcheck import grad_check
from misa.tensor import Tensor

rng = np.random.default_rng(0)

# %% a tiny graph
w = Tensor(np.array([0.5, -1.0, 2.0]), requires_grad=True)
x = Tensor(np.array([3.0, 4.0, -5.0]))
loss = (w * x).sum()
loss.backward()
print("d(w.x)/dw =", w.grad)  # equals x

# %% every node the loss depends on gets a gradient
a = Tensor(rng.normal(size=(2, 2)), requires_grad=True)
out = (T.tanh(a @ a) * 3.0).sum()
out.backward()
for node in T.topological_order(out):
    print(f"{node.op or 'leaf':>10s}  shape {node.shape}  grad? {node.grad is not None}")

# %% gradients accumulate until zeroed
w.zero_grad()
loss.backward()
loss.backward()
print("after two backward calls:", w.grad)

# %% finite-difference check of a 3-layer net (float64, central differences)
w1 = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
w2 = Tensor(rng.normal(size=(5, 3)), requires_grad=True)
w3 = Tensor(rng.normal(size=(3, 1)), requires_grad=True)
xs = Tensor(rng.normal(size=(6, 4)))


def net():
    h = T.tanh(xs @ w1)
    h = T.sigmoid(h @ w2)
    return T.frobenius_sq(h @ w3)


print(grad_check(net, {"w1": w1, "w2": w2, "w3": w3}))

# %% softmax stays finite on huge logits
print(T.softmax(Tensor([1000.0, 1000.0, 999.0])).data)
