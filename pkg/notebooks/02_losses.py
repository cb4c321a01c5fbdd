# The four loss terms, evaluated by hand on small inputs.
import math

import numpy as np

from misa.config import CmdConfig, LossWeights
from misa.losses import cmd, difference_loss, reconstruction_loss, task_loss, total_loss
from misa.tensor import Tensor

# %% central moment discrepancy
# X = {0, 1} has mean 0.5 and variance 0.25; Y = {0.5, 0.5} has variance 0
x = np.array([[0.0], [1.0]])
y = np.array([[0.5], [0.5]])
print("cmd K=2:", float(cmd(x, y, CmdConfig(K=2)).data))  # 0.25
print("cmd(x, x):", float(cmd(x, x).data))

rng = np.random.default_rng(1)
a, b = rng.uniform(size=(50, 4)), rng.uniform(size=(50, 4)) ** 2
for K in range(1, 6):
    print(f"  K={K}  cmd={float(cmd(a, b, CmdConfig(K=K)).data):.4f}")

# %% difference loss: centered, row-normalized, squared Frobenius norm of H1^T H2
hc = Tensor(np.array([[1.0, 0.0], [-1.0, 0.0]]))
hp = Tensor(np.array([[0.0, 1.0], [0.0, -1.0]]))
print("diff (aligned rows):", float(difference_loss({"l": hc}, {"l": hp}).data))  # 4.0
const = Tensor(np.tile([0.3, -0.2], (2, 1)))
print("diff (constant private):", float(difference_loss({"l": hc}, {"l": const}).data))  # 0.0

# the term grows with batch size: row-normalized random matrices, N x d
for n in (4, 16, 64):
    h1, h2 = Tensor(rng.normal(size=(n, 8))), Tensor(rng.normal(size=(n, 8)))
    print(f"  N={n:3d}  diff={float(difference_loss({'l': h1}, {'l': h2}).data):.2f}")

# %% reconstruction and task losses
u = {m: Tensor(np.array([[1.0, 0, 0, 0]])) for m in "lva"}
zero = {m: Tensor(np.zeros((1, 4))) for m in "lva"}
print("recon:", float(reconstruction_loss(u, zero, 4).data))  # 0.25
print("mse:", float(task_loss(Tensor([[0.5]]), np.array([1.0])).data))  # 0.25
print("ce:", float(task_loss(Tensor([[0.0, 0.0]]), np.array([0]), "classification").data), "ln2 =", math.log(2))

# %% weighted total
parts = {k: Tensor(np.float64(v)) for k, v in zip(("task", "sim", "diff", "recon"), (1, 2, 3, 4))}
print(total_loss(parts, LossWeights(0.5, 0.5, 0.5)).as_dict())  # total 5.5
