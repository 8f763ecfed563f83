"""
Reverse-mode gradients and finite-difference checks
===================================================

Build a small graph by hand, back-propagate, and confirm the result
numerically.
"""

# %%
# Tensors record their parents; ``backward`` walks the graph once in
# reverse topological order.
import numpy as np

from tsfp.gradcheck import gradient_check
from tsfp.tensor import Tensor, add, mul, precision, sigmoid, tsum

x = Tensor([0.5, -1.0, 2.0], requires_grad=True)
y = tsum(add(mul(x, x), sigmoid(x)))
y.backward()
print("f(x)     =", y.item())
print("df/dx    =", x.grad)

s = 1 / (1 + np.exp(-x.data))
print("by hand  =", 2 * x.data + s * (1 - s))

# %%
# Leaf gradients accumulate, so a second backward pass doubles them.
y.backward()
print("after 2x =", x.grad)

# %%
# ``gradient_check`` compares the reverse-mode gradient against central
# differences.  It insists on 64-bit inputs.
with precision("float64"):
    z = Tensor(np.random.default_rng(0).standard_normal(10))
    err = gradient_check(lambda t: tsum(sigmoid(t)), [z])
print(f"max relative error: {err:.2e}")
