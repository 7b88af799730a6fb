#!/usr/bin/env python3
"""Reference trace for a scalar Adam parameter; the values are frozen into
tests/test_train.cpp."""

lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
w, m, v = 0.5, 0.0, 0.0
grads = [1.0, -0.5, 0.25]

for t, g in enumerate(grads, start=1):
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g * g
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    w = w - lr * m_hat / (v_hat**0.5 + eps)
    print(f"step {t}: w = {w:.17g}  m = {m:.17g}  v = {v:.17g}")
