"""Stacked GRU classifier with hand-written backpropagation through time.

Row-vector convention throughout, per layer and step::

    z = sigmoid(o U_z + s W_z + b_z)
    r = sigmoid(o U_r + s W_r + b_r)
    h = tanh(o U_h + (s * r) W_h + b_h)
    s' = (1 - z) * h + z * s

The 48 readings of a day enter one scalar per step. Each hidden layer
passes ``activation(s')`` upward; the class scores are
``softmax(s_T V + b_o)`` on the top layer's final state.

Arrays are kept time-major, shape (T, batch, units).
"""

from __future__ import annotations

import numpy as np

from .functions import ACTIVATIONS, activate, activate_grad, dropout_mask, init_weight, sigmoid, softmax

N_STEPS = 48
N_CLASSES = 2
GATES = ("z", "r", "h")


class Gru:
    kind = "gru"

    def __init__(self, n_layers, units, activation="softsign", dropout=0.0, init="glorot",
                 seed=0, n_steps=N_STEPS):
        if n_layers < 1 or units < 1:
            raise ValueError("need at least one layer of at least one unit")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        self.n_layers = int(n_layers)
        self.units = int(units)
        self.activation = activation
        self.dropout = float(dropout)
        self.n_steps = int(n_steps)
        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        n = self.units
        for l in range(self.n_layers):
            d = 1 if l == 0 else n
            for g in GATES:
                self.params[f"U_{g}{l}"] = init_weight(init, (d, n), rng)
                self.params[f"W_{g}{l}"] = init_weight(init, (n, n), rng)
                self.params[f"b_{g}{l}"] = np.zeros(n)
        self.params["V"] = init_weight(init, (n, N_CLASSES), rng)
        self.params["b_o"] = np.zeros(N_CLASSES)

    @property
    def weight_names(self) -> list[str]:
        return [k for k in self.params if k[0] in "UWV"]

    def _layer(self, l):
        p = self.params
        U = np.hstack([p[f"U_z{l}"], p[f"U_r{l}"], p[f"U_h{l}"]])
        b = np.concatenate([p[f"b_z{l}"], p[f"b_r{l}"], p[f"b_h{l}"]])
        W_zr = np.hstack([p[f"W_z{l}"], p[f"W_r{l}"]])
        return U, b, W_zr, p[f"W_h{l}"]

    def forward(self, X, train_mode=False, rng=None):
        """Return (probs, logits, cache) for a (batch, 48) array."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_steps:
            raise ValueError(f"expected sequences of {self.n_steps} steps, got {X.shape[1]}")
        use_dropout = train_mode and self.dropout > 0
        if use_dropout and rng is None:
            raise ValueError("train-mode dropout needs an rng")
        T, B, n = self.n_steps, X.shape[0], self.units
        O = np.ascontiguousarray(X.T)[:, :, None]
        cache = []
        for l in range(self.n_layers):
            U, b, W_zr, W_h = self._layer(l)
            Ux = O @ U + b
            Z = np.empty((T, B, n)); R = np.empty((T, B, n)); H = np.empty((T, B, n))
            S = np.empty((T, B, n)); SR = np.empty((T, B, n))
            s = np.zeros((B, n))
            for t in range(T):
                zr = sigmoid(Ux[t, :, : 2 * n] + s @ W_zr)
                z, r = zr[:, :n], zr[:, n:]
                sr = s * r
                h = np.tanh(Ux[t, :, 2 * n :] + sr @ W_h)
                s = (1.0 - z) * h + z * s
                Z[t], R[t], H[t], SR[t], S[t] = z, r, h, sr, s
            mask = None
            if l < self.n_layers - 1:
                O_next = activate(self.activation, S)
                if use_dropout:
                    mask = dropout_mask(S.shape, self.dropout, rng)
                    O_next = O_next * mask
            cache.append((O, Z, R, H, S, SR, mask))
            if l < self.n_layers - 1:
                O = O_next
        s_T = cache[-1][4][-1]
        logits = s_T @ self.params["V"] + self.params["b_o"]
        return softmax(logits), logits, cache

    def backward(self, cache, dlogits) -> dict[str, np.ndarray]:
        p = self.params
        grads = {}
        n = self.units
        s_T = cache[-1][4][-1]
        grads["V"] = s_T.T @ dlogits
        grads["b_o"] = dlogits.sum(0)
        dS = np.zeros_like(cache[-1][4])
        dS[-1] = dlogits @ p["V"].T
        for l in range(self.n_layers - 1, -1, -1):
            O, Z, R, H, S, SR, _ = cache[l]
            U, _, W_zr, W_h = self._layer(l)
            T, B = S.shape[0], S.shape[1]
            S_prev = np.concatenate([np.zeros((1, B, n)), S[:-1]])
            dA = np.empty((T, B, 3 * n))
            ds_next = np.zeros((B, n))
            for t in range(T - 1, -1, -1):
                ds = dS[t] + ds_next
                z, r, h, s_prev = Z[t], R[t], H[t], S_prev[t]
                dah = ds * (1.0 - z) * (1.0 - h * h)
                dsr = dah @ W_h.T
                dz = ds * (s_prev - h) * z * (1.0 - z)
                dr = dsr * s_prev * r * (1.0 - r)
                dA[t, :, :n] = dz
                dA[t, :, n : 2 * n] = dr
                dA[t, :, 2 * n :] = dah
                ds_next = ds * z + dsr * r + dA[t, :, : 2 * n] @ W_zr.T
            flat = dA.reshape(T * B, 3 * n)
            dW_zr = S_prev.reshape(T * B, n).T @ flat[:, : 2 * n]
            grads[f"W_z{l}"] = dW_zr[:, :n]
            grads[f"W_r{l}"] = dW_zr[:, n:]
            grads[f"W_h{l}"] = SR.reshape(T * B, n).T @ flat[:, 2 * n :]
            dU = O.reshape(T * B, -1).T @ flat
            db = flat.sum(0)
            for i, g in enumerate(GATES):
                grads[f"U_{g}{l}"] = dU[:, i * n : (i + 1) * n]
                grads[f"b_{g}{l}"] = db[i * n : (i + 1) * n]
            if l:
                dO = dA @ U.T
                mask = cache[l - 1][6]
                if mask is not None:
                    dO = dO * mask
                dS = dO * activate_grad(self.activation, cache[l - 1][4])
        return {k: np.ascontiguousarray(grads[k]) for k in p}

    def predict_proba(self, X, batch_size=1024) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.vstack([self.forward(X[i : i + batch_size])[0] for i in range(0, len(X), batch_size)])

    def describe(self) -> dict:
        return {"layers": self.n_layers, "units": self.units, "activation": self.activation,
                "dropout": self.dropout}
