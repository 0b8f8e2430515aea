"""Sin-cos reference solution of the three-field Stokes system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PI = np.pi


def _xy(x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return x[:, 0], x[:, 1]


@dataclass(frozen=True)
class ManufacturedSolution:
    """Closed-form velocity, pressure, extra-stress and body force.

    All evaluators take an ``(n, 2)`` point array.  Vectors come back as
    ``(n, 2)`` and tensors as ``(n, 2, 2)``.
    """

    eta: float = 0.5

    def velocity(self, x):
        X, Y = _xy(x)
        return np.column_stack([-np.sin(PI * Y) * np.cos(PI * X), np.sin(PI * X) * np.cos(PI * Y)])

    def velocity_gradient(self, x):
        """``G[:, i, j] = d u_i / d x_j``."""
        X, Y = _xy(x)
        g = np.empty((len(X), 2, 2))
        g[:, 0, 0] = PI * np.sin(PI * Y) * np.sin(PI * X)
        g[:, 0, 1] = -PI * np.cos(PI * Y) * np.cos(PI * X)
        g[:, 1, 0] = PI * np.cos(PI * X) * np.cos(PI * Y)
        g[:, 1, 1] = -PI * np.sin(PI * X) * np.sin(PI * Y)
        return g

    def pressure(self, x):
        X, Y = _xy(x)
        return -2.0 * self.eta * np.cos(PI * X) * np.sin(PI * Y)

    def pressure_gradient(self, x):
        X, Y = _xy(x)
        e = self.eta
        return np.column_stack(
            [2.0 * e * PI * np.sin(PI * X) * np.sin(PI * Y), -2.0 * e * PI * np.cos(PI * X) * np.cos(PI * Y)]
        )

    def stress(self, x):
        X, Y = _xy(x)
        s = 2.0 * PI * self.eta * np.sin(PI * X) * np.sin(PI * Y)
        out = np.zeros((len(X), 2, 2))
        out[:, 0, 0] = s
        out[:, 1, 1] = -s
        return out

    def stress_divergence(self, x):
        """Row-wise divergence ``(div sigma)_i = d sigma_ij / d x_j``."""
        X, Y = _xy(x)
        c = 2.0 * PI * PI * self.eta
        return np.column_stack([c * np.cos(PI * X) * np.sin(PI * Y), -c * np.sin(PI * X) * np.cos(PI * Y)])

    def body_force(self, x):
        """Body force in closed form."""
        X, Y = _xy(x)
        e = self.eta
        sx, cx = np.sin(PI * X), np.cos(PI * X)
        sy, cy = np.sin(PI * Y), np.cos(PI * Y)
        return np.column_stack(
            [
                2 * PI * e * sx * sy - 2 * PI**2 * e * sy * cx,
                2 * PI**2 * e * sx * cy - 2 * PI * e * cx * cy,
            ]
        )

    def body_force_from_derivatives(self, x):
        return -self.stress_divergence(x) + self.pressure_gradient(x)

    def boundary_data(self, x):
        return self.velocity(x)

    def evaluate(self, kind: str, x):
        table = {
            "u": self.velocity,
            "p": self.pressure,
            "sigma": self.stress,
            "f": self.body_force,
            "g": self.boundary_data,
        }
        if kind not in table:
            raise ValueError(f"unknown field {kind!r}; expected one of {sorted(table)}")
        return table[kind](x)

    def self_test(self, n: int = 1000, seed: int = 0, atol: float = 1e-10) -> float:
        """Compare the closed-form body force with the differentiated one.

        Returns the largest discrepancy; raises if it exceeds ``atol``.
        """
        pts = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, 2))
        err = float(np.max(np.abs(self.body_force(pts) - self.body_force_from_derivatives(pts))))
        if err > atol:
            raise AssertionError(f"body force mismatch {err:.3e} exceeds {atol:.1e}")
        return err
