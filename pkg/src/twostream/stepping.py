"""Time marching with reusable buffers.

Fresh output arrays on every step cost more than the stencil itself at
large meshes (page faults), so steppers keep two pairs of buffers and swap.
"""
import numpy as np

from .model import TwoStreamField


class Stepper:
    """Base class for kinetic schemes advanced in place.

    Subclasses implement ``_step(pp, pm, out_p, out_m)`` in the oriented
    frame and may set ``flip`` to mirror y on the way in and out.
    """

    flip = False

    def __init__(self, field, cfg):
        self.cfg = cfg
        f = field.flipped() if self.flip else field
        self._p = np.ascontiguousarray(f.p_plus, dtype=np.float64).copy()
        self._m = np.ascontiguousarray(f.p_minus, dtype=np.float64).copy()
        self._np = np.empty_like(self._p)
        self._nm = np.empty_like(self._m)
        self._hp = np.empty_like(self._p)
        self._hm = np.empty_like(self._m)
        self.steps = 0

    def _step(self, pp, pm, out_p, out_m):
        raise NotImplementedError

    def advance(self, nsteps=1):
        for _ in range(nsteps):
            self._step(self._p, self._m, self._np, self._nm)
            self._p, self._np = self._np, self._p
            self._m, self._nm = self._nm, self._m
            self.steps += 1
        return self

    @property
    def time(self):
        return self.steps * self.cfg.grid.dt

    @property
    def rho(self):
        return self._p.sum(axis=1) + self._m.sum(axis=1)

    @property
    def field(self):
        f = TwoStreamField(self._p.copy(), self._m.copy())
        return f.flipped() if self.flip else f


def run_steps(stepper_cls, field, cfg, nsteps):
    return stepper_cls(field, cfg).advance(nsteps).field
