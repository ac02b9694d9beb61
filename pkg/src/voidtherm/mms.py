"""Manufactured solutions: pick analytic fields, derive the volumetric
sources symbolically so the fields satisfy the coupled system exactly, and
wrap everything as a runnable scenario plus the exact solution for error
measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .solver import BoundaryCondition, BoundaryPartition, FieldData, Scenario


def space_symbols(dim):
    return sp.symbols(" ".join(f"x{i+1}" for i in range(dim)), real=True)


TIME = sp.Symbol("t", real=True)


def _as_tuple(x):
    return x if isinstance(x, (tuple, list)) else (x,)


@dataclass(eq=False)
class ExactSolution:
    """Lambdified exact fields of a manufactured run."""

    dim: int
    u: object
    udot: object
    phi: object
    phidot: object
    theta: object

    def errors(self, state, scenario):
        """Max-norm errors of a computed state against the exact fields."""
        X = scenario.mesh()
        t = state.t
        return {
            "u": float(np.abs(state.u - self.u(X, t)).max()),
            "udot": float(np.abs(state.v - self.udot(X, t)).max()),
            "phi": float(np.abs(state.phi - self.phi(X, t)).max()),
            "phidot": float(np.abs(state.phidot - self.phidot(X, t)).max()),
            "theta": float(np.abs(state.theta - self.theta(X, t)).max()),
        }


def _lambdify_scalar(expr, xs):
    fn = sp.lambdify((*xs, TIME), expr, "numpy")

    def wrapped(X, t):
        out = np.asarray(fn(*X, t), dtype=float)
        return np.broadcast_to(out, np.shape(X[0])).copy()

    return wrapped


def _lambdify_vector(exprs, xs):
    fns = [_lambdify_scalar(e, xs) for e in exprs]

    def wrapped(X, t):
        return np.stack([f(X, t) for f in fns])

    return wrapped


def manufactured_scenario(u_exprs, phi_expr, theta_expr, grid, material,
                          dt="auto", T=1.0, dissipative=False):
    """Scenario whose sources make (u, phi, theta) the exact solution.

    ``u_exprs`` is one sympy expression per displacement component in the
    symbols from :func:`space_symbols` plus ``t``.  All faces carry
    Dirichlet data read off the exact fields; the support slab covers the
    whole domain (manufactured runs exercise the integrator and the energy
    identity, not the decay geometry).

    Returns (scenario, exact).
    """
    d = grid.dim
    xs = _as_tuple(space_symbols(d))
    u_exprs = [sp.sympify(e) for e in _as_tuple(u_exprs)]
    phi_expr = sp.sympify(phi_expr)
    theta_expr = sp.sympify(theta_expr)
    if len(u_exprs) != d:
        raise ValueError(f"need {d} displacement expressions, got {len(u_exprs)}")

    C, D, A, B = material.C, material.D, material.A, material.B
    bvec, M, aVec, K = material.b, material.M, material.aVec, material.K

    e = [[sp.Rational(1, 2) * (sp.diff(u_exprs[i], xs[j]) + sp.diff(u_exprs[j], xs[i]))
          for j in range(d)] for i in range(d)]
    gamma = [sp.diff(phi_expr, xs[i]) for i in range(d)]
    kappa = [sp.diff(theta_expr, xs[i]) for i in range(d)]

    def dsum(fn):
        return sum(fn(i) for i in range(d))

    S = [[sum(C[i, j, r, s] * e[r][s] for r in range(d) for s in range(d))
          + sum(D[i, j, s] * gamma[s] for s in range(d))
          + B[i, j] * phi_expr - M[i, j] * theta_expr
          for j in range(d)] for i in range(d)]
    h = [sum(D[r, s, i] * e[r][s] for r in range(d) for s in range(d))
         + sum(A[i, j] * gamma[j] for j in range(d))
         + bvec[i] * phi_expr - aVec[i] * theta_expr
         for i in range(d)]
    G = (-sum(B[i, j] * e[i][j] for i in range(d) for j in range(d))
         - sum(bvec[i] * gamma[i] for i in range(d))
         - material.xi * phi_expr + material.m * theta_expr)
    tau_sign = -1 if dissipative else 1
    g = tau_sign * material.tau * sp.diff(phi_expr, TIME) + G
    rho_eta = (sum(M[i, j] * e[i][j] for i in range(d) for j in range(d))
               + sum(aVec[i] * gamma[i] for i in range(d))
               + material.m * phi_expr + material.aHeat * theta_expr)
    q = [sum(K[i, j] * kappa[j] for j in range(d)) for i in range(d)]

    f_exprs = [sp.diff(u_exprs[i], TIME, 2)
               - dsum(lambda j, i=i: sp.diff(S[i][j], xs[j])) / material.rho
               for i in range(d)]
    ell_expr = (material.chi * sp.diff(phi_expr, TIME, 2)
                - (dsum(lambda i: sp.diff(h[i], xs[i])) + g) / material.rho)
    thermal_sign = 1 if dissipative else -1
    # balance: thermal_sign * rho*theta0*eta_dot = div q + rho * r
    r_expr = (thermal_sign * material.theta0 * sp.diff(rho_eta, TIME)
              - dsum(lambda i: sp.diff(q[i], xs[i]))) / material.rho

    u_fns = _lambdify_vector(u_exprs, xs)
    udot_fns = _lambdify_vector([sp.diff(e_, TIME) for e_ in u_exprs], xs)
    phi_fn = _lambdify_scalar(phi_expr, xs)
    phidot_fn = _lambdify_scalar(sp.diff(phi_expr, TIME), xs)
    theta_fn = _lambdify_scalar(theta_expr, xs)
    exact = ExactSolution(dim=d, u=u_fns, udot=udot_fns, phi=phi_fn,
                          phidot=phidot_fn, theta=theta_fn)

    f_fn = _lambdify_vector(f_exprs, xs)
    ell_fn = _lambdify_scalar(ell_expr, xs)
    r_fn = _lambdify_scalar(r_expr, xs)

    faces = {}
    for axis in range(d):
        for side in ("min", "max"):
            faces[(axis, side)] = {
                "displacement": BoundaryCondition(
                    "dirichlet", fielddata=FieldData(value=u_fns, rate=udot_fns)),
                "void": BoundaryCondition(
                    "dirichlet", fielddata=FieldData(value=phi_fn, rate=phidot_fn)),
                "thermal": BoundaryCondition(
                    "dirichlet",
                    fielddata=FieldData(value=theta_fn,
                                        rate=_lambdify_scalar(sp.diff(theta_expr, TIME), xs))),
            }

    scenario = Scenario(
        grid=grid, material=material, boundary=BoundaryPartition(faces=faces),
        dt=dt, T=float(T), support_x0=float(grid.extents[0]),
        initial={
            "u": lambda X: u_fns(X, 0.0),
            "udot": lambda X: udot_fns(X, 0.0),
            "phi": lambda X: phi_fn(X, 0.0),
            "phidot": lambda X: phidot_fn(X, 0.0),
            "theta": lambda X: theta_fn(X, 0.0),
        },
        sources={"f": f_fn, "ell": ell_fn, "r": r_fn},
        label="manufactured",
    )
    return scenario, exact


def static_equilibrium_scenario(u_exprs, grid, material, dt="auto", T=1.0):
    """Scenario whose body force holds a time-independent displacement in
    equilibrium (zero void fraction and temperature): f = -div S / rho, so
    the exact trajectory is stationary."""
    return manufactured_scenario(u_exprs, sp.Integer(0), sp.Integer(0),
                                 grid, material, dt=dt, T=T)
