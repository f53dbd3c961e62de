"""Full-torus minimization of the energy and one-dimensionality diagnostics."""

from dataclasses import dataclass, field as dc_field
import hashlib

import numpy as np

from .core import ScalarField, make_random_field, save_field
from .energy import total_energy, energy_gradient


@dataclass(frozen=True)
class MinimizeOptions:
    max_iters: int = 2000
    step_rule: str = "bb"  # fixed | backtracking | bb (safeguarded Barzilai-Borwein)
    grad_tol: float = 1e-8
    energy_tol: float = 1e-12
    seed: int = 0
    restarts: int = 1
    fixed_step: float = 1e-3
    init_smoothness: float = 0.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (self.grad_tol > 0 and self.energy_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.step_rule not in ("fixed", "backtracking", "bb"):
            raise ValueError("unknown step_rule %r" % (self.step_rule,))
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class MinimizeResult:
    field: ScalarField
    energy_trace: np.ndarray
    converged: bool
    best_restart: int


def minimize_field(params, init, opts, table):
    """Projected gradient descent on the torus, clipping to [0, 1] each step.

    Accepted steps are nonincreasing in energy; stops when the projected
    gradient norm falls below grad_tol, the relative energy decrease falls
    below energy_tol, or max_iters is reached. NaN energy/gradient aborts.
    """
    if init.params != params:
        raise ValueError("init field was built for different parameters")
    v = init.values.copy()
    e = total_energy(ScalarField(params, v), table).total
    if not np.isfinite(e):
        raise RuntimeError("non-finite energy at iteration 0")
    grad = energy_gradient(ScalarField(params, v), table)
    step = opts.fixed_step if opts.step_rule == "fixed" else 1.0 / max(
        1e-12, np.abs(grad).max() / 0.1
    )
    trace = [e]
    converged = False
    v_old = g_old = None
    for it in range(1, opts.max_iters + 1):
        if not np.all(np.isfinite(grad)):
            raise RuntimeError("non-finite gradient at iteration %d" % it)
        if opts.step_rule == "bb" and v_old is not None:
            s = (v - v_old).ravel()
            y = (grad - g_old).ravel()
            sy = float(s @ y)
            if sy > 1e-30:
                step = float(s @ s) / sy
            step = min(max(step, 1e-9), 1e9)
        v_new = np.clip(v - step * grad, 0.0, 1.0)
        e_new = total_energy(ScalarField(params, v_new), table).total
        if not np.isfinite(e_new):
            raise RuntimeError("non-finite energy at iteration %d" % it)
        if opts.step_rule != "fixed":
            bt = 0
            while e_new > e and bt < 40:
                step *= 0.5
                v_new = np.clip(v - step * grad, 0.0, 1.0)
                e_new = total_energy(ScalarField(params, v_new), table).total
                bt += 1
        if e_new > e:
            break
        g_new = energy_gradient(ScalarField(params, v_new), table)
        pg = np.abs(v_new - np.clip(v_new - g_new, 0.0, 1.0)).max()
        moved = e - e_new
        v_old, g_old = v, grad
        v, grad, e = v_new, g_new, e_new
        trace.append(e)
        if pg <= opts.grad_tol:
            converged = True
            break
        if moved < opts.energy_tol * max(1.0, abs(e)):
            converged = True
            break
    return MinimizeResult(
        field=ScalarField(params, v),
        energy_trace=np.array(trace),
        converged=converged,
        best_restart=0,
    )


def minimize_with_restarts(params, opts, table, inits=None):
    """Run minimize_field from several random starts, return (best, all results).

    Restart k starts from make_random_field(params, opts.seed + k) unless
    explicit initial fields are supplied.
    """
    results = []
    for k in range(opts.restarts):
        if inits is not None and k < len(inits):
            init = inits[k]
        else:
            init = make_random_field(params, opts.seed + k, opts.init_smoothness)
        results.append(minimize_field(params, init, opts, table))
    best_k = int(np.argmin([r.energy_trace[-1] for r in results]))
    best = results[best_k]
    best = MinimizeResult(
        field=best.field,
        energy_trace=best.energy_trace,
        converged=best.converged,
        best_restart=best_k,
    )
    return best, results


def one_dimensionality_report(field, tol=0.01):
    """(is_1d, direction, per-axis deviations); axes are numbered 1..d.

    The deviation along axis i is the mean over x_i of the variance of u over
    the hyperplane perpendicular to e_i; it vanishes iff u depends on x_i
    only. direction is the argmin axis (ties broken by the lowest index).
    """
    v = field.values
    d = field.params.d
    deviations = []
    for ax in range(d):
        if d == 1:
            deviations.append(0.0)
            continue
        other = tuple(k for k in range(d) if k != ax)
        var = v.var(axis=other)
        deviations.append(float(var.mean()))
    deviations = np.array(deviations)
    direction = int(np.argmin(deviations)) + 1
    is_1d = bool(deviations.min() < tol)
    return is_1d, (direction if is_1d else None), deviations


def trace_csv(result):
    lines = ["iteration,energy"]
    for i, e in enumerate(result.energy_trace):
        lines.append("%d,%.17g" % (i, e))
    return "\n".join(lines) + "\n"


def emit_run(out_dir, params, opts, results, best):
    """Write per-restart traces and final fields plus a structured-text manifest."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    names = []
    for k, r in enumerate(results):
        tname = "energy_trace_%d.csv" % k
        fname = "field_%d.sf" % k
        with open(os.path.join(out_dir, tname), "w") as fh:
            fh.write(trace_csv(r))
        save_field(r.field, os.path.join(out_dir, fname))
        names.extend([tname, fname])
    hashes = []
    for name in names:
        with open(os.path.join(out_dir, name), "rb") as fh:
            hashes.append((name, hashlib.sha256(fh.read()).hexdigest()))
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("stripeforge minimize run\n")
        fh.write("params: d=%d p=%g tau=%g eps=%g L=%g n_per_unit=%g\n"
                 % (params.d, params.p, params.tau, params.eps, params.L, params.n_per_unit))
        fh.write("options: max_iters=%d step_rule=%s grad_tol=%g energy_tol=%g seed=%d restarts=%d\n"
                 % (opts.max_iters, opts.step_rule, opts.grad_tol, opts.energy_tol,
                    opts.seed, opts.restarts))
        fh.write("best_restart: %d\n" % best.best_restart)
        fh.write("best_energy: %.17g\n" % best.energy_trace[-1])
        fh.write("converged: %s\n" % best.converged)
        for name, hx in hashes:
            fh.write("sha256 %s %s\n" % (name, hx))
    return os.path.join(out_dir, "manifest.txt")
