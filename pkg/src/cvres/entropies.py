"""Entropic functionals on truncated states.

All reported values are in bits; natural logs are used internally where
convenient. The measured relative entropy is computed by concave ascent over
L = exp(H): every iterate is feasible in the variational program, so the
returned value is always a valid lower bound on the true quantity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, roots_laguerre

from .errors import UsageError
from .fock_core import DensityOperator, coherent_vector, dephase

LOG2E = math.log2(math.e)
LN2 = math.log(2.0)
_ZERO_BIN = 1e-15


def entropy_of_probabilities(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """S(A) = -Tr[A log2 A] via the eigenvalues, with 0 log 0 = 0."""
    evals = np.linalg.eigvalsh(rho.entries)
    return entropy_of_probabilities(np.clip(evals, 0.0, None))


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Classical KL in bits. Bins with p <= 1e-15 contribute 0; p > 0 on q = 0 gives +inf."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > _ZERO_BIN
    if np.any(q[mask] <= _ZERO_BIN):
        return math.inf
    return float(np.sum(p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))))


def relative_entropy(
    rho: DensityOperator, sigma: DensityOperator, *, support_tol: float = 1e-10
) -> float:
    """D(rho||sigma) = Tr[rho(log2 rho - log2 sigma)] via joint eigen-expansion.

    Returns +inf when rho carries more than ``support_tol`` weight outside the
    numerical support of sigma.
    """
    if rho.modes != sigma.modes or rho.cutoff != sigma.cutoff:
        raise UsageError("relative_entropy requires matching shapes")
    a_vals, a_vecs = np.linalg.eigh(rho.entries)
    b_vals, b_vecs = np.linalg.eigh(sigma.entries)
    a_vals = np.clip(a_vals, 0.0, None)
    b_vals = np.clip(b_vals, 0.0, None)
    overlap = np.abs(a_vecs.conj().T @ b_vecs) ** 2  # overlap[i, j] = |<a_i|b_j>|^2
    a_pos = a_vals > _ZERO_BIN
    # numerical support of sigma: eigenvalues at machine-zero relative scale
    b_zero = b_vals <= max(float(b_vals[-1]) * 1e-15, 1e-300)
    outside = float(np.sum(a_vals[a_pos][:, None] * overlap[np.ix_(a_pos, b_zero)]))
    if outside > support_tol:
        return math.inf
    term_a = float(np.sum(a_vals[a_pos] * np.log2(a_vals[a_pos])))
    b_log = np.log2(np.maximum(b_vals, 1e-300))
    term_b = float(np.sum((a_vals[a_pos][:, None] * overlap[a_pos, :]) @ b_log))
    return term_a - term_b


@dataclass(frozen=True)
class OptimizerReport:
    value_bits: float
    iterations: int
    converged: bool
    gradient_norm: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "value_bits": self.value_bits,
                "iterations": self.iterations,
                "converged": self.converged,
                "gradient_norm": self.gradient_norm,
            }
        )


def _exp_frechet(h: np.ndarray, weight: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """exp(h), the gradient of Tr[weight exp(h)] wrt h, and the trace itself."""
    evals, vecs = np.linalg.eigh(h)
    exp_vals = np.exp(evals)
    diff = evals[:, None] - evals[None, :]
    small = np.abs(diff) < 1e-12
    denom = np.where(small, 1.0, diff)
    phi = np.where(small, np.exp(0.5 * (evals[:, None] + evals[None, :])),
                   (exp_vals[:, None] - exp_vals[None, :]) / denom)
    w_tilde = vecs.conj().T @ weight @ vecs
    grad = vecs @ (phi * w_tilde) @ vecs.conj().T
    grad = 0.5 * (grad + grad.conj().T)
    expm = (vecs * exp_vals) @ vecs.conj().T
    return expm, grad, float(np.real(np.trace(weight @ expm)))


def measured_relative_entropy(
    rho: DensityOperator,
    sigma: DensityOperator,
    cfg=None,
) -> tuple[float, OptimizerReport]:
    """Variational lower value of the measured relative entropy, in bits.

    Maximizes Tr[rho ln L] + 1 - Tr[sigma L] over L = exp(H) by gradient ascent
    with backtracking; the reported number is Tr[rho log2 L] - log2 Tr[sigma L]
    at the best iterate, which never exceeds the true measured relative entropy.
    """
    if rho.modes != sigma.modes or rho.cutoff != sigma.cutoff:
        raise UsageError("measured_relative_entropy requires matching shapes")
    if sigma.trace() <= 0.0:
        raise UsageError("sigma must have positive trace")
    tol = getattr(cfg, "objective_tol", 1e-10)
    max_iters = getattr(cfg, "max_iters", 600)
    delta = 1e-9

    rho_m = rho.entries
    sig_m = sigma.entries
    dim = rho_m.shape[0]
    eye = np.eye(dim)

    def log_reg(mat):
        evals, vecs = np.linalg.eigh(mat)
        evals = np.maximum(evals, delta)
        return (vecs * np.log(evals)) @ vecs.conj().T

    h = log_reg(rho_m + delta * eye) - log_reg(sig_m + delta * eye)
    h = 0.5 * (h + h.conj().T)

    def value_bits(h_mat):
        expm, grad, tr_sig = _exp_frechet(h_mat, sig_m)
        lin = float(np.real(np.trace(rho_m @ h_mat)))
        obj_nats = lin + 1.0 - tr_sig
        report_bits = LOG2E * (lin - math.log(max(tr_sig, 1e-300)))
        return obj_nats, report_bits, grad

    obj, best_bits, grad = value_bits(h)
    step = 1.0
    iters = 0
    converged = False
    gnorm = 0.0
    for iters in range(1, max_iters + 1):
        direction = rho_m - grad
        gnorm = float(np.linalg.norm(direction))
        if gnorm < 1e-14:
            converged = True
            break
        improved = False
        for _ in range(40):
            h_try = h + step * direction
            obj_try, bits_try, grad_try = value_bits(h_try)
            if obj_try > obj + 1e-4 * step * gnorm**2:
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True
            break
        gain = bits_try - best_bits
        h, obj, grad = h_try, obj_try, grad_try
        best_bits = max(best_bits, bits_try)
        step = min(step * 2.0, 1e6)
        if 0.0 <= gain < tol:
            converged = True
            break
    return best_bits, OptimizerReport(best_bits, iters, converged, gnorm)


def husimi_q(rho: DensityOperator, alpha) -> float:
    """Husimi function pi^(-m) <alpha|rho|alpha> with truncated coherent vectors."""
    alphas = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alphas.size != rho.modes:
        raise UsageError(f"need {rho.modes} coherent amplitudes, got {alphas.size}")
    vec = np.array([1.0 + 0j])
    for a in alphas:
        v, _ = coherent_vector(a, rho.cutoff)
        vec = np.kron(vec, v)
    val = float(np.real(np.vdot(vec, rho.entries @ vec)))
    return max(val, 0.0) / math.pi**rho.modes


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar quadrature for single-mode phase-space integrals.

    Radial direction uses Gauss-Laguerre nodes in t = |alpha|^2; the angular
    direction is a uniform trapezoid (exact for trigonometric polynomials up to
    the node count). ``tail_bits`` is a certified bound on the entropy mass of
    any state of energy <= the grid's design energy beyond radius R.
    """

    radial_nodes: np.ndarray
    radial_weights: np.ndarray
    angular_count: int
    outer_radius: float
    tail_bits: float

    def __post_init__(self):
        if self.radial_nodes.size < 8 or self.angular_count < 8:
            raise UsageError("quadrature grid needs at least 8 nodes per direction")
        if self.tail_bits < 0:
            raise UsageError("tail bound must be nonnegative")
        for name in ("radial_nodes", "radial_weights"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def phase_space_tail_bits(energy: float, radius_sq: float, modes: int = 1) -> float:
    """Entropy-tail certificate for mass beyond |alpha|^2 = radius_sq.

    The Husimi second moment of an energy-E state is E + m, so Markov bounds
    the tail mass by mu = (E+m)/R^2; a Gaussian maximum-entropy argument then
    bounds the tail of -integral Q log2(pi^m Q) by mu*log2(e*(E+m)/mu^2).
    """
    second_moment = energy + modes
    mu = min(second_moment / radius_sq, 0.25)
    if mu <= 0.0:
        return 0.0
    return mu * math.log2(math.e * second_moment / mu**2)


def default_quadrature_grid(
    energy: float, cutoff: int, *, radial_order: int = 64, angular_count: int = 128
) -> QuadratureGrid:
    nodes, weights = roots_laguerre(radial_order)
    angular = max(angular_count, 2 * cutoff)
    r_sq = float(nodes[-1])
    tail = phase_space_tail_bits(energy, r_sq)
    return QuadratureGrid(nodes, weights, angular, math.sqrt(r_sq), tail)


class WehrlEstimate(NamedTuple):
    bits: float
    tail_bits: float


def _husimi_on_grid(rho: DensityOperator, grid: QuadratureGrid) -> np.ndarray:
    """Q(sqrt(t) e^(i theta)) for all radial nodes t and angular nodes theta."""
    d = rho.cutoff
    t = grid.radial_nodes
    theta = 2.0 * math.pi * np.arange(grid.angular_count) / grid.angular_count
    k = np.arange(d)
    log_mag = 0.5 * (k[None, :] * np.log(np.maximum(t[:, None], 1e-300))) - 0.5 * gammaln(k + 1)[None, :]
    radial = np.exp(log_mag - 0.5 * t[:, None])  # |alpha|^k/sqrt(k!) * e^(-t/2)
    phases = np.exp(1j * np.outer(theta, k))
    vecs = radial[:, None, :] * phases[None, :, :]  # (t, theta, k)
    flat = vecs.reshape(-1, d)
    q = np.real(np.einsum("ik,kl,il->i", flat.conj(), rho.entries, flat))
    return np.clip(q.reshape(t.size, theta.size), 0.0, None) / math.pi


def wehrl_entropy(rho: DensityOperator, grid: QuadratureGrid | None = None) -> WehrlEstimate:
    """-integral Q log2(pi Q) by Gauss-Laguerre x trapezoid, plus the tail bound.

    Single mode only. The grid must satisfy R^2 >= 4*(energy+1).
    """
    if rho.modes != 1:
        raise UsageError("wehrl_entropy supports single-mode states")
    if grid is None:
        grid = default_quadrature_grid(rho.energy, rho.cutoff)
    required = 2.0 * math.sqrt(rho.energy + 1.0)
    if grid.outer_radius**2 < required**2:
        raise UsageError(
            f"grid outer radius {grid.outer_radius:.3f} too small; need R >= {required:.3f}"
        )
    q = _husimi_on_grid(rho, grid)
    pi_q = np.clip(math.pi * q, 1e-300, None)
    integrand = -q * np.log2(pi_q)  # nonnegative since pi*Q <= 1
    # d^2alpha = (1/2) dt dtheta; Gauss-Laguerre supplies e^(-t), so weight by e^(t).
    t = grid.radial_nodes
    radial_sum = grid.radial_weights * np.exp(np.minimum(t, 700))
    angular_mean = integrand.mean(axis=1) * (2.0 * math.pi)
    value = 0.5 * float(np.dot(radial_sum, angular_mean))
    return WehrlEstimate(value, grid.tail_bits)


def husimi_kl_on_grid(
    rho: DensityOperator, sigma: DensityOperator, grid: QuadratureGrid | None = None
) -> float:
    """Grid value of the classical KL between the two Husimi functions, in bits."""
    if rho.modes != 1 or sigma.modes != 1:
        raise UsageError("husimi_kl_on_grid supports single-mode states")
    if grid is None:
        grid = default_quadrature_grid(max(rho.energy, sigma.energy), rho.cutoff)
    q_r = np.clip(_husimi_on_grid(rho, grid), 1e-300, None)
    q_s = np.clip(_husimi_on_grid(sigma, grid), 1e-300, None)
    integrand = q_r * (np.log2(q_r) - np.log2(q_s))
    t = grid.radial_nodes
    radial_sum = grid.radial_weights * np.exp(np.minimum(t, 700))
    angular_mean = integrand.mean(axis=1) * (2.0 * math.pi)
    return 0.5 * float(np.dot(radial_sum, angular_mean))


def husimi_sup(rho: DensityOperator, *, tol: float = 1e-9) -> float:
    """Certified upper bound on sup_alpha Q_rho(alpha) (single mode)."""
    if rho.modes != 1:
        raise UsageError("husimi_sup supports single-mode states")
    from .nonclassicality import coherent_sup_certified

    cert = coherent_sup_certified(rho.entries, tol=tol)
    return cert.value / math.pi


def dephased_relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """KL of the Fock-diagonal parts, i.e. the value after the dephasing channel."""
    return kl_divergence(dephase(rho).diagonal(), dephase(sigma).diagonal())
