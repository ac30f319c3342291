"""
Gaussian mixture models with full covariances: K-means initialised EM, BIC model
selection and Gaussian mixture regression.
"""

__all__ = [
    "GaussianMixture",
    "fit_gmm",
    "log_likelihood",
    "bic",
    "num_parameters",
    "select_k_bic",
    "gmr_responsibilities",
    "gmr_condition",
]

import dataclasses
import logging
import math

import numpy as np
import scipy.linalg
from scipy.special import logsumexp
from sklearn.cluster import KMeans

from dressing_core.lib.errors import (
    DegenerateComponent,
    InsufficientData,
    NumericalUnderflow,
)

SAMPLES_PER_COMPONENT = 10
MAX_ITERATIONS = 500
CONVERGENCE_TOLERANCE = 1e-7
MIN_COMPONENT_MASS = 1e-6
REGULARIZATION_SCALE = 1e-8
KMEANS_RESTARTS = 10


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianMixture:
    """
    :param np.ndarray weights: K mixing weights
    :param np.ndarray means: K x D
    :param np.ndarray covariances: K x D x D
    :param int input_dim: the first ``input_dim`` dimensions are the regression inputs
    :param np.ndarray|None input_bounds: 2 x input_dim, minimum and maximum of the
        training inputs
    :param tuple[float] log_likelihood_trace: mean log-likelihood per EM iteration
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    input_dim: int
    input_bounds: np.ndarray = None
    log_likelihood_trace: tuple = ()

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        means = np.array(self.means, dtype=np.float64)
        covariances = np.array(self.covariances, dtype=np.float64)
        K = weights.shape[0]
        assert means.ndim == 2 and means.shape[0] == K, "means must be K x D"
        D = means.shape[1]
        assert covariances.shape == (K, D, D), "covariances must be K x D x D"
        assert 0 < self.input_dim < D, "need at least one input and one output"
        if abs(weights.sum() - 1.0) > 1e-12 or np.any(weights <= 0):
            raise ValueError("mixing weights must be positive and sum to one")
        if np.max(np.abs(covariances - covariances.transpose(0, 2, 1))) > 1e-12:
            raise ValueError("covariances must be symmetric")
        for arr in (weights, means, covariances):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covariances", covariances)
        if self.input_bounds is not None:
            bounds = np.array(self.input_bounds, dtype=np.float64)
            assert bounds.shape == (2, self.input_dim), "bounds must be 2 x input_dim"
            bounds.setflags(write=False)
            object.__setattr__(self, "input_bounds", bounds)
        object.__setattr__(
            self,
            "log_likelihood_trace",
            tuple(float(v) for v in self.log_likelihood_trace),
        )

    @property
    def K(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def output_dim(self):
        return self.dim - self.input_dim

    def inside_bounds(self, x):
        if self.input_bounds is None:
            return True
        x = np.asarray(x, dtype=np.float64)
        low, high = self.input_bounds
        return bool(np.all(x >= low) and np.all(x <= high))


def _log_gaussian(X, mean, cov):
    """
    :param np.ndarray X: N x D
    :return: log densities of all rows
    :rtype: np.ndarray
    """
    try:
        chol = scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError as e:
        raise DegenerateComponent("covariance is not positive definite: %s" % e)
    sol = scipy.linalg.solve_triangular(chol, (X - mean).T, lower=True)
    return (
        -0.5 * np.sum(sol ** 2, axis=0)
        - np.sum(np.log(np.diag(chol)))
        - 0.5 * X.shape[1] * math.log(2 * math.pi)
    )


def _weighted_log_densities(X, weights, means, covariances):
    log_prob = np.empty((X.shape[0], weights.shape[0]))
    for k in range(weights.shape[0]):
        log_prob[:, k] = math.log(weights[k]) + _log_gaussian(
            X, means[k], covariances[k]
        )
    return log_prob


def _e_step(X, weights, means, covariances):
    log_prob = _weighted_log_densities(X, weights, means, covariances)
    log_norm = logsumexp(log_prob, axis=1)
    return np.exp(log_prob - log_norm[:, None]), float(np.mean(log_norm))


def _m_step(X, resp, reg):
    N, D = X.shape
    mass = resp.sum(axis=0)
    if np.any(mass < MIN_COMPONENT_MASS):
        raise DegenerateComponent(
            "component %d lost its responsibility mass" % int(np.argmin(mass))
        )
    weights = mass / N
    weights = weights / weights.sum()
    means = (resp.T @ X) / mass[:, None]
    covariances = np.empty((resp.shape[1], D, D))
    for k in range(resp.shape[1]):
        diff = X - means[k]
        cov = (resp[:, k, None] * diff).T @ diff / mass[k] + reg * np.eye(D)
        covariances[k] = 0.5 * (cov + cov.T)
    return weights, means, covariances


def _fit(X, K, seed, input_dim):
    kmeans = KMeans(n_clusters=K, n_init=KMEANS_RESTARTS, random_state=seed)
    labels = kmeans.fit(X).labels_
    resp = np.zeros((X.shape[0], K))
    resp[np.arange(X.shape[0]), labels] = 1.0
    reg = REGULARIZATION_SCALE * max(float(np.mean(np.var(X, axis=0))), 1e-12)

    weights, means, covariances = _m_step(X, resp, reg)
    resp, ll = _e_step(X, weights, means, covariances)
    trace = [ll]
    for iteration in range(MAX_ITERATIONS):
        weights, means, covariances = _m_step(X, resp, reg)
        resp, new_ll = _e_step(X, weights, means, covariances)
        trace.append(new_ll)
        converged = new_ll - ll < CONVERGENCE_TOLERANCE
        ll = new_ll
        if converged:
            break
    logging.info(
        "EM with %d components stopped after %d iterations, mean log-likelihood %.6f"
        % (K, iteration + 1, ll)
    )
    inputs = X[:, :input_dim]
    bounds = np.stack([inputs.min(axis=0), inputs.max(axis=0)])
    return GaussianMixture(
        weights=weights,
        means=means,
        covariances=covariances,
        input_dim=input_dim,
        input_bounds=bounds,
        log_likelihood_trace=trace,
    )


def fit_gmm(data, K, seed, input_dim=None):
    """
    :param np.ndarray data: N x D samples
    :param int K: number of components
    :param int seed: seed of the K-means initialisation
    :param int|None input_dim: number of leading regression input dimensions,
        defaults to all but the last dimension
    :rtype: GaussianMixture
    """
    X = np.asarray(data, dtype=np.float64)
    assert X.ndim == 2 and X.shape[1] >= 2, "data must be N x D with D >= 2"
    assert K >= 1, "need at least one component"
    if X.shape[0] < SAMPLES_PER_COMPONENT * K:
        raise InsufficientData(
            "%d samples are not enough for %d components" % (X.shape[0], K)
        )
    if input_dim is None:
        input_dim = X.shape[1] - 1
    try:
        return _fit(X, K, seed, input_dim)
    except DegenerateComponent as e:
        logging.warning("%s, restarting with seed %d" % (e, seed + 1))
        return _fit(X, K, seed + 1, input_dim)


def log_likelihood(gmm, data):
    """
    :return: total log-likelihood of the samples
    :rtype: float
    """
    X = np.asarray(data, dtype=np.float64)
    log_prob = _weighted_log_densities(X, gmm.weights, gmm.means, gmm.covariances)
    return float(np.sum(logsumexp(log_prob, axis=1)))


def num_parameters(K, D):
    return K - 1 + K * D + K * D * (D + 1) // 2


def bic(gmm, data):
    X = np.asarray(data, dtype=np.float64)
    return -2.0 * log_likelihood(gmm, X) + num_parameters(gmm.K, gmm.dim) * math.log(
        X.shape[0]
    )


def select_k_bic(data, k_range, seed, input_dim=None):
    """
    :param np.ndarray data:
    :param Iterable[int] k_range: candidate component counts
    :param int seed:
    :return: component count with the lowest BIC, the smaller count on ties
    :rtype: int
    """
    candidates = sorted(set(int(k) for k in k_range))
    assert candidates, "need at least one candidate component count"
    best_k, best_score = None, math.inf
    for k in candidates:
        score = bic(fit_gmm(data, k, seed, input_dim=input_dim), data)
        logging.info("BIC for %d components: %.4f" % (k, score))
        if score < best_score:
            best_k, best_score = k, score
    return best_k


def gmr_responsibilities(gmm, x):
    """
    :param GaussianMixture gmm:
    :param np.ndarray x: input vector of size ``gmm.input_dim``
    :return: responsibility of every component for the input
    :rtype: np.ndarray
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    assert x.shape == (gmm.input_dim,), "input must have %d entries" % gmm.input_dim
    if not np.all(np.isfinite(x)):
        raise NumericalUnderflow("regression input is not finite: %s" % x)
    i = gmm.input_dim
    log_h = np.array(
        [
            math.log(gmm.weights[k])
            + _log_gaussian(x[None, :], gmm.means[k, :i], gmm.covariances[k, :i, :i])[0]
            for k in range(gmm.K)
        ]
    )
    norm = logsumexp(log_h)
    if not np.isfinite(norm):
        raise NumericalUnderflow("all responsibilities vanish for input %s" % x)
    return np.exp(log_h - norm)


def gmr_condition(gmm, x):
    """
    Conditions the mixture on its input block.

    :param GaussianMixture gmm:
    :param np.ndarray x: input vector
    :return: mean and covariance of the output block
    :rtype: (np.ndarray, np.ndarray)
    """
    h = gmr_responsibilities(gmm, x)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    i = gmm.input_dim
    means = np.empty((gmm.K, gmm.output_dim))
    covariances = np.empty((gmm.K, gmm.output_dim, gmm.output_dim))
    for k in range(gmm.K):
        mu_i = gmm.means[k, :i]
        mu_o = gmm.means[k, i:]
        sigma_ii = gmm.covariances[k, :i, :i]
        sigma_oi = gmm.covariances[k, i:, :i]
        sigma_oo = gmm.covariances[k, i:, i:]
        means[k] = mu_o + sigma_oi @ np.linalg.solve(sigma_ii, x - mu_i)
        covariances[k] = sigma_oo - sigma_oi @ np.linalg.solve(sigma_ii, sigma_oi.T)
    mean = h @ means
    outer = np.einsum("ki,kj->kij", means, means)
    second_moment = np.einsum("k,kij->ij", h, covariances + outer)
    cov = second_moment - np.outer(mean, mean)
    return mean, 0.5 * (cov + cov.T)
