"""Seeded exponential draws and the order/scaling facts they rely on."""
import numpy as np

from .._random import derive_seed, uniform_array


def exp_draw(rate, seed, index=0):
    """t ~ Exp(rate) by inverse CDF of a counter-mode uniform."""
    u = uniform_array(derive_seed("exp", seed), np.array([index]))[0]
    return float(-np.log(u) / rate)


def exp_draws(rates, seed):
    rates = np.asarray(rates, dtype=float)
    u = uniform_array(derive_seed("exp", seed), np.arange(rates.size)).reshape(rates.shape)
    return -np.log(u) / rates


def exp_argmax_distribution_check(rates, trials, seed=0):
    """Empirical frequency with which coordinate i attains max_j 1/t_j.

    With t_j ~ Exp(rate_j), argmin_j t_j (equivalently argmax 1/t_j) is i with
    probability rate_i / sum(rates).
    """
    rates = np.asarray(rates, dtype=float)
    if np.any(rates <= 0):
        raise ValueError("rates must be positive")
    n = rates.size
    u = uniform_array(derive_seed("exp-argmax", seed), np.arange(trials * n)).reshape(trials, n)
    t = -np.log(u) / rates
    return np.bincount(np.argmin(t, axis=1), minlength=n) / trials
