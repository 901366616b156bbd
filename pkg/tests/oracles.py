"""Naive pure-python reference implementations of every pooling operator."""

import math


def naive_mean(seq):
    t, d = len(seq), len(seq[0])
    return [sum(seq[i][c] for i in range(t)) / t for c in range(d)]


def naive_mean_std(seq):
    t, d = len(seq), len(seq[0])
    mu = naive_mean(seq)
    out = list(mu)
    for c in range(d):
        var = sum((seq[i][c] - mu[c]) ** 2 for i in range(t)) / t
        out.append(math.sqrt(var) if var > 0 else 0.0)
    return out


def naive_weighted_stats(seq, w):
    t, d = len(seq), len(seq[0])
    mu = [sum(w[i] * seq[i][c] for i in range(t)) for c in range(d)]
    sigma = [[0.0] * d for _ in range(d)]
    for a in range(d):
        for b in range(d):
            sigma[a][b] = sum(w[i] * (seq[i][a] - mu[a]) * (seq[i][b] - mu[b]) for i in range(t))
    return mu, sigma


def naive_correlation(cov, eps):
    n = len(cov)
    s = [math.sqrt(cov[i][i]) if cov[i][i] > 0 else 0.0 for i in range(n)]
    return [[cov[i][j] / (s[i] * s[j] + eps) for j in range(n)] for i in range(n)]


def naive_vectorize(c):
    n = len(c)
    return [c[i][j] for i in range(n) for j in range(i + 1, n)]


def naive_corr_pool(seq, eps):
    t = len(seq)
    _, sigma = naive_weighted_stats(seq, [1.0 / t] * t)
    return naive_vectorize(naive_correlation(sigma, eps))


def naive_layer_pool(stack, logits):
    ex = [math.exp(x - max(logits)) for x in logits]
    g = [e / sum(ex) for e in ex]
    n_layers, t, d = len(stack), len(stack[0]), len(stack[0][0])
    out = [[0.0] * d for _ in range(t)]
    for layer in range(n_layers):
        for i in range(t):
            for c in range(d):
                out[i][c] += g[layer] * stack[layer][i][c]
    return out
