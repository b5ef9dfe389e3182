"""Independent brute-force reference implementations used to check the
package's metrics and sampler. Deliberately written with plain loops and
dicts so they share no code path with the implementations under test."""

import math


def ngram_list(tokens, n):
    out = []
    for i in range(len(tokens)):
        if i + n <= len(tokens):
            out.append(tuple(tokens[i : i + n]))
    return out


def bleu_reference(candidates, references, max_order):
    """Corpus BLEU, uniform weights, clipped counts, brevity penalty,
    add-one smoothing on orders >= 2."""
    cand_total_len = 0
    ref_total_len = 0
    clipped = {}
    totals = {}
    for order in range(1, max_order + 1):
        clipped[order] = 0
        totals[order] = 0
    for cand, ref in zip(candidates, references):
        cand_total_len += len(cand)
        ref_total_len += len(ref)
        for order in range(1, max_order + 1):
            cand_counts = {}
            for g in ngram_list(cand, order):
                cand_counts[g] = cand_counts.get(g, 0) + 1
            ref_counts = {}
            for g in ngram_list(ref, order):
                ref_counts[g] = ref_counts.get(g, 0) + 1
            totals[order] += len(ngram_list(cand, order))
            for g, c in cand_counts.items():
                clipped[order] += min(c, ref_counts.get(g, 0))

    log_precision = 0.0
    for order in range(1, max_order + 1):
        m = clipped[order]
        t = totals[order]
        if order >= 2:
            m += 1
            t += 1
        if t == 0 or m == 0:
            return 0.0
        log_precision += math.log(m / t) / max_order
    if cand_total_len == 0:
        return 0.0
    if cand_total_len >= ref_total_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_total_len / cand_total_len)
    return bp * math.exp(log_precision)


def distinct_reference(candidates, n):
    seen = {}
    total = 0
    for cand in candidates:
        for g in ngram_list(cand, n):
            seen[g] = True
            total += 1
    return len(seen) / total


def nucleus_support_reference(probs, top_p):
    """Sort-and-scan: smallest descending-probability prefix whose mass
    reaches top_p, boundary included; ties broken toward lower index."""
    indexed = sorted(range(len(probs)), key=lambda i: (-probs[i], i))
    mass = 0.0
    support = []
    for i in indexed:
        support.append(i)
        mass += probs[i]
        if mass >= top_p:
            break
    return set(support)


def binomial_sf(successes, n, p):
    """P(X >= successes) for X ~ Binomial(n, p), exact."""
    return sum(
        math.comb(n, s) * p**s * (1.0 - p) ** (n - s) for s in range(successes, n + 1)
    )
