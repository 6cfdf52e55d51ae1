"""Brute-force reference implementations, written without the package's code paths."""
from collections import Counter
from itertools import product


def words(d, n):
    """All words of length n over 0..d-1 in encoding order (first letter most significant)."""
    return [tuple(w) for w in product(range(d), repeat=n)]


def encode(word, d):
    code = 0
    for x in word:
        code = code * d + x
    return code


def odometer_word(word, d):
    """Add one to the first letter and carry to the right."""
    out = list(word)
    for i in range(len(out)):
        out[i] += 1
        if out[i] < d:
            break
        out[i] = 0
    return tuple(out)


def odometer_table(d, n):
    return [encode(odometer_word(w, d), d) for w in words(d, n)]


def orbit_lengths(table):
    """Length of the cycle through each point, by walking."""
    out = [0] * len(table)
    for start in range(len(table)):
        if out[start]:
            continue
        cycle = [start]
        x = table[start]
        while x != start:
            cycle.append(x)
            x = table[x]
        for y in cycle:
            out[y] = len(cycle)
    return out


def cycle_type(table):
    lengths = orbit_lengths(table)
    counts = Counter(lengths)
    return {length: c // length for length, c in counts.items()}


def affine_orbit_lengths(m, k, mod):
    return orbit_lengths([(m + k * j) % mod for j in range(mod)])


def order(table):
    from math import lcm

    return lcm(*orbit_lengths(table))


def compose_tables(f, g):
    return [f[g[x]] for x in range(len(g))]
