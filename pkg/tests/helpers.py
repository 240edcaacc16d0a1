"""Shared helpers for the test suite."""

from loophier.rat import Q
from loophier.ring import RingContext, DiffPoly


def rand_q(rng, lo=-6, hi=6, den=4):
    n = rng.randint(lo, hi)
    d = rng.randint(1, den)
    return Q(n, d)


def rand_poly(rng, ring, n_terms=4, max_k=3, max_pow=2, max_eps=2,
              max_hbar=1, allow_i=True, allow_params=True, max_udeg=None):
    """Random polynomial in the given ring, possibly zero."""
    out = ring.zero()
    for _ in range(rng.randint(0, n_terms)):
        nfac = rng.randint(0, 3)
        fac = {}
        for _ in range(nfac):
            al = rng.randint(1, ring.n_vars)
            k = rng.randint(0, max_k)
            pw = rng.randint(1, max_pow)
            if max_udeg is not None:
                room = max_udeg - sum(fac.values())
                if room <= 0:
                    break
                pw = min(pw, room)
            fac[(al, k)] = fac.get((al, k), 0) + pw
        eps = rng.randint(0, max_eps)
        hbar = rng.randint(0, max_hbar) if ring.mode == "quantum" else 0
        params = {}
        if allow_params and ring.params and rng.random() < 0.4:
            name = rng.choice(ring.params)
            params[name] = rng.randint(1, 2)
        re = rand_q(rng)
        im = rand_q(rng) if allow_i and rng.random() < 0.4 else Q(0)
        if not re and not im:
            continue
        out = out + ring.monomial(
            (re, im), eps=eps, hbar=hbar,
            factors=tuple((a, k, p) for (a, k), p in sorted(fac.items())),
            params=tuple(sorted(params.items())))
    return out
