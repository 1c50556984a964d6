"""Syntactic matching and most-general unification."""

from __future__ import annotations

from typing import Optional

from .terms import App, Param, Quote, Term, Var, apply_subst, iter_subterms


def match(pattern: Term, subject: Term, sigma: Optional[dict] = None) -> Optional[dict]:
    """Return ``sigma`` with ``pattern·sigma == subject``, or ``None``.

    Variables occurring in ``subject`` are treated as constants.  A quoted
    pattern ``⟦b⟧`` binds ``b`` to the subject's quoted inner term, so
    quote-to-quote matching stays purely syntactic.
    """
    sigma = {} if sigma is None else dict(sigma)
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        tp = type(p)
        if tp is Var:
            bound = sigma.get(p)
            if bound is None:
                sigma[p] = s
            elif bound != s:
                return None
        elif tp is App:
            if type(s) is not App or s.fun != p.fun:
                return None
            stack.extend(zip(p.args, s.args))
        elif tp is Quote:
            if type(s) is not Quote:
                return None
            stack.append((p.inner, s.inner))
        elif p != s:
            return None
    return sigma


def _occurs(v: Var, t: Term) -> bool:
    return any(u == v for u in iter_subterms(t))


def _bg_compatible(t: Term) -> bool:
    # a background variable may only stand for parameter-free, quote-free terms
    # without foreground variables
    for u in iter_subterms(t):
        if type(u) is Param or type(u) is Quote:
            return False
        if type(u) is Var and not u.background:
            return False
    return True


def unify(s: Term, t: Term) -> Optional[dict]:
    """Most general unifier of ``s`` and ``t`` (idempotent), or ``None``."""
    sigma: dict = {}
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        a = apply_subst(a, sigma)
        b = apply_subst(b, sigma)
        if a == b:
            continue
        if type(a) is not Var and type(b) is Var:
            a, b = b, a
        if type(a) is Var:
            if type(b) is Var and a.background and not b.background:
                a, b = b, a
            if _occurs(a, b):
                return None
            if a.background and not _bg_compatible(b):
                return None
            step = {a: b}
            sigma = {v: apply_subst(u, step) for v, u in sigma.items()}
            sigma[a] = b
        elif type(a) is App and type(b) is App:
            if a.fun != b.fun:
                return None
            stack.extend(zip(a.args, b.args))
        elif type(a) is Quote and type(b) is Quote:
            stack.append((a.inner, b.inner))
        else:
            return None
    return sigma
