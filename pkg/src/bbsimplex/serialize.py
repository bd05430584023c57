"""Writes problems in the CPLEX LP text format.

Layout:
```
\\ Problem: <name>
\\ Objective offset: <constant>
Maximize|Minimize
 obj: 3 x1 + 2 x2
Subject To
 c0: x1 + 2 x2 <= 4
Bounds
 x1 <= 10
General
 x1
End
```
Names are reduced to letters, digits and underscores, must not start with
a digit or the letter e, and are de-duplicated with a numeric suffix.
Lines are wrapped before 255 characters.
"""

import re
from typing import Iterable, List, Set

import numpy as np

from bbsimplex import constants
from bbsimplex.problem import MilpProblem

_MAX_LINE = 250
_INVALID_CHARS = re.compile(r'[^A-Za-z0-9_]')


def sanitize_names(names: Iterable[str], prefix: str) -> List[str]:
    """Maps arbitrary names to unique LP-format identifiers."""
    used: Set[str] = set()
    result = []
    for name in names:
        clean = _INVALID_CHARS.sub('_', name) or prefix
        if clean[0].isdigit() or clean[0] in 'eE':
            clean = f'{prefix}_{clean}'
        candidate, suffix = clean, 0
        while candidate in used:
            suffix += 1
            candidate = f'{clean}_{suffix}'
        used.add(candidate)
        result.append(candidate)
    return result


def _format_number(value: float) -> str:
    return f'{value:.12g}'


def _expression(coefs: np.ndarray, cols: np.ndarray,
                names: List[str]) -> List[str]:
    terms = []
    for col, coef in zip(cols, coefs):
        sign = '-' if coef < 0 else '+'
        magnitude = abs(coef)
        body = names[col] if magnitude == 1 else \
            f'{_format_number(magnitude)} {names[col]}'
        terms.append(f'{sign} {body}')
    if not terms:
        return ['0 ' + names[0]] if names else ['0']
    if terms[0].startswith('+ '):
        terms[0] = terms[0][2:]
    return terms


def _wrap(head: str, terms: List[str], tail: str = '') -> List[str]:
    lines = []
    line = head
    for term in terms + ([tail] if tail else []):
        if len(line) + len(term) + 1 > _MAX_LINE:
            lines.append(line)
            line = '   '
        line += ' ' + term
    lines.append(line)
    return lines


def to_lp_format(problem: MilpProblem) -> str:
    """Renders the problem as LP-format text."""
    var_names = sanitize_names(problem.variable_names, 'x')
    row_names = sanitize_names(problem.constraint_names, 'c')
    lines = [f'\\ Problem: {problem.name}']
    if problem.objective_offset:
        lines.append(
            f'\\ Objective offset: {_format_number(problem.objective_offset)}')
    lines.append('Maximize' if problem.maximize else 'Minimize')
    cols = np.flatnonzero(problem.objective)
    lines += _wrap(' obj:', _expression(problem.objective[cols], cols,
                                        var_names))
    lines.append('Subject To')
    matrix = problem.matrix.tocsr()
    for row, name in enumerate(row_names):
        start, end = matrix.indptr[row], matrix.indptr[row + 1]
        terms = _expression(matrix.data[start:end],
                            matrix.indices[start:end], var_names)
        relation = problem.relations[row]
        if relation == constants.EQUAL:
            relation = '='
        lines += _wrap(f' {name}:', terms,
                       f'{relation} {_format_number(problem.rhs[row])}')
    bounded = np.flatnonzero(np.isfinite(problem.upper))
    if len(bounded):
        lines.append('Bounds')
        for col in bounded:
            lines.append(
                f' {var_names[col]} <= {_format_number(problem.upper[col])}')
    integers = np.flatnonzero(problem.integer)
    if len(integers):
        lines.append('General')
        lines += _wrap('', [var_names[col] for col in integers])
    lines.append('End')
    return '\n'.join(lines) + '\n'
