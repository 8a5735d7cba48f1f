"""CSV and JSON writers shared by the command-line tools.

Floats are written with 17 significant digits so values round-trip
exactly; files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from os import PathLike
from typing import Iterable, Iterator, Optional, Sequence, TextIO, Union

from .free_walk import GreenKernel
from .scattering import ScatteringMatrix

GREEN_HEADER = ("x", "re_r11", "im_r11", "re_r12", "im_r12",
                "re_r21", "im_r21", "re_r22", "im_r22")
SWEEP_HEADER = ("theta", "re_tau", "im_tau", "re_rho", "im_rho",
                "re_tau_tilde", "im_tau_tilde", "re_rho_tilde", "im_rho_tilde",
                "abs_tau_sq", "abs_rho_sq", "unitarity_defect")
STATE_HEADER = ("x", "re_psi_l", "im_psi_l", "re_psi_r", "im_psi_r")

PathOrNone = Optional[Union[str, PathLike]]


def fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


def _cplx(z: complex) -> list:
    return [z.real, z.imag]


def green_row(g: GreenKernel) -> list:
    row = [g.x]
    for z in (g.r11, g.r12, g.r21, g.r22):
        row.extend(_cplx(complex(z)))
    return row


def sweep_row(s: ScatteringMatrix) -> list:
    row = [s.theta]
    for z in (s.tau, s.rho, s.tau_tilde, s.rho_tilde):
        row.extend(_cplx(complex(z)))
    row += [abs(s.tau) ** 2, abs(s.rho) ** 2, s.unitarity_defect]
    return row


def state_rows(state) -> Iterator[list]:
    for x, (l, r) in zip(state.sites, state.values):
        yield [int(x), l.real, l.imag, r.real, r.imag]


@contextmanager
def open_output(path: PathOrNone) -> Iterator[TextIO]:
    """Open ``path`` for writing, or yield stdout when ``path`` is None or ``-``."""
    if path is None or str(path) == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_csv(path: PathOrNone, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    text = render_csv(header, rows)
    with open_output(path) as fh:
        fh.write(text)


def write_json(path: PathOrNone, doc) -> None:
    with open_output(path) as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def records(header: Sequence[str], rows: Iterable[Sequence]) -> list:
    """Rows as JSON-ready dicts, for ``--format json``."""
    return [dict(zip(header, row)) for row in rows]
