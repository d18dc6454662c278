"""Side-by-side numbers for the places where the printed formulas and the
computed ones part ways: the inductive ladder step, the A_m convention, the
lower-order coefficient of E and the critical gamma = 1/2 boundary value.
"""

from __future__ import annotations

import numpy as np

from fraclap import descend_ladder, make_params
from fraclap import extension as ext
from fraclap.jets.geometry import WarpedModel, compute_E, einstein_closed_form
from fraclap.jets.scatter import ScatterSeries, general_boundary_dtn
from fraclap.jets.series import GradedSeries


def ladder():
    p = make_params(3, 1.25)
    h = 1.0
    print("ladder step, gamma=1.25: A_m c_m h_m =", p.A_m * p.c_m * h)
    print("  corrected walk:", descend_ladder(p, h), " printed walk:", descend_ladder(p, h, "stated"))
    pm1 = make_params(3, 0.25)
    mesh = ext.GradedMesh(20.0, 8192, ext.default_grading(pm1))
    rep = ext.check_downshift(ext.solve_mode(1.0, p, mesh), ext.solve_mode(1.0, pm1, mesh))
    print(f"  independent solves: corrected defect {rep.ladder_corrected:.2e}, "
          f"printed defect {rep.ladder_stated:.2e}")


def convention():
    p = make_params(3, 1.25)
    prof = ext.solve_mode(2.0, p, ext.GradedMesh.for_mode(2.0, p, 8192))
    for conv in ("proof", "stated"):
        print(f"A_m {conv:<6}: P = {ext.dtn_iterated_extract(prof, convention=conv).p_gamma_value:.9f}"
              f"  (exact {2 ** 2.5:.9f})")


def lower_order_term():
    for g in (0.3, 0.5):
        p = make_params(3, g)
        model = WarpedModel.from_coefficients(3, g, [1.0, 0.0, 0.5], 6.0)
        E = compute_E(model, GradedSeries.variable(g, 7.0), p, "E1").coefficient_at(2.0)
        for which in ("derived", "printed"):
            c = einstein_closed_form(model, p, which).coefficient_at(2.0)
            print(f"E y^(2-a) at y^2, gamma={g}: computed {E:+.6f}  {which} {c:+.6f}")


def critical():
    p = make_params(3, 0.5)
    S = ScatterSeries.random(p, np.random.default_rng(0))
    r = general_boundary_dtn(S, 0.2, p)
    print(f"gamma=1/2, Psi0=0.2: statement gives {r.p_gamma:+.6f}, d h = {r.p_scattering:+.6f}")


if __name__ == "__main__":
    ladder()
    convention()
    lower_order_term()
    critical()
