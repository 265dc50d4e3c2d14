import numpy as np
import pytest

from conealign.cones import Provenance, SubconeGenerators, cone_contains, extract_generators
from conealign.problems import DenseBlp, InvalidSolutionError

from conftest import knapsack_problem, make_gen, single_box_problem


class TestExtractGenerators:
    def test_single_variable_at_zero(self):
        gens = extract_generators(single_box_problem(), np.array([0.0]))
        np.testing.assert_array_equal(gens.rows, [[1.0]])
        assert gens.provenance == (Provenance("lower_bound", 0),)

    def test_single_variable_at_one(self):
        gens = extract_generators(single_box_problem(), np.array([1.0]))
        np.testing.assert_array_equal(gens.rows, [[-1.0]])
        assert gens.provenance == (Provenance("upper_bound", 0),)

    def test_knapsack_rows_and_provenance(self):
        gens = extract_generators(knapsack_problem(), np.array([0.0, 1.0]))
        expected = {
            (-2.0 / np.sqrt(13.0), -3.0 / np.sqrt(13.0)),
            (1.0, 0.0),
            (0.0, -1.0),
        }
        got = {tuple(np.round(r, 12)) for r in gens.rows}
        assert got == {tuple(np.round(np.array(r), 12)) for r in expected}
        kinds = {p.kind for p in gens.provenance}
        assert kinds == {"inequality", "lower_bound", "upper_bound"}

    def test_knapsack_cone_members_keep_solution_optimal(self, rng):
        # derived check: any nonnegative combination of the generators is a cost
        # for which (0,1) attains the minimum over the 3 feasible points
        problem = knapsack_problem()
        w_star = np.array([0.0, 1.0])
        gens = extract_generators(problem, w_star)
        feasible = [np.array(p, dtype=float) for p in [(0, 0), (1, 0), (0, 1)]]
        for _ in range(1000):
            lam = rng.uniform(0.0, 1.0, gens.m)
            c = gens.rows.T @ lam
            best = min(float(c @ p) for p in feasible)
            assert float(c @ w_star) <= best + 1e-9

    def test_rows_are_unit_norm(self, rng):
        problem = DenseBlp(4, A=rng.standard_normal((3, 4)) * 2, b=np.full(3, 10.0))
        w = problem.solve(rng.standard_normal(4))
        gens = extract_generators(problem, w)
        np.testing.assert_allclose(np.linalg.norm(gens.rows, axis=1), 1.0, atol=1e-12)
        assert len(gens.provenance) == gens.m

    def test_non_binary_rejected_with_diagnostic(self):
        with pytest.raises(InvalidSolutionError, match="variable 0"):
            extract_generators(single_box_problem(), np.array([0.4]))

    def test_infeasible_rejected_with_diagnostic(self):
        with pytest.raises(InvalidSolutionError, match="inequality row 0"):
            extract_generators(knapsack_problem(), np.array([1.0, 1.0]))

    def test_bad_tol_rejected(self):
        with pytest.raises(ValueError, match="tol"):
            extract_generators(single_box_problem(), np.array([0.0]), tol=0.0)

    def test_rows_are_immutable(self):
        gens = extract_generators(single_box_problem(), np.array([0.0]))
        with pytest.raises(ValueError):
            gens.rows[0, 0] = 5.0


class TestConeContains:
    def test_conic_combination_inside(self):
        gen = make_gen(np.eye(2))
        res = cone_contains(gen, np.array([1.0, 1.0]))
        assert res.inside and res.residual == pytest.approx(0.0, abs=1e-7)

    def test_antipodal_ray_outside(self):
        gen = make_gen(np.eye(2))
        res = cone_contains(gen, np.array([-1.0, 0.0]))
        assert not res.inside
        assert res.residual == pytest.approx(1.0, abs=1e-7)

    def test_knapsack_minimization_cost_inside(self):
        problem = knapsack_problem()
        c = np.array([-1.0, -2.0])
        w_star = problem.solve(c)
        # enumeration over all four binary points confirms (0,1) is optimal
        objs = {
            tuple(w): float(c @ np.array(w))
            for w in [(0, 0), (0, 1), (1, 0), (1, 1)]
            if 2 * w[0] + 3 * w[1] <= 3
        }
        assert min(objs, key=objs.get) == (0, 1)
        np.testing.assert_array_equal(w_star, [0.0, 1.0])
        gens = extract_generators(problem, w_star)
        assert cone_contains(gens, c).inside

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            cone_contains(make_gen(np.eye(2)), np.ones(3))

    def test_lambda_certificate_nonnegative(self, rng):
        gen = make_gen(rng.standard_normal((5, 4)))
        res = cone_contains(gen, rng.standard_normal(4))
        assert np.all(res.lam >= 0.0)


class TestInvariants:
    def test_soundness_random_dense_problems(self, rng):
        # any sampled cone member must reproduce the optimal objective exactly
        for _ in range(5):
            d = int(rng.integers(2, 7))
            problem = DenseBlp(
                d,
                A=rng.standard_normal((2, d)),
                b=rng.uniform(1.0, 3.0, 2),
            )
            c0 = rng.standard_normal(d)
            w_star = problem.solve(c0)
            gens = extract_generators(problem, w_star)
            for _ in range(100):
                lam = rng.uniform(0.0, 1.0, gens.m)
                v = gens.rows.T @ lam
                w = problem.solve(v)
                assert float(v @ w) == pytest.approx(float(v @ w_star), abs=1e-8)

    def test_box_only_completeness(self, rng):
        d = 6
        problem = DenseBlp(d)
        w_star = (rng.random(d) < 0.5).astype(float)
        gens = extract_generators(problem, w_star)
        for _ in range(50):
            c = rng.standard_normal(d)
            matches = all(
                (c[i] >= 0 if w_star[i] == 0 else c[i] <= 0) for i in range(d)
            )
            assert cone_contains(gens, c).inside == matches

    def test_row_scaling_never_changes_membership(self, rng):
        for _ in range(20):
            m, d = int(rng.integers(2, 8)), int(rng.integers(2, 6))
            G = rng.standard_normal((m, d))
            gen = make_gen(G)
            scales = rng.uniform(0.1, 10.0, m)
            gen_scaled = make_gen(G * scales[:, None])
            c = rng.standard_normal(d)
            assert cone_contains(gen, c).inside == cone_contains(gen_scaled, c).inside


class TestTypes:
    def test_provenance_kind_validated(self):
        with pytest.raises(ValueError, match="provenance"):
            Provenance("outer_bound", 0)

    def test_generators_require_matching_tags(self):
        with pytest.raises(ValueError, match="provenance"):
            SubconeGenerators(rows=np.eye(2), provenance=(Provenance("inequality", 0),))

    def test_generators_require_rows(self):
        with pytest.raises(ValueError, match="at least one"):
            SubconeGenerators(rows=np.zeros((0, 3)), provenance=())
