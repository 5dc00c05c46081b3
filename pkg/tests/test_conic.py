import numpy as np
import pytest

from src.conic import (Affine, ConeKind, ConicModel, SolveStatus, SolverTolerances, block_residuals, dump_program,
                       embed_hermitian, real_stack, scalar_product, solve)
from tests.conftest import random_hermitian


class TestAffine:
    def test_value_of_variable_and_constant(self):
        x = Affine.variable(0, (2, 1))
        expr = x * 2.0 + np.array([[1.0], [1j]])
        np.testing.assert_allclose(expr.value([3.0, -1.0]), [[7.0], [-2.0 + 1j]])

    def test_matmul_both_sides(self):
        X = Affine.variable(0, (2, 2))
        K = np.array([[1.0, 2.0], [0.0, 1j]])
        vals = np.arange(4.0)
        np.testing.assert_allclose((X @ K).value(vals), vals.reshape(2, 2) @ K)
        np.testing.assert_allclose((K @ X).value(vals), K @ vals.reshape(2, 2))

    def test_hermitian_transpose(self):
        z = Affine.variable(0, (2, 1)) * (1 + 1j)
        np.testing.assert_allclose(z.H.value([1.0, 2.0]), [[1 - 1j, 2 - 2j]])

    def test_product_of_variables_is_rejected(self):
        x = Affine.variable(0, (1, 1))
        with pytest.raises(TypeError):
            x * Affine.variable(1, (1, 1))
        with pytest.raises(TypeError):
            scalar_product(x, Affine.variable(1, (2, 1)))

    def test_bmat_places_blocks(self):
        a = Affine.variable(0, (1, 1))
        M = Affine.bmat([[a, np.zeros((1, 2))], [np.ones((2, 1)), np.eye(2)]])
        value = M.value([5.0])
        assert value.shape == (3, 3)
        assert value[0, 0] == 5.0
        np.testing.assert_allclose(value[1:, 1:], np.eye(2))

    def test_variable_value_needs_assignment(self):
        with pytest.raises(ValueError):
            Affine.variable(0, (1, 1)).value()

    def test_real_stack(self):
        z = Affine.constant(np.array([[1 + 2j], [3 - 1j]]))
        np.testing.assert_allclose(real_stack(z).value().ravel(), [1, 3, 2, -1])


class TestHermitianEmbedding:
    def test_eigenvalues_double(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 5))
            H = random_hermitian(rng, n)
            eig = np.linalg.eigvalsh(H)
            emb = np.linalg.eigvalsh(embed_hermitian(H))
            np.testing.assert_allclose(emb, np.sort(np.repeat(eig, 2)), atol=1e-9)

    def test_psd_equivalence(self, rng):
        for _ in range(200):
            H = random_hermitian(rng, 3)
            assert (np.linalg.eigvalsh(H)[0] >= 0) == (np.linalg.eigvalsh(embed_hermitian(H))[0] >= -1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            embed_hermitian(np.array([[0, 1], [0, 0]]))


class TestModelAndSolve:
    def test_linear_program(self):
        m = ConicModel("lp")
        x = m.real("x", (2, 1))
        m.add_nonneg(x, "x>=0")
        m.add_nonneg(1.0 - x.sum(), "budget")
        m.maximize(np.array([[1.0, 2.0]]) @ x)
        sol = solve(m.build())
        assert sol.status is SolveStatus.OPTIMAL
        np.testing.assert_allclose(sol.primal, [0.0, 1.0], atol=1e-6)
        assert sol.objective_value == pytest.approx(2.0, abs=1e-6)

    def test_second_order_cone(self):
        m = ConicModel("soc")
        t = m.real("t")
        m.add_soc(t, np.array([[3.0], [4.0]]) + Affine.zeros((2, 1)), "norm")
        m.minimize(t)
        sol = solve(m.build())
        assert sol.ok
        assert sol.objective_value == pytest.approx(5.0, abs=1e-5)

    def test_complex_psd_block(self):
        # smallest t with [[t, 1+1j], [1-1j, 1]] PSD is |1+1j|^2 = 2
        m = ConicModel("psd")
        t = m.real("t")
        M = Affine.bmat([[t, np.array([[1 + 1j]])], [np.array([[1 - 1j]]), np.eye(1)]])
        m.add_psd(M, "schur")
        m.minimize(t)
        program = m.build()
        assert program.psd_blocks()[0].dim == 4
        sol = solve(program)
        assert sol.ok
        assert sol.objective_value == pytest.approx(2.0, abs=1e-5)

    def test_infeasible_status(self):
        m = ConicModel("bad")
        x = m.real("x")
        m.add_nonneg(x - 1.0, "x>=1")
        m.add_nonneg(-x, "x<=0")
        m.maximize(x)
        sol = solve(m.build())
        assert sol.status is SolveStatus.INFEASIBLE
        assert not sol.ok

    def test_residuals_flag_violations(self):
        m = ConicModel()
        x = m.real("x")
        m.add_nonneg(x, "x>=0")
        program = m.build()
        assert block_residuals(program, np.array([-1.0]))[0] > 0
        assert block_residuals(program, np.array([1.0]))[0] == 0

    def test_residuals_are_scaled_by_block_magnitude(self):
        m = ConicModel()
        x = m.real("x")
        m.add_nonneg(x, "x>=0")
        m.add_nonneg(x - 5.0, "x>=5")
        program = m.build()
        np.testing.assert_allclose(block_residuals(program, np.array([-2.0])), [2.0 / 3.0, 7.0 / 6.0])
        np.testing.assert_allclose(block_residuals(program, np.array([3.0])), [0.0, 2.0 / 6.0])

    def test_tolerances_validated(self):
        with pytest.raises(ValueError):
            SolverTolerances(feasibility=0)

    def test_dump_program(self, tmp_path):
        m = ConicModel("dump")
        x = m.real("x", (2, 1))
        m.add_soc(1.0, x, "ball")
        m.maximize(x[0, 0])
        path = tmp_path / "program.txt"
        dump_program(m.build(), str(path))
        text = path.read_text()
        assert "num_vars 2" in text
        assert f"ball {ConeKind.SOC.value}" in text
