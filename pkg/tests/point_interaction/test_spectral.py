import numpy as np
import pytest

from point_interaction.core.errors import BracketError, DomainError, SpectralMarginError
from point_interaction.dirichlet import lambda0
from point_interaction.helmholtz import spectral_ceiling
from point_interaction.spectral import (
    CouplingAlpha,
    RootFunction,
    alpha_threshold,
    apply_resolvent,
    charge,
    discrete_green,
    eigenfunction,
    krein_denominator,
    principal_eigenvalue,
    root_sign_table,
    sign_changes,
)
from point_interaction.specfun import EULER_GAMMA, Branch, SpectralParameter


class TestCouplingAlpha:
    @pytest.mark.parametrize(
        ("raw", "expected"),
        [("inf", np.inf), ("+inf", np.inf), (" -INF ", -np.inf), ("1.5", 1.5), (-2, -2.0)],
    )
    def test_parse__spellings(self, raw, expected) -> None:
        assert CouplingAlpha.parse(raw).value == expected

    def test_parse__nan(self) -> None:
        with pytest.raises(DomainError):
            CouplingAlpha.parse(float("nan"))

    def test_str__infinite(self) -> None:
        assert str(CouplingAlpha.parse("-inf")) == "-inf"
        assert not CouplingAlpha.parse("inf").finite


class TestAlphaThreshold:
    def test_alpha_threshold__disk_centre(self, disk_grid, disk_basis, disk_centre) -> None:
        assert alpha_threshold(disk_grid, disk_basis, disk_centre) == pytest.approx(np.log(2.0) - EULER_GAMMA, abs=1e-8)

    def test_alpha_threshold__ball_centre(self, ball_grid, ball_basis) -> None:
        assert alpha_threshold(ball_grid, ball_basis, np.zeros(3)) == pytest.approx(-1.0 / (4.0 * np.pi), rel=1e-8)

    def test_root_function__2d_sign(self, disk_grid, disk_basis, disk_centre) -> None:
        function = RootFunction(disk_grid, disk_basis, disk_centre)
        assert function.sign == -1.0
        # g increases with y on the negative branch
        assert function.value(SpectralParameter.from_y(4.0)) > function.value(SpectralParameter.from_y(1.0))


class TestPrincipalEigenvalue:
    def test_principal_eigenvalue__ball_negative_branch(self, ball_grid, ball_basis) -> None:
        # alpha = -y coth(y) / (4 pi); y = 4 pi tanh(y) = 4 pi to double precision
        pe = principal_eigenvalue(ball_grid, ball_basis, np.zeros(3), -1.0)
        assert pe.branch == Branch.NEGATIVE_XI
        assert pe.xi == pytest.approx(-((4.0 * np.pi) ** 2), rel=1e-8)

    def test_principal_eigenvalue__ball_positive_branch(self, ball_grid, ball_basis) -> None:
        # alpha = -y cot(y) / (4 pi) vanishes at y = pi / 2
        pe = principal_eigenvalue(ball_grid, ball_basis, np.zeros(3), 0.0)
        assert pe.branch == Branch.POSITIVE_XI
        assert pe.xi == pytest.approx(np.pi**2 / 4.0, rel=1e-8)
        assert pe.residual <= 1e-8

    def test_principal_eigenvalue__ball_at_threshold(self, ball_grid, ball_basis) -> None:
        pe = principal_eigenvalue(ball_grid, ball_basis, np.zeros(3), -1.0 / (4.0 * np.pi))
        assert pe.branch == Branch.ZERO_XI
        assert pe.xi == 0.0

    def test_principal_eigenvalue__disk_branches(self, disk_grid, disk_basis, disk_centre) -> None:
        # Act
        above = principal_eigenvalue(disk_grid, disk_basis, disk_centre, 2.0)
        below = principal_eigenvalue(disk_grid, disk_basis, disk_centre, -2.0)

        # Assert
        assert above.branch == Branch.NEGATIVE_XI
        assert below.branch == Branch.POSITIVE_XI
        assert above.xi < 0 < below.xi < disk_basis.lambda0
        assert above.residual <= 1e-8
        assert below.residual <= 1e-8
        assert above.to_dict()["branch"] == "negative_xi"

    def test_principal_eigenvalue__decreasing_in_alpha_2d(self, disk_grid, disk_basis) -> None:
        x0 = np.array([0.2, -0.1])
        xis = [principal_eigenvalue(disk_grid, disk_basis, x0, alpha).xi for alpha in (-1.0, 0.5, 2.0)]
        assert xis[0] > xis[1] > xis[2]

    def test_principal_eigenvalue__infinite_alpha(self, disk_grid, disk_basis, disk_centre) -> None:
        with pytest.raises(DomainError):
            principal_eigenvalue(disk_grid, disk_basis, disk_centre, "inf")

    def test_principal_eigenvalue__no_bracket(self, disk_grid, disk_basis, disk_centre, mocker) -> None:
        # Arrange
        mocker.patch.object(RootFunction, "value", return_value=1e6)

        # Act
        with pytest.raises(BracketError) as e:
            principal_eigenvalue(disk_grid, disk_basis, disk_centre, -2.0)

        # Assert
        assert e.value.stage == "principal_eigenvalue"
        assert len(e.value.sign_table) > 0

    def test_root_sign_table__single_sign_change(self, disk_grid, disk_basis, disk_centre) -> None:
        xis = np.array([-400.0, -100.0, -25.0, -1.0, 0.0, 1.0, 3.0, 5.0])
        table = root_sign_table(disk_grid, disk_basis, disk_centre, 2.0, xis)
        assert [xi for xi, _ in table] == xis.tolist()
        assert sign_changes(table) == 1


class TestCharge:
    def test_krein_denominator__vanishes_at_the_pole(self, disk_grid, disk_basis) -> None:
        # Arrange
        x0 = np.array([0.2, 0.1])
        pe = principal_eigenvalue(disk_grid, disk_basis, x0, 2.0)

        # Act
        at_pole, _ = krein_denominator(disk_grid, disk_basis, x0, 2.0, -pe.xi)
        away, _ = krein_denominator(disk_grid, disk_basis, x0, 2.0, -pe.xi + 1.0)

        # Assert
        assert abs(at_pole) < 1e-8
        assert abs(away) > 1e-3

    def test_charge__inverse_denominator(self, disk_grid, disk_basis, disk_centre) -> None:
        result = charge(disk_grid, disk_basis, disk_centre, 2.0, 1.0)
        assert result.q == pytest.approx(1.0 / result.denominator)

    def test_charge__positive_branch_is_real_in_2d(self, disk_grid, disk_basis, disk_centre) -> None:
        result = charge(disk_grid, disk_basis, disk_centre, 2.0, -1.0)
        # Im ln(i y) = pi / 2 cancels 2 pi Im h = -pi / 2
        assert result.denominator.imag == pytest.approx(0.0, abs=1e-12)

    def test_charge__infinite_alpha(self, disk_grid, disk_basis, disk_centre) -> None:
        result = charge(disk_grid, disk_basis, disk_centre, "-inf", 1.0)
        assert result.q == 0

    def test_charge__2d_zero_energy(self, disk_grid, disk_basis, disk_centre) -> None:
        with pytest.raises(DomainError):
            charge(disk_grid, disk_basis, disk_centre, 2.0, 0.0)

    def test_charge__below_first_level(self, disk_grid, disk_basis, disk_centre) -> None:
        ceiling = spectral_ceiling(disk_grid, disk_basis)
        with pytest.raises(SpectralMarginError):
            charge(disk_grid, disk_basis, disk_centre, 2.0, -1.1 * ceiling)


class TestEigenfunction:
    def test_eigenfunction__positive_and_normalized(self, disk_grid, disk_basis) -> None:
        # Arrange
        x0 = np.array([0.2, 0.1])
        pe = principal_eigenvalue(disk_grid, disk_basis, x0, 2.0)

        # Act
        result = eigenfunction(disk_grid, disk_basis, x0, pe)

        # Assert
        assert result.positive
        assert result.boundary_trace < 1e-12
        assert result.residual < 1e-4
        assert result.continuum_gap < 0.25
        outside = np.linalg.norm(disk_grid.coords - x0, axis=1) >= 2.0 * disk_grid.spacing
        assert disk_grid.l2_norm(result.values[outside]) == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha", [2.0, -1.0])
    def test_eigenfunction__residual_is_the_discrete_operator_residual(self, disk_grid, disk_basis, alpha) -> None:
        # Arrange
        x0 = np.array([0.2, 0.1])
        pe = principal_eigenvalue(disk_grid, disk_basis, x0, alpha)
        far = np.linalg.norm(disk_grid.coords - x0, axis=1) > 5.0 * disk_grid.spacing

        # Act
        result = eigenfunction(disk_grid, disk_basis, x0, pe)

        # Assert
        applied = disk_grid.operator @ result.values - pe.xi * result.values
        expected = disk_grid.l2_norm(applied[far]) / disk_grid.l2_norm(result.values[far])
        assert result.residual == pytest.approx(expected, rel=1e-9, abs=1e-15)
        assert result.residual < 1e-4

    def test_eigenfunction__discrete_green_source(self, disk_grid) -> None:
        # Arrange
        x0 = np.array([0.2, 0.1])

        # Act
        values = discrete_green(disk_grid, x0, 1.0)

        # Assert
        applied = disk_grid.operator @ values + values
        assert np.sum(applied) * disk_grid.cell_volume == pytest.approx(1.0, rel=1e-9)
        assert np.all(values > 0)


class TestApplyResolvent:
    def test_apply_resolvent__unperturbed_ground_state(self, disk_grid, disk_basis, disk_centre) -> None:
        # Arrange
        level, _ = lambda0(disk_basis)
        psi0 = disk_basis.nodal_values()[:, 0]

        # Act
        result = apply_resolvent(disk_grid, disk_basis, disk_centre, "inf", 1.0, psi0)

        # Assert
        assert result.coefficient == 0.0
        assert result.values == pytest.approx(psi0 / (level + 1.0), abs=1e-8)

    def test_apply_resolvent__charge_term(self, disk_grid, disk_basis) -> None:
        x0 = np.array([0.2, 0.1])
        psi0 = disk_basis.nodal_values()[:, 0]
        result = apply_resolvent(disk_grid, disk_basis, x0, 2.0, 1.0, psi0)
        assert result.coefficient != 0.0
        assert result.norm > 0
        assert not np.allclose(result.values[np.isfinite(result.values)], result.free_part[np.isfinite(result.values)])
