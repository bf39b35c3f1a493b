import numpy as np
import pytest

from fvrom.errors import FieldError
from fvrom.fields import BoundaryCondition, Field, homogeneous_like


class TestBoundaryCondition:
    def test_requires_datum_for_fixed_value(self):
        with pytest.raises(FieldError):
            BoundaryCondition("fixedValue")

    def test_rejects_datum_for_zero_gradient(self):
        with pytest.raises(FieldError):
            BoundaryCondition("zeroGradient", 1.0)

    def test_unknown_kind(self):
        with pytest.raises(FieldError):
            BoundaryCondition("bogus")

    def test_scaled(self):
        bc = BoundaryCondition("fixedValue", (2.0, -4.0))
        assert bc.scaled(0.5).value == (1.0, -2.0)
        assert BoundaryCondition("symmetry").scaled(3.0).kind == "symmetry"


class TestField:
    def test_bc_coverage_enforced(self, cavity8):
        with pytest.raises(FieldError, match="missing"):
            Field(cavity8, np.zeros(cavity8.n_cells), {"lid": BoundaryCondition("zeroGradient")})

    def test_extra_patch_rejected(self, cavity8):
        bcs = {
            "lid": BoundaryCondition("zeroGradient"),
            "walls": BoundaryCondition("zeroGradient"),
            "ghost": BoundaryCondition("zeroGradient"),
        }
        with pytest.raises(FieldError, match="extra"):
            Field(cavity8, np.zeros(cavity8.n_cells), bcs)

    def test_rank_mismatch_rejected(self, cavity8):
        bcs = {
            "lid": BoundaryCondition("fixedValue", (1.0, 0.0)),
            "walls": BoundaryCondition("zeroGradient"),
        }
        with pytest.raises(FieldError, match="rank"):
            Field(cavity8, np.zeros(cavity8.n_cells), bcs)

    def test_wrong_length_rejected(self, cavity8):
        bcs = {"lid": BoundaryCondition("zeroGradient"), "walls": BoundaryCondition("zeroGradient")}
        with pytest.raises(FieldError):
            Field(cavity8, np.zeros(cavity8.n_cells + 1), bcs)

    def test_flat_round_trip(self, cavity8):
        bcs = {"lid": BoundaryCondition("zeroGradient"), "walls": BoundaryCondition("zeroGradient")}
        rng = np.random.default_rng(0)
        f = Field(cavity8, rng.standard_normal((cavity8.n_cells, 2)), bcs)
        g = Field.from_flat(cavity8, f.flat(), bcs, "vector")
        np.testing.assert_array_equal(f.values, g.values)


class TestCombine:
    def test_datum_combines_linearly(self, cavity8):
        bcs = {
            "lid": BoundaryCondition("fixedValue", (1.0, 0.0)),
            "walls": BoundaryCondition("fixedValue", (0.0, 0.0)),
        }
        f1 = Field.uniform(cavity8, (1.0, 0.0), bcs)
        f2 = Field.uniform(cavity8, (0.0, 1.0), bcs)
        g = Field.combine([f1, f2], [2.0, -1.0])
        np.testing.assert_allclose(g.values, [2.0, -1.0] * np.ones((cavity8.n_cells, 2)))
        assert g.bcs["lid"].value == (1.0, 0.0)  # 2*(1,0) - 1*(1,0)
        assert g.bcs["walls"].value == (0.0, 0.0)

    def test_zero_gradient_passes_through(self, cavity8):
        bcs = {"lid": BoundaryCondition("zeroGradient"), "walls": BoundaryCondition("zeroGradient")}
        f1 = Field.uniform(cavity8, 1.0, bcs)
        g = Field.combine([f1, f1], [0.25, 0.25])
        assert g.bcs["lid"].kind == "zeroGradient"
        np.testing.assert_allclose(g.values, 0.5)

    def test_homogeneous_like(self):
        bcs = {
            "lid": BoundaryCondition("fixedValue", (1.0, 0.0)),
            "walls": BoundaryCondition("symmetry"),
        }
        h = homogeneous_like(bcs)
        assert h["lid"].value == (0.0, 0.0)
        assert h["walls"].kind == "symmetry"
