import math

import numpy as np
import pytest
import scipy.linalg as sla

from specflow.exceptions import NormalityError, NumericError, ParameterError
from specflow.models import CompactSet, SpaceKind
from specflow.services.spectra import (
    OperatorKind,
    OperatorModel,
    PathRecipe,
    SampledOperatorPath,
    branch_point_family,
    generate_path,
    haar_unitary,
    is_normal,
    is_unitary,
    operator_norm_power_iteration,
    operator_spectrum,
    random_hermitian,
    random_normal,
    refine,
    reparametrize,
    schatten_norm,
    verify_bhatia_davis,
    verify_bhatia_sinha,
    verify_hoffman_wielandt,
    verify_kato_selfadjoint,
)


class TestModels:
    def test_unitary_identity(self):
        model = OperatorModel.unitary_identity(3)
        assert model.space.kind == SpaceKind.CIRCLE
        assert operator_spectrum(np.eye(3), model).is_trivial

    def test_reference_must_match_kind(self):
        with pytest.raises(NormalityError):
            OperatorModel(dimension=2, kind=OperatorKind.UNITARY, reference=2 * np.eye(2),
                          essential_set=CompactSet.point("circle", 0.0))

    def test_reference_spectrum_inside_essential_set(self):
        with pytest.raises(ParameterError):
            OperatorModel(dimension=2, kind=OperatorKind.HERMITIAN, reference=np.diag([0.0, 3.0]),
                          essential_set=CompactSet.build("line", [(-1.0, 1.0)]))

    def test_arc_essential_set(self):
        model = OperatorModel(dimension=2, kind=OperatorKind.UNITARY, reference=np.eye(2),
                              essential_set=CompactSet.build("circle", [(-0.3, 0.3)]))
        S = operator_spectrum(np.diag(np.exp(1j * np.array([0.1, 2.0]))), model)
        assert S.rank == 1
        assert S.locations()[0] == pytest.approx(2.0)


class TestSpectrum:
    def test_hermitian_spectrum(self):
        model = OperatorModel.hermitian_zero(3)
        S = operator_spectrum(np.diag([1.0, 0.0, -2.0]), model)
        assert S.locations() == pytest.approx([-2.0, 1.0])

    def test_rejects_non_normal(self):
        with pytest.raises(NormalityError):
            operator_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]), OperatorModel.hermitian_zero(2))

    def test_rejects_normal_matrix_of_the_wrong_kind(self):
        rotation = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert is_normal(rotation)
        with pytest.raises(NormalityError):
            operator_spectrum(rotation, OperatorModel.hermitian_zero(2))

    def test_unitary_modulus_drift(self):
        with pytest.raises(NumericError):
            operator_spectrum(1.01 * np.eye(2), OperatorModel.unitary_identity(2))

    def test_schatten_norms(self):
        A = np.diag([3.0, -4.0])
        assert schatten_norm(A, 1.0) == pytest.approx(7.0)
        assert schatten_norm(A, 2.0) == pytest.approx(5.0)
        assert schatten_norm(A, math.inf) == pytest.approx(4.0)

    def test_power_iteration(self, rng):
        A = rng.standard_normal((6, 6))
        assert operator_norm_power_iteration(A, rng=rng) == pytest.approx(sla.svdvals(A)[0], rel=1e-6)
        assert operator_norm_power_iteration(np.zeros((3, 3))) == 0.0


class TestRandomMatrices:
    def test_generators(self, rng):
        for d in (2, 5, 9):
            assert is_unitary(haar_unitary(d, rng))
            H = random_hermitian(d, rng)
            assert np.allclose(H, H.conj().T)
            assert is_normal(random_normal(d, rng))


class TestInequalities:
    def test_bhatia_sinha(self, rng):
        for index in range(30):
            d = int(rng.integers(2, 9))
            U = haar_unitary(d, rng)
            V = U @ sla.expm(0.1j * random_hermitian(d, rng, scale=1.0 / math.sqrt(d))) if index % 2 else haar_unitary(d, rng)
            for p in (1.0, 2.0, math.inf):
                check = verify_bhatia_sinha(U, V, p, OperatorModel.unitary_identity(d))
                assert check.holds, (d, p, check)

    def test_hoffman_wielandt(self, rng):
        for _ in range(30):
            d = int(rng.integers(2, 9))
            check = verify_hoffman_wielandt(random_normal(d, rng), random_normal(d, rng))
            assert check.holds
            assert check.slack >= -1e-9

    def test_hoffman_wielandt_is_sharp_for_commuting_pairs(self, rng):
        Q = haar_unitary(4, rng)
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        N = (Q * a[None, :]) @ Q.conj().T
        M = (Q * b[None, :]) @ Q.conj().T
        check = verify_hoffman_wielandt(N, M)
        assert check.lhs <= np.linalg.norm(np.sort(a) - np.sort(b)) + 1e-9

    def test_kato(self, rng):
        for index in range(30):
            d = int(rng.integers(2, 9))
            H = random_hermitian(d, rng)
            G = H + 0.1 * random_hermitian(d, rng)
            for p in (1.0, 2.0, math.inf):
                assert verify_kato_selfadjoint(H, G, p, OperatorModel.hermitian_zero(d)).holds

    def test_bhatia_davis_commuting_only(self, rng):
        Q = haar_unitary(3, rng)
        N = (Q * np.array([1.0, 1j, -1.0])[None, :]) @ Q.conj().T
        M = (Q * np.array([0.5, 2j, -1.5])[None, :]) @ Q.conj().T
        assert verify_bhatia_davis(N, M, 2.0).holds
        with pytest.raises(ParameterError):
            verify_bhatia_davis(N, random_normal(3, rng), 2.0)

    def test_kind_checks(self, rng):
        with pytest.raises(NormalityError):
            verify_bhatia_sinha(2 * np.eye(2), np.eye(2), 2.0, OperatorModel.unitary_identity(2))


class TestPaths:
    def test_exp_loop_closes(self):
        model = OperatorModel.unitary_identity(4)
        path = generate_path(PathRecipe.exp_loop(np.diag([1.0, 0.0, 0.0, 0.0])), model, 16)
        assert path.meta["expected_sf"] == 1
        assert np.allclose(path.matrices[0], np.eye(4))
        assert np.allclose(path.matrices[-1], np.eye(4))
        assert len(path.spectra()) == 16

    def test_exp_loop_needs_integer_spectrum(self):
        with pytest.raises(ParameterError):
            generate_path(PathRecipe.exp_loop(np.diag([0.5, 0.0])), OperatorModel.unitary_identity(2), 8)

    def test_random_loop_is_seeded(self):
        model = OperatorModel.unitary_identity(3)
        first = generate_path(PathRecipe.random_loop(7), model, 12)
        second = generate_path(PathRecipe.random_loop(7), model, 12)
        assert all(np.array_equal(a, b) for a, b in zip(first.matrices, second.matrices))
        assert isinstance(first.meta["expected_sf"], int)

    def test_segment_reaches_end(self, rng):
        U, V = haar_unitary(3, rng), haar_unitary(3, rng)
        path = generate_path(PathRecipe.segment(U, V), OperatorModel.unitary_identity(3), 10)
        assert np.allclose(path.matrices[0], U)
        assert np.allclose(path.matrices[-1], V, atol=1e-8)

    def test_reparametrize_and_refine(self):
        model = OperatorModel.unitary_identity(2)
        recipe = PathRecipe.exp_loop(np.diag([1.0, 0.0]))
        squared = reparametrize(recipe, model, 9, lambda t: t ** 2)
        assert np.allclose(squared.matrices[3], np.diag([np.exp(2j * math.pi * (3 / 8) ** 2), 1.0]))
        assert len(refine(recipe, model, 9).params) == 17
        with pytest.raises(ParameterError):
            reparametrize(recipe, model, 9, lambda t: 1 - t)

    def test_reverse_and_concatenate(self):
        model = OperatorModel.unitary_identity(2)
        path = generate_path(PathRecipe.exp_loop(np.diag([1.0, 0.0])), model, 5)
        back = path.reversed()
        assert np.allclose(back.matrices[1], path.matrices[3])
        assert len(path.concatenate(back).params) == 9
        assert path.step_norms(2.0).shape == (4,)

    def test_path_validation(self):
        model = OperatorModel.unitary_identity(2)
        with pytest.raises(ParameterError):
            SampledOperatorPath(model=model, params=[0.0], matrices=[np.eye(2)])
        with pytest.raises(NormalityError):
            SampledOperatorPath(model=model, params=[0.0, 1.0], matrices=[np.eye(2), 2 * np.eye(2)])

    def test_branch_point_family(self):
        samples, params = branch_point_family(3)
        assert list(params) == [-1.0, 0.0, 1.0]
        assert samples[0].space.kind == SpaceKind.PLANE
        assert samples[1].is_trivial
        samples, _ = branch_point_family(20)
        assert all(S.rank == 2 for S in samples)
