import numpy as np
import pytest

from ssl_forge.core.exceptions import DataValidationError, InvalidParameterError, UnknownComponentError
from ssl_forge.data.transforms import TRANSFORM_KINDS, transform_fit_apply


X = np.array([[1.0, 0.0, 5.0], [3.0, 2.0, 5.0], [5.0, 4.0, 5.0]])


def test_kinds():
    assert TRANSFORM_KINDS == sorted([
        "standard_scale", "minmax_scale", "one_hot", "gaussian_noise",
        "clip", "l2_normalize", "polynomial_deg2", "drop_constant",
    ])


def test_standard_scale_passes_constant_columns_through():
    state, out = transform_fit_apply("standard_scale", None, X)
    assert np.allclose(out[:, 0], [-np.sqrt(1.5), 0.0, np.sqrt(1.5)])
    assert np.all(out[:, 2] == 5.0)
    assert state.warnings == ["column 2 has zero variance and is passed through unscaled"]


def test_apply_replays_fitted_statistics():
    state, _ = transform_fit_apply("standard_scale", None, X)
    assert np.allclose(state.apply([[3.0, 2.0, 5.0]]), [[0.0, 0.0, 5.0]])


def test_minmax_scale():
    state, out = transform_fit_apply("minmax_scale", None, X)
    assert out[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert out[:, 2].tolist() == [0.0, 0.0, 0.0]
    assert state.apply([[7.0, 0.0, 9.0]]).tolist() == [[1.5, 0.0, 0.0]]


def test_one_hot_expands_selected_columns_in_place():
    data = np.array([[0.0, 10.0], [1.0, 20.0], [2.0, 10.0]])
    state, out = transform_fit_apply("one_hot", {"columns": [1]}, data)
    assert out.tolist() == [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]
    assert state.apply([[5.0, 30.0]]).tolist() == [[5.0, 0.0, 0.0]]


def test_one_hot_column_out_of_range():
    with pytest.raises(DataValidationError, match="out of range"):
        transform_fit_apply("one_hot", {"columns": [4]}, X)


def test_gaussian_noise_only_at_fit_time():
    state, out = transform_fit_apply("gaussian_noise", {"sigma": 0.5, "seed": 1}, X)
    assert not np.allclose(out, X)
    assert np.array_equal(state.apply(X), X)
    _, again = transform_fit_apply("gaussian_noise", {"sigma": 0.5, "seed": 1}, X)
    assert np.array_equal(out, again)


def test_clip():
    _, out = transform_fit_apply("clip", {"low": 1.0, "high": 4.0}, X)
    assert out.min() == 1.0 and out.max() == 4.0
    with pytest.raises(InvalidParameterError):
        transform_fit_apply("clip", {"low": 2.0, "high": 1.0}, X)


def test_l2_normalize_keeps_zero_rows():
    _, out = transform_fit_apply("l2_normalize", None, [[3.0, 4.0], [0.0, 0.0]])
    assert out.tolist() == [[0.6, 0.8], [0.0, 0.0]]


def test_polynomial_deg2():
    _, out = transform_fit_apply("polynomial_deg2", None, [[2.0, 3.0]])
    assert out.tolist() == [[2.0, 3.0, 4.0, 6.0, 9.0]]


def test_drop_constant():
    state, out = transform_fit_apply("drop_constant", None, X)
    assert out.shape == (3, 2)
    assert state.warnings == ["dropped constant columns [2]"]
    with pytest.raises(DataValidationError, match="every column"):
        transform_fit_apply("drop_constant", None, [[1.0, 1.0], [1.0, 1.0]])


def test_statistics_need_rows():
    with pytest.raises(DataValidationError, match="at least one row"):
        transform_fit_apply("standard_scale", None, np.zeros((0, 2)))


def test_unknown_kind():
    with pytest.raises(UnknownComponentError, match="transformer"):
        transform_fit_apply("whiten", None, X)


def test_apply_checks_width():
    state, _ = transform_fit_apply("minmax_scale", None, X)
    with pytest.raises(DataValidationError, match="feature-dimension mismatch"):
        state.apply(np.zeros((1, 2)))
