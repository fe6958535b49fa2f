import math

import numpy as np
import pytest

from shared.models import MeasureId, Q5Pooling
from app.core.errors import BadMagic, DegenerateSubband, ImageTooSmall, MalformedPayload, UnsupportedVersion
from app.schemas.bkf import BkfParams
from app.schemas.features import BandFeature, FeatureVector, QuantizedFeatures
from app.schemas.image import GrayImage
from app.services import evaluation, metrics, rr_features, tetrolet
from app.services.image_core import add_white_noise, gaussian_blur

GOLDEN_CODES = (40, 52, 61, 47, 58, 66, 55, 63, 70, 150, 149, 151, 160, 158, 161, 170, 168, 171)


def _vector(alphas, betas):
    entries = tuple(
        BandFeature(band_id=band, params=BkfParams.of(a, b))
        for band, a, b in zip(tetrolet.band_ids(3), alphas, betas)
    )
    return FeatureVector(entries=entries, source_dims=(64, 64))


class TestExtract:
    def test_nine_bands(self, textured_image):
        fv = rr_features.extract(textured_image)
        assert [e.band_id for e in fv.entries] == tetrolet.band_ids(3)
        assert len(fv.scalars()) == 18
        assert fv.source_dims == (96, 96)
        assert all(0.26 <= a <= 1e3 for a in fv.alphas)
        assert all(b > 0 for b in fv.betas)

    def test_crops_before_transform(self, textured_image):
        img = GrayImage(pixels=textured_image.pixels[:90, :93])
        assert rr_features.extract(img).source_dims == (80, 80)

    def test_deterministic(self, textured_image):
        assert rr_features.extract(textured_image).scalars() == rr_features.extract(textured_image).scalars()

    def test_variance_is_preserved_by_clamp(self, textured_image):
        fv = rr_features.extract(textured_image)
        dec = tetrolet.forward(textured_image, 3)
        for entry in fv.entries:
            coeffs = tetrolet.subband(dec, *entry.band_id)
            assert entry.params.variance == pytest.approx(np.var(coeffs), rel=1e-12)

    def test_blur_lowers_fine_variance(self):
        noisy = add_white_noise(GrayImage(pixels=np.full((64, 64), 128.0)), 20.0, seed=1)
        blurred = gaussian_blur(noisy, 2.0)
        sharp_fv, blur_fv = rr_features.extract(noisy), rr_features.extract(blurred)
        for s, b in zip(sharp_fv.entries[:3], blur_fv.entries[:3]):
            assert b.params.variance < s.params.variance

    def test_constant_image(self):
        with pytest.raises(DegenerateSubband) as info:
            rr_features.extract(GrayImage(pixels=np.full((32, 32), 77.0)))
        assert info.value.band_id == (1, 1)

    def test_too_small(self):
        with pytest.raises(ImageTooSmall):
            rr_features.extract(GrayImage(pixels=np.zeros((12, 40))))


class TestQuantizer:
    def test_range_endpoints(self):
        fv = _vector([0.26] + [1e3] * 8, [1e-4] + [1e6] * 8)
        qf = rr_features.quantize(fv)
        assert qf.alpha_codes[0] == 1 and qf.alpha_codes[1] == 255
        assert qf.beta_codes[0] == 0 and qf.beta_codes[1] == 255

    def test_out_of_range_clamped(self):
        fv = _vector([1.0] * 9, [1e-7] + [1e9] * 8)
        qf = rr_features.quantize(fv)
        assert qf.beta_codes[0] == 0 and qf.beta_codes[1] == 255

    def test_payload_size(self, textured_image):
        qf = rr_features.quantize(rr_features.extract(textured_image))
        assert len(qf.payload()) == 18
        assert len(rr_features.serialize(qf)) == 24

    def test_log_error_within_half_step(self, textured_image):
        fv = rr_features.extract(textured_image)
        back = rr_features.receiver_view(fv)
        alpha_step = 3.6 / 255
        beta_step = 10.0 / 255
        for a, a_hat in zip(fv.alphas, back.alphas):
            assert abs(math.log10(a) - math.log10(a_hat)) <= alpha_step / 2 + 1e-12
        for b, b_hat in zip(fv.betas, back.betas):
            assert abs(math.log10(b) - math.log10(b_hat)) <= beta_step / 2 + 1e-12

    def test_idempotent(self, textured_image):
        qf = rr_features.quantize(rr_features.extract(textured_image))
        assert rr_features.quantize(rr_features.dequantize(qf)).codes == qf.codes

    def test_dequantize_endpoints(self):
        fv = rr_features.dequantize(QuantizedFeatures(codes=(0,) * 18))
        assert fv.betas[0] == pytest.approx(1e-4)
        assert fv.alphas[0] == 0.26
        assert fv.alphas[0] == rr_features.dequantize(QuantizedFeatures(codes=(1,) * 18)).alphas[0]

    def test_floor_survives_round_trip(self):
        fv = _vector([0.26] * 9, [1.0] * 9)
        back = rr_features.receiver_view(fv)
        assert back.alphas == [0.26] * 9
        assert rr_features.quantize(back).alpha_codes == (1,) * 9

    def test_shape_below_floor_rejected(self):
        with pytest.raises(ValueError):
            _vector([0.1] + [1.0] * 8, [1.0] * 9)

    def test_shape_above_cap_rejected(self):
        with pytest.raises(ValueError):
            _vector([1.0] * 8 + [2e3], [1.0] * 9)

    def test_dequantize_accepts_bytes(self):
        fv = rr_features.dequantize(bytes(GOLDEN_CODES))
        assert len(fv.entries) == 9

    def test_short_payload(self):
        with pytest.raises(MalformedPayload):
            rr_features.dequantize(bytes(17))


class TestContainer:
    def test_golden_file(self, golden_dir):
        data = (golden_dir / "features_v1.tqrr").read_bytes()
        qf = rr_features.deserialize(data)
        assert qf.codes == GOLDEN_CODES
        assert rr_features.serialize(qf) == data

    def test_save_and_load(self, tmp_path, textured_image):
        qf = rr_features.quantize(rr_features.extract(textured_image))
        path = rr_features.save_features(qf, tmp_path / "nested" / "f.tqrr")
        assert path.stat().st_size == 24
        assert rr_features.load_features(path).codes == qf.codes

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            rr_features.deserialize(b"XXXX" + bytes([1, 3]) + bytes(18))

    def test_unsupported_version(self):
        with pytest.raises(UnsupportedVersion):
            rr_features.deserialize(b"TQRR" + bytes([2, 3]) + bytes(18))

    def test_header_declares_three_levels(self):
        data = rr_features.serialize(QuantizedFeatures(codes=GOLDEN_CODES))
        assert data[:4] == b"TQRR" and data[4] == 1 and data[5] == 3

    @pytest.mark.parametrize("levels", [1, 2, 4])
    def test_serialize_other_level_counts(self, levels):
        with pytest.raises(MalformedPayload):
            rr_features.serialize(QuantizedFeatures(codes=GOLDEN_CODES), levels=levels)

    @pytest.mark.parametrize("data", [b"TQ", b"TQRR\x01", b"TQRR\x01\x03" + bytes(17), b"TQRR\x01\x03" + bytes(19), b"TQRR\x01\x02" + bytes(18)])
    def test_malformed(self, data):
        with pytest.raises(MalformedPayload):
            rr_features.deserialize(data)


class TestReceiver:
    def test_self_comparison_is_zero(self, textured_image):
        ref = rr_features.receiver_view(rr_features.extract(textured_image))
        for measure in MeasureId:
            assert rr_features.compare(ref, ref, measure).value == 0.0

    def test_quantised_scores_keep_ranking(self, test_images):
        for img in test_images:
            ref = rr_features.extract(img)
            raw, quantised = [], []
            for sigma in np.linspace(0.5, 5.0, 10):
                dist = rr_features.extract(gaussian_blur(img, float(sigma)))
                raw.append(metrics.q5(rr_features.band_pairs(ref, dist)).value)
                quantised.append(metrics.q5(rr_features.band_pairs(
                    rr_features.receiver_view(ref), rr_features.receiver_view(dist)
                )).value)
            assert evaluation.spearman(raw, quantised) >= 0.9

    def test_compare_pooling(self, textured_image):
        ref = rr_features.extract(textured_image)
        dist = rr_features.extract(gaussian_blur(textured_image, 2.0))
        pairs = rr_features.band_pairs(ref, dist)
        distances = [metrics.l2_distance(p.ref, p.dist) for p in pairs]
        summed = rr_features.compare(ref, dist, MeasureId.q5, pooling=Q5Pooling.sum).value
        assert summed == pytest.approx(sum(distances))
        assert rr_features.compare(ref, dist, MeasureId.q5).value == pytest.approx(math.sqrt(sum(d * d for d in distances)))

    def test_band_mismatch(self, textured_image):
        fv = rr_features.extract(textured_image)
        other = FeatureVector(entries=fv.entries[:3], source_dims=(16, 16), levels=1)
        with pytest.raises(MalformedPayload):
            rr_features.band_pairs(fv, other)

    def test_feature_bits(self):
        assert rr_features.feature_bits(MeasureId.q5) == 144
        assert rr_features.feature_bits("q1") == 72


class TestDistortionMonotonicity:
    def test_q5_increases_with_blur(self, test_images):
        sigmas = np.arange(0.5, 5.01, 0.5)
        for img in test_images:
            ref = rr_features.extract(img)
            scores = [
                rr_features.compare(ref, rr_features.extract(gaussian_blur(img, float(s))), MeasureId.q5).value
                for s in sigmas
            ]
            assert evaluation.spearman(sigmas, scores) >= 0.9

    def test_q5_increases_with_noise(self, test_images):
        sigmas = np.arange(2.0, 20.01, 2.0)
        for img in test_images:
            ref = rr_features.extract(img)
            scores = [
                rr_features.compare(ref, rr_features.extract(add_white_noise(img, float(s), seed=17)), MeasureId.q5).value
                for s in sigmas
            ]
            assert evaluation.spearman(sigmas, scores) >= 0.9
