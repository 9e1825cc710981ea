"""Hand-derived vectors for the deterministic fixture math."""

import math

import numpy as np
import pytest

from rover_esb.services import analyses
from rover_esb.services.envmodel import Channel, DEFAULT_CHANNELS, EnvironmentModel
from rover_esb.services.imageops import (
    Image,
    magnify,
    noise_reduction,
    ppm_decode,
    ppm_encode,
)


class TestMagnify:
    def test_one_pixel_to_3x3_constant_field(self):
        img = Image.filled(1, 1, (10, 20, 30))
        out = magnify(img, 3, 3)
        assert out.width == 3 and out.height == 3
        assert np.all(out.pixels == (10, 20, 30))

    def test_identity_resize_is_bit_identical(self):
        rng = np.random.default_rng(5)
        img = Image(rng.integers(0, 256, size=(2, 2, 3), dtype=np.uint8))
        assert magnify(img, 2, 2) == img

    def test_gray_row_sampling_vector(self):
        # source row [0, 255] doubled to width 4:
        # s(d) = (d+0.5)/2 - 0.5 -> -0.25, 0.25, 0.75, 1.25 (clamped)
        # values 0, 63.75, 191.25, 255 -> round half up
        img = Image(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
        out = magnify(img, 4, 1)
        assert out.pixels[0, :, 0].tolist() == [0, 64, 191, 255]

    def test_output_dimensions_exact(self):
        img = Image.filled(5, 3)
        out = magnify(img, 17, 2)
        assert (out.width, out.height) == (17, 2)

    def test_rejects_non_positive_dimensions(self):
        img = Image.filled(2, 2)
        with pytest.raises(ValueError):
            magnify(img, 0, 4)
        with pytest.raises(ValueError):
            magnify(img, 4, -1)


class TestNoiseReduction:
    def test_constant_image_unchanged(self):
        img = Image.filled(4, 4, (9, 9, 9))
        assert noise_reduction(img) == img

    def test_hot_center_pixel_removed(self):
        px = np.zeros((3, 3, 3), dtype=np.uint8)
        px[1, 1] = 255
        out = noise_reduction(Image(px))
        assert out.pixels[1, 1].tolist() == [0, 0, 0]

    def test_dimensions_preserved_over_random_images(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
            img = Image(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
            out = noise_reduction(img)
            assert (out.width, out.height) == (w, h)

    def test_median_is_order_statistic(self):
        # 3x1 row: median of each 3-neighborhood with replicated edges
        px = np.array([[[10, 0, 0], [200, 0, 0], [30, 0, 0]]], dtype=np.uint8)
        out = noise_reduction(Image(px))
        # windows: [10,10,200] -> 10 ; [10,200,30] -> 30 ; [200,30,30] -> 30
        assert out.pixels[0, :, 0].tolist() == [10, 30, 30]


class TestPpm:
    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        img = Image(rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8))
        assert ppm_decode(ppm_encode(img)) == img

    def test_header_layout(self):
        data = ppm_encode(Image.filled(2, 1, (255, 255, 255)))
        assert data == b"P6\n2 1\n255\n" + b"\xff" * 6

    def test_comments_in_header(self):
        data = b"P6\n# made by a camera\n1 1\n255\n\x01\x02\x03"
        img = ppm_decode(data)
        assert img.pixels[0, 0].tolist() == [1, 2, 3]

    @pytest.mark.parametrize(
        "blob",
        [
            b"",
            b"P5\n1 1\n255\nx",
            b"P6\n1 1\n255\n",  # missing raster
            b"P6\n1 1\n255\n\x01\x02\x03\x04",  # trailing bytes
            b"P6\n0 1\n255\n",
            b"P6\n1 1\n65535\n\x01\x02\x03",
            b"P6\na b\n255\nxyz",
        ],
    )
    def test_malformed_rejected(self, blob):
        with pytest.raises(ValueError):
            ppm_decode(blob)


class TestAnalyses:
    def test_velocity_reference_pair(self):
        assert analyses.particle_velocity(5.0, 10.0) == 11.332

    def test_velocity_same_ratio(self):
        assert analyses.particle_velocity(2.0, 4.0) == pytest.approx(11.332, abs=1e-9)

    def test_velocity_zero_energy(self):
        assert analyses.particle_velocity(1.0, 0.0) == 0.0

    def test_velocity_rejects_bad_domain(self):
        with pytest.raises(ValueError):
            analyses.particle_velocity(0.0, 1.0)
        with pytest.raises(ValueError):
            analyses.particle_velocity(-2.0, 1.0)
        with pytest.raises(ValueError):
            analyses.particle_velocity(1.0, -0.5)

    def test_xray_empty_sample_uniform(self):
        assert analyses.xray_abundances("") == {"Si": 0.25, "Fe": 0.25, "Mg": 0.25, "Ca": 0.25}

    def test_xray_vector_for_A(self):
        # h = 65; residues (65*3, 65*5, 65*7, 65*11) mod 97 = (1, 34, 67, 36)
        out = analyses.xray_abundances("A")
        assert out == {"Si": 1 / 138, "Fe": 34 / 138, "Mg": 67 / 138, "Ca": 36 / 138}

    def test_abundances_normalized(self):
        import random

        rng = random.Random(23)
        for _ in range(200):
            s = "".join(chr(rng.randint(32, 0x2FF)) for _ in range(rng.randint(0, 12)))
            total = sum(analyses.xray_abundances(s).values())
            assert math.isclose(total, 1.0, abs_tol=1e-9)

    def test_vaporized_matches_xray_scheme(self):
        assert analyses.vaporized_composition("", 0.0) == {
            "Si": 0.25, "Fe": 0.25, "Mg": 0.25, "Ca": 0.25,
        }
        assert analyses.vaporized_composition("A", 0.0) == analyses.xray_abundances("A")
        # laser power folds into the hash: byte_sum("") + 65 == byte_sum("A")
        assert analyses.vaporized_composition("", 65.9) == analyses.xray_abundances("A")

    def test_vaporized_rejects_negative_power(self):
        with pytest.raises(ValueError):
            analyses.vaporized_composition("x", -0.1)

    @pytest.mark.parametrize(
        "sample,carbon,oxygen",
        [("", True, True), ("A", False, False), ("B", True, True)],
    )
    def test_element_parity_table(self, sample, carbon, oxygen):
        assert analyses.contains_carbon(sample) is carbon
        assert analyses.contains_oxygen(sample) is oxygen


class TestEnvironmentModel:
    def test_t0_is_base(self):
        for name, ch in DEFAULT_CHANNELS.items():
            assert ch.value(0) == ch.base

    def test_quarter_period_is_base_plus_amplitude(self):
        for ch in DEFAULT_CHANNELS.values():
            assert ch.value(ch.period / 4) == pytest.approx(ch.base + ch.amplitude, abs=1e-9)

    def test_periodicity(self):
        ch = Channel(7.0, 5.0, 3600.0)
        for t in range(0, 3600, 97):
            assert ch.value(t) == pytest.approx(ch.value(t + 3600), abs=1e-9)

    def test_tick_counter_advances_per_request(self):
        model = EnvironmentModel()
        first = model.sample("pressure")
        assert first == DEFAULT_CHANNELS["pressure"].base  # t=0
        second = model.sample("pressure")
        assert second == DEFAULT_CHANNELS["pressure"].value(1)

    def test_default_parameters(self):
        assert DEFAULT_CHANNELS["pressure"] == Channel(715.0, 50.0, 86400.0)
        assert DEFAULT_CHANNELS["humidity"] == Channel(0.03, 0.02, 86400.0)
        assert DEFAULT_CHANNELS["wind"] == Channel(7.0, 5.0, 3600.0)
        assert DEFAULT_CHANNELS["uv"] == Channel(2.5, 2.5, 86400.0)

    def test_channel_validation(self):
        with pytest.raises(ValueError):
            Channel(1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            Channel(1.0, -1.0, 10.0)
