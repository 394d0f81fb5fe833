#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hdrcm/expomask.hpp"

using namespace hdrcm;

TEST_SUITE_BEGIN("expomask");

namespace {

// gray ramp image whose luminance is exactly the given values
ImageF gray_image(const std::vector<double>& values, int width) {
    const int height = static_cast<int>(values.size()) / width;
    ImageF img(height, width, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = values[y * width + x];
    return img;
}

}  // namespace

TEST_CASE("compute_masks: hand-computed ramp case") {
    // Y = {0, 0.01, ..., 1.00}: q_lo = 0.02, q_hi = 0.98,
    // l_core = 0.0392, h_core = 0.9608
    std::vector<double> v(101);
    for (int i = 0; i <= 100; ++i) v[i] = i / 100.0;
    v.push_back(0.5);  // pad to 102 = 6*17 for a rectangular image
    ImageF img = gray_image(v, 17);
    const ExposureMasks m = compute_masks(img);
    CHECK_FALSE(m.degenerate);

    auto at_value = [&](double val) {
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                if (img.at(y, x, 0) == val) return std::pair<int, int>{y, x};
        REQUIRE(false);
        return std::pair<int, int>{0, 0};
    };
    auto [y0, x0] = at_value(0.0);
    CHECK(m.w_under.at(y0, x0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    auto [y1, x1] = at_value(0.5);
    CHECK(m.w_good.at(y1, x1, 0) == doctest::Approx(1.0).epsilon(1e-12));
    auto [y2, x2] = at_value(1.0);
    CHECK(m.w_over.at(y2, x2, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compute_masks: percentile anchors of the ramp") {
    // direct check of the Eq. intermediates on the 101-value ramp
    std::vector<double> v(101);
    for (int i = 0; i <= 100; ++i) v[i] = i / 100.0;
    const double q_lo = percentile(v, 2.0);
    const double q_hi = percentile(v, 98.0);
    CHECK(q_lo == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(q_hi == doctest::Approx(0.98).epsilon(1e-12));
    CHECK(q_lo + 0.02 * (q_hi - q_lo) == doctest::Approx(0.0392).epsilon(1e-9));
    CHECK(q_hi - 0.02 * (q_hi - q_lo) == doctest::Approx(0.9608).epsilon(1e-9));
}

TEST_CASE("compute_masks: constant image takes the degenerate branch") {
    ImageF img(8, 8, 3, 0.5);
    const ExposureMasks m = compute_masks(img);
    CHECK(m.degenerate);
    for (double v : m.w_good.values()) CHECK(v == 1.0);
    for (double v : m.w_over.values()) CHECK(v == 0.0);
    for (double v : m.w_under.values()) CHECK(v == 0.0);
}

TEST_CASE("compute_masks: partition-of-unity and product-zero invariants") {
    SeededRng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        ImageF img(16, 16, 3);
        for (double& v : img.values()) v = rng.next_double();
        const ExposureMasks m = compute_masks(img);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const double wo = m.w_over.at(y, x, 0);
                const double wu = m.w_under.at(y, x, 0);
                const double wg = m.w_good.at(y, x, 0);
                CHECK(wo >= 0.0);
                CHECK(wo <= 1.0);
                CHECK(wu >= 0.0);
                CHECK(wu <= 1.0);
                CHECK(wg >= 0.0);
                CHECK(wg <= 1.0);
                CHECK(wo * wu == 0.0);
                CHECK(wo + wu + wg == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("masks_from_luminance: invariant under affine rescaling") {
    SeededRng rng(23);
    ImageF y(12, 12, 1);
    for (double& v : y.values()) v = rng.next_double() * 4.0 - 1.0;  // unclipped map
    const ExposureMasks base = masks_from_luminance(y);
    for (auto [a, b] : {std::pair{3.0, 0.5}, std::pair{0.25, -2.0}}) {
        ImageF y2(12, 12, 1);
        for (std::size_t i = 0; i < y.size(); ++i) y2.data()[i] = a * y.data()[i] + b;
        const ExposureMasks m = masks_from_luminance(y2);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(m.w_over.data()[i] ==
                  doctest::Approx(base.w_over.data()[i]).scale(1.0).epsilon(1e-9));
            CHECK(m.w_under.data()[i] ==
                  doctest::Approx(base.w_under.data()[i]).scale(1.0).epsilon(1e-9));
            CHECK(m.w_good.data()[i] ==
                  doctest::Approx(base.w_good.data()[i]).scale(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("masks_from_luminance: monotone in Y and Lipschitz") {
    // fixed statistics from a ramp, probe by replacing one pixel value
    std::vector<double> v(256);
    for (int i = 0; i < 256; ++i) v[i] = i / 255.0;
    ImageF y(16, 16, 1);
    std::copy(v.begin(), v.end(), y.values().begin());
    const ExposureMasks m = masks_from_luminance(y);

    const double q_lo = percentile(v, 2.0), q_hi = percentile(v, 98.0);
    const double band = 0.02 * (q_hi - q_lo);
    double prev_under = 1.0, prev_over = 0.0;
    for (int i = 0; i < 256; ++i) {
        const double wu = m.w_under.data()[i];
        const double wo = m.w_over.data()[i];
        CHECK(wu <= prev_under + 1e-12);  // non-increasing in Y
        CHECK(wo >= prev_over - 1e-12);   // non-decreasing in Y
        if (i > 0) {
            const double dy = 1.0 / 255.0;
            CHECK(std::fabs(wu - prev_under) <= dy / band + 1e-9);
            CHECK(std::fabs(wo - prev_over) <= dy / band + 1e-9);
        }
        prev_under = wu;
        prev_over = wo;
    }
}

TEST_CASE("MaskConfig validation") {
    MaskConfig bad;
    bad.tau = 0.6;
    CHECK_THROWS(compute_masks(ImageF(4, 4, 3, 0.5), bad));
    bad = MaskConfig{};
    bad.p_lo = 50;
    bad.p_hi = 10;
    CHECK_THROWS(compute_masks(ImageF(4, 4, 3, 0.5), bad));
}

TEST_SUITE_END();
