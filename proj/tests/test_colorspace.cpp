#include <doctest.h>

#include <cmath>

#include "hdrcm/colorspace.hpp"
#include "hdrcm/image.hpp"

using namespace hdrcm;

TEST_SUITE_BEGIN("colorspace");

namespace {

ImageF pixel(double r, double g, double b) {
    ImageF img(1, 1, 3);
    img.at(0, 0, 0) = r;
    img.at(0, 0, 1) = g;
    img.at(0, 0, 2) = b;
    return img;
}

}  // namespace

TEST_CASE("luminance: coefficients") {
    CHECK(luminance(pixel(1, 1, 1)).at(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(luminance(pixel(1, 0, 0)).at(0, 0, 0) == doctest::Approx(0.2126).epsilon(1e-12));
    CHECK(luminance(pixel(0, 1, 0)).at(0, 0, 0) == doctest::Approx(0.7152).epsilon(1e-12));
    CHECK(luminance(pixel(0, 0, 1)).at(0, 0, 0) == doctest::Approx(0.0722).epsilon(1e-12));
    CHECK(luminance(pixel(0, 0, 0)).at(0, 0, 0) == 0.0);
    CHECK_THROWS(luminance(ImageF(2, 2, 1)));
}

TEST_CASE("lab: reference white and black") {
    const LabImage white = linear_to_lab(pixel(1, 1, 1));
    CHECK(white.planes.at(0, 0, 0) == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(std::fabs(white.planes.at(0, 0, 1)) < 1e-3);
    CHECK(std::fabs(white.planes.at(0, 0, 2)) < 1e-3);
    const LabImage black = linear_to_lab(pixel(0, 0, 0));
    CHECK(black.planes.at(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(black.planes.at(0, 0, 1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(black.planes.at(0, 0, 2) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("lab: frozen reference triples") {
    // values from tests/oracles/lab_oracle.py (published Rec.709 matrix)
    const struct {
        double r, g, b, L, a, bb;
    } cases[] = {
        {0.8, 0.1, 0.1, 56.96293619, 55.04661127, 29.27067944},
        {0.1, 0.6, 0.2, 73.85615023, -49.97421932, 30.29010897},
        {0.05, 0.05, 0.7, 37.28479099, 49.15626971, -78.42411043},
        {0.5, 0.5, 0.5, 76.06926101, 0.0, 0.0},
    };
    for (const auto& c : cases) {
        const LabImage lab = linear_to_lab(pixel(c.r, c.g, c.b));
        CHECK(lab.planes.at(0, 0, 0) == doctest::Approx(c.L).epsilon(1e-6));
        CHECK(lab.planes.at(0, 0, 1) == doctest::Approx(c.a).scale(1.0).epsilon(1e-5));
        CHECK(lab.planes.at(0, 0, 2) == doctest::Approx(c.bb).scale(1.0).epsilon(1e-5));
    }
}

TEST_CASE("lab: gray axis is neutral") {
    for (double v : {0.01, 0.2, 0.5, 0.9}) {
        const LabImage lab = linear_to_lab(pixel(v, v, v));
        CHECK(std::fabs(lab.planes.at(0, 0, 1)) < 1e-6);
        CHECK(std::fabs(lab.planes.at(0, 0, 2)) < 1e-6);
    }
}

TEST_CASE("lab: round trip over a 17^3 grid") {
    double worst = 0.0;
    for (int ri = 0; ri < 17; ++ri)
        for (int gi = 0; gi < 17; ++gi)
            for (int bi = 0; bi < 17; ++bi) {
                const double r = ri / 16.0, g = gi / 16.0, b = bi / 16.0;
                const ImageF back = lab_to_linear(linear_to_lab(pixel(r, g, b)));
                worst = std::max(worst, std::fabs(back.at(0, 0, 0) - r));
                worst = std::max(worst, std::fabs(back.at(0, 0, 1) - g));
                worst = std::max(worst, std::fabs(back.at(0, 0, 2) - b));
            }
    CHECK(worst < 1e-6);
}

TEST_CASE("lab: inverse of a given Lab triple reproduces it") {
    double r, g, b;
    lab_to_linear_pixel(50.0, 20.0, -30.0, r, g, b);
    double L2, a2, b2;
    linear_to_lab_pixel(r, g, b, L2, a2, b2);
    CHECK(L2 == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(a2 == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(b2 == doctest::Approx(-30.0).epsilon(1e-9));
    lab_to_linear_pixel(100.0, 0.0, 0.0, r, g, b);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(b == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("mu_law: endpoints, round trip, closed form") {
    CHECK(mu_law_scalar(0.0) == 0.0);
    CHECK(mu_law_scalar(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mu_law_inv_scalar(mu_law_scalar(0.37)) == doctest::Approx(0.37).epsilon(1e-9));
    // T(1/mu) = ln 2 / ln(1 + mu)
    CHECK(mu_law_scalar(1.0 / 5000.0) ==
          doctest::Approx(std::log(2.0) / std::log(5001.0)).epsilon(1e-12));
    CHECK_THROWS(mu_law_scalar(0.5, -1.0));
    CHECK_THROWS(mu_law_scalar(0.5, 0.0));

    // monotone
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = mu_law_scalar(i / 100.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("mu_law: derivative helpers match finite differences") {
    for (double x : {0.01, 0.1, 0.5, 0.9}) {
        const double h = 1e-7;
        const double fd = (mu_law_scalar(x + h) - mu_law_scalar(x - h)) / (2 * h);
        CHECK(mu_law_deriv_scalar(x) == doctest::Approx(fd).epsilon(1e-6));
        const double y = mu_law_scalar(x);
        const double fdi = (mu_law_inv_scalar(y + h) - mu_law_inv_scalar(y - h)) / (2 * h);
        CHECK(mu_law_inv_deriv_scalar(y) == doctest::Approx(fdi).epsilon(1e-5));
    }
}

TEST_CASE("pu21: frozen reference values and monotonicity") {
    // values from tests/oracles/pu21_oracle.py (banding coefficient set)
    CHECK(pu21_encode_scalar(0.005) == doctest::Approx(-0.000000155802).scale(1).epsilon(1e-9));
    CHECK(pu21_encode_scalar(0.1) == doctest::Approx(36.005731693229).epsilon(1e-9));
    CHECK(pu21_encode_scalar(1.0) == doctest::Approx(84.404511313201).epsilon(1e-9));
    CHECK(pu21_encode_scalar(100.0) == doctest::Approx(261.751727930199).epsilon(1e-9));
    CHECK(pu21_encode_scalar(10000.0) == doctest::Approx(520.467307018307).epsilon(1e-9));

    SeededRng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.next_double() * 200.0;
        const double y = x + rng.next_double() * 50.0 + 1e-6;
        CHECK(pu21_encode_scalar(x) <= pu21_encode_scalar(y));
    }
    // below the calibrated floor everything clamps
    CHECK(pu21_encode_scalar(1e-6) == pu21_encode_scalar(0.005));
}

TEST_CASE("srgb: endpoints, breakpoint, round trip") {
    CHECK(srgb_encode_scalar(0.0) == 0.0);
    CHECK(srgb_encode_scalar(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(srgb_encode_scalar(0.0031308) == doctest::Approx(0.04045).epsilon(1e-6));
    SeededRng rng(9);
    for (int i = 0; i < 100; ++i) {
        const double v = rng.next_double();
        CHECK(srgb_decode_scalar(srgb_encode_scalar(v)) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_SUITE_END();
