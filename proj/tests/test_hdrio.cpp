#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hdrcm/hdrio.hpp"

#ifdef HAVE_OPENCV
#include <opencv2/imgcodecs.hpp>
#endif

using namespace hdrcm;

TEST_SUITE_BEGIN("hdrio");

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// random values representable exactly in 32-bit floats
ImageF random_f32_image(SeededRng& rng, int h, int w, int c, double scale = 1.0) {
    ImageF img(h, w, c);
    for (double& v : img.values())
        v = static_cast<float>(rng.next_double() * scale);
    return img;
}

}  // namespace

TEST_CASE("pfm: golden bytes for the 1x1 gray case") {
    const std::string path = temp_path("hdrcm_golden.pfm");
    ImageF img(1, 1, 1, 0.5);
    write_pfm(path, img);
    const auto bytes = slurp(path);
    const std::string header = "Pf\n1 1\n-1.0\n";
    REQUIRE(bytes.size() == header.size() + 4);
    for (std::size_t i = 0; i < header.size(); ++i)
        CHECK(bytes[i] == static_cast<unsigned char>(header[i]));
    // 0.5f little-endian: 00 00 00 3F
    CHECK(bytes[header.size() + 0] == 0x00);
    CHECK(bytes[header.size() + 1] == 0x00);
    CHECK(bytes[header.size() + 2] == 0x00);
    CHECK(bytes[header.size() + 3] == 0x3F);
}

TEST_CASE("pfm: bitwise round trip for 1- and 3-channel images") {
    SeededRng rng(51);
    for (int c : {1, 3}) {
        const std::string path = temp_path("hdrcm_rt.pfm");
        const ImageF img = random_f32_image(rng, 7, 5, c, 100.0);
        write_pfm(path, img);
        const ImageF back = read_pfm(path);
        REQUIRE(back.same_shape(img));
        for (std::size_t i = 0; i < img.size(); ++i)
            CHECK(static_cast<float>(back.data()[i]) == static_cast<float>(img.data()[i]));
    }
}

TEST_CASE("pfm: big-endian files decode correctly") {
    // hand-built big-endian PFM (positive scale): 1x1 gray, value 0.5
    const std::string path = temp_path("hdrcm_be.pfm");
    std::ofstream f(path, std::ios::binary);
    f << "Pf\n1 1\n1.0\n";
    const unsigned char be[4] = {0x3F, 0x00, 0x00, 0x00};
    f.write(reinterpret_cast<const char*>(be), 4);
    f.close();
    const ImageF img = read_pfm(path);
    CHECK(img.at(0, 0, 0) == 0.5);
}

TEST_CASE("pfm: malformed inputs fail loudly") {
    const std::string path = temp_path("hdrcm_bad.pfm");
    std::ofstream(path) << "QQ\n1 1\n-1.0\n";
    CHECK_THROWS(read_pfm(path));
    std::ofstream(path, std::ios::binary) << "Pf\n4 4\n-1.0\nxx";  // truncated
    CHECK_THROWS(read_pfm(path));
    ImageF nan_img(1, 1, 1, std::nan(""));
    CHECK_THROWS(write_pfm(path, nan_img));
}

TEST_CASE("rgbe: pinned encodings") {
    std::uint8_t px[4];
    encode_rgbe(0.0, 0.0, 0.0, px);
    CHECK(px[0] == 0);
    CHECK(px[1] == 0);
    CHECK(px[2] == 0);
    CHECK(px[3] == 0);

    encode_rgbe(1.0, 1.0, 1.0, px);
    CHECK(px[0] == 128);
    CHECK(px[1] == 128);
    CHECK(px[2] == 128);
    CHECK(px[3] == 129);
    double r, g, b;
    decode_rgbe(px, r, g, b);
    CHECK(r == 1.0);
    CHECK(g == 1.0);
    CHECK(b == 1.0);
}

TEST_CASE("rgbe: round-trip error below one mantissa step") {
    SeededRng rng(53);
    for (int i = 0; i < 5000; ++i) {
        // positive triples spanning many binades
        const double scale = std::exp((rng.next_double() - 0.5) * 30.0);
        const double v[3] = {rng.next_double() * scale, rng.next_double() * scale,
                             rng.next_double() * scale};
        std::uint8_t px[4];
        encode_rgbe(v[0], v[1], v[2], px);
        double d[3];
        decode_rgbe(px, d[0], d[1], d[2]);
        if (px[3] == 0) continue;  // all-zero special case
        // quantization step = 2^(e-136); floor encoding keeps the error
        // one-sided within a single step (1/256 of the pixel's base-2 scale)
        const double step = std::ldexp(1.0, static_cast<int>(px[3]) - 136);
        for (int c = 0; c < 3; ++c) {
            CHECK(d[c] <= v[c] + 1e-15 * scale);
            CHECK(v[c] - d[c] < step * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("hdr: round trip within RGBE quantization error") {
    SeededRng rng(55);
    const std::string path = temp_path("hdrcm_rt.hdr");
    ImageF img(24, 33, 3);
    for (double& v : img.values()) v = rng.next_double() * 50.0 + 1e-4;
    write_hdr(path, img);
    const ImageF back = read_hdr(path);
    REQUIRE(back.same_shape(img));
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double mx = 0.0;
            for (int c = 0; c < 3; ++c) mx = std::max(mx, img.at(y, x, c));
            for (int c = 0; c < 3; ++c)
                CHECK(std::fabs(back.at(y, x, c) - img.at(y, x, c)) <= mx / 128.0);
        }
}

TEST_CASE("hdr: constant scanlines compress shorter than flat") {
    const std::string rle_path = temp_path("hdrcm_const.hdr");
    ImageF img(4, 64, 3, 0.25);
    write_hdr(rle_path, img);
    const auto bytes = slurp(rle_path);
    // flat encoding would need 4*64*4 = 1024 payload bytes
    CHECK(bytes.size() < 300);
    const ImageF back = read_hdr(rle_path);
    for (double v : back.values()) CHECK(v == doctest::Approx(0.25).epsilon(1.0 / 128.0));
}

TEST_CASE("hdr: flat scanlines are accepted") {
    // hand-written old-style file: 2x2, no RLE
    const std::string path = temp_path("hdrcm_flat.hdr");
    std::ofstream f(path, std::ios::binary);
    f << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 2 +X 2\n";
    const std::uint8_t px[4] = {128, 64, 32, 129};  // (1, 0.5, 0.25)
    for (int i = 0; i < 4; ++i) f.write(reinterpret_cast<const char*>(px), 4);
    f.close();
    const ImageF img = read_hdr(path);
    REQUIRE(img.height() == 2);
    REQUIRE(img.width() == 2);
    CHECK(img.at(1, 1, 0) == 1.0);
    CHECK(img.at(1, 1, 1) == 0.5);
    CHECK(img.at(1, 1, 2) == 0.25);
}

TEST_CASE("hdr: corrupt headers fail loudly") {
    const std::string path = temp_path("hdrcm_bad.hdr");
    std::ofstream(path) << "#?RADIANCE\nFORMAT=64-bit_xyze\n\n-Y 2 +X 2\n";
    CHECK_THROWS(read_hdr(path));
    std::ofstream(path) << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y two +X 2\n";
    CHECK_THROWS(read_hdr(path));
    std::ofstream(path) << "not radiance\n";
    CHECK_THROWS(read_hdr(path));
}

#ifdef HAVE_OPENCV
TEST_CASE("hdr: files decode identically in an independent reader") {
    SeededRng rng(57);
    const std::string path = temp_path("hdrcm_cv.hdr");
    ImageF img(16, 20, 3);
    for (double& v : img.values()) v = rng.next_double() * 10.0 + 1e-3;
    write_hdr(path, img);
    const cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    REQUIRE(!m.empty());
    REQUIRE(m.rows == 16);
    REQUIRE(m.cols == 20);
    REQUIRE(m.type() == CV_32FC3);
    const ImageF mine = read_hdr(path);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 20; ++x) {
            const cv::Vec3f bgr = m.at<cv::Vec3f>(y, x);
            CHECK(mine.at(y, x, 0) == doctest::Approx(bgr[2]).epsilon(1e-6));
            CHECK(mine.at(y, x, 1) == doctest::Approx(bgr[1]).epsilon(1e-6));
            CHECK(mine.at(y, x, 2) == doctest::Approx(bgr[0]).epsilon(1e-6));
        }
}
#endif

TEST_CASE("ppm: golden header and quantization") {
    const std::string path = temp_path("hdrcm.ppm");
    ImageF img(1, 2, 3);
    img.at(0, 0, 0) = 0.0;
    img.at(0, 0, 1) = 0.5;
    img.at(0, 0, 2) = 1.0;
    img.at(0, 1, 0) = 0.2;
    img.at(0, 1, 1) = 0.4;
    img.at(0, 1, 2) = 0.6;
    write_ppm(path, img);
    const auto bytes = slurp(path);
    const std::string header = "P6\n2 1\n255\n";
    REQUIRE(bytes.size() == header.size() + 6);
    for (std::size_t i = 0; i < header.size(); ++i)
        CHECK(bytes[i] == static_cast<unsigned char>(header[i]));
    CHECK(bytes[header.size() + 0] == 0);
    CHECK(bytes[header.size() + 1] == 128);  // round(255*0.5)
    CHECK(bytes[header.size() + 2] == 255);

    const ImageF back = read_ppm(path);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(back.data()[i] ==
              doctest::Approx(std::round(255.0 * img.data()[i]) / 255.0).epsilon(1e-12));
}

TEST_CASE("ppm: 8-bit round trip is exact") {
    SeededRng rng(59);
    const std::string path = temp_path("hdrcm_rt.ppm");
    ImageF img(6, 9, 3);
    for (double& v : img.values())
        v = static_cast<double>(static_cast<int>(rng.next_double() * 256.0) % 256) / 255.0;
    write_ppm(path, img);
    const ImageF back = read_ppm(path);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(back.data()[i] == doctest::Approx(img.data()[i]).epsilon(1e-12));
}

TEST_SUITE_END();
