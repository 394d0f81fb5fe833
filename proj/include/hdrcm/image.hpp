#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hdrcm {

// Dense row-major image buffer, H x W x C with C = 1 or 3. Values are
// linear radiance for HDR, display-referred [0,1] for LDR, and arbitrary
// for latents. Stored at 64-bit so every numeric kernel is testable at
// full precision; the training path keeps its own 32-bit tensors.
//
// Immutable-by-convention after construction in pipeline code; safe to
// share across threads once filled.
class ImageF {
public:
    ImageF() = default;
    ImageF(int height, int width, int channels, double fill = 0.0);

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int y, int x, int c) {
        return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c];
    }
    double at(int y, int x, int c) const {
        return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c];
    }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    bool same_shape(const ImageF& o) const {
        return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }
    // Throws std::runtime_error naming `what` if any entry is NaN or +-inf.
    void require_finite(const char* what) const;

    ImageF crop(int y0, int x0, int height, int width) const;

private:
    int h_ = 0, w_ = 0, c_ = 0;
    std::vector<double> data_;
};

// Deterministic counter-style generator (splitmix64 core). Identical seed
// and call sequence give an identical stream on every platform. Single
// owner; fork() derives an independent child stream keyed on the current
// state and a caller-chosen lane index without advancing the parent.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    double next_double();   // uniform in [0, 1)
    double next_normal();   // standard normal (Box-Muller, 2 uniforms per draw)
    SeededRng fork(std::uint64_t lane) const;

private:
    std::uint64_t state_;
};

// Linear-interpolation percentile over the sorted order statistics:
// index = p/100 * (n-1), interpolated between neighbours. p in [0,100].
// Throws on empty or non-finite input.
double percentile(std::span<const double> values, double p);
// Same convention on an already-sorted ascending sequence (no copy/sort).
double percentile_sorted(std::span<const double> sorted, double p);

// Separable Gaussian blur, kernel radius ceil(3*sigma), kernel normalized
// to sum 1, replicate border. Per-channel. sigma must be > 0.
ImageF gaussian_blur(const ImageF& img, double sigma);

// i.i.d. standard normal entries, deterministic under the rng state.
ImageF sample_normal(SeededRng& rng, int height, int width, int channels);

}  // namespace hdrcm
