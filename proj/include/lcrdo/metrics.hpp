#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "lcrdo/errors.hpp"
#include "lcrdo/image.hpp"
#include "lcrdo/media.hpp"

namespace lcrdo {

// ---------------------------------------------------------------------------
// Multiplicative distortion

struct GofReceptionRecord {
    std::int64_t gof_index = 0;
    int encoder = 0;
    std::array<int, 3> received{0, 0, 0};  // frames of each priority fully received in time
    std::array<int, 3> expected{0, 0, 0};  // frames of each priority generated

    int n_f1() const noexcept { return received[0]; }
    int n_f2() const noexcept { return received[1]; }
    int n_f3() const noexcept { return received[2]; }
    int frames_lost() const noexcept {
        return (expected[0] - received[0]) + (expected[1] - received[1]) + (expected[2] - received[2]);
    }

    // D0 that maps perfect reception of this GOF to zero distortion.
    double full_d0() const noexcept {
        return expected[0] * (1.0 + expected[1] * (1.0 + expected[2]));
    }

    friend bool operator==(const GofReceptionRecord&, const GofReceptionRecord&) = default;
};

// D0 must cover the largest reduction a GOF of this shape can produce.
inline void validate_d0(const GofConfig& gof, double d0) {
    require(d0 >= gof.max_reduction(),
            "d0 = " + std::to_string(d0) + " is below the maximum reduction " + std::to_string(gof.max_reduction()));
}

// D_m = D0 - N1 (1 + N2 (1 + N3)): lower-priority frames only count when the
// frames they depend on made it.
constexpr double d_m(int n_f1, int n_f2, int n_f3, double d0) noexcept {
    return d0 - n_f1 * (1.0 + n_f2 * (1.0 + n_f3));
}

inline double d_m(const GofReceptionRecord& r, double d0) {
    const double v = d_m(r.n_f1(), r.n_f2(), r.n_f3(), d0);
    assert(v >= 0.0 && v <= d0);
    return v;
}

inline double d_M(std::span<const GofReceptionRecord> records, double d0) {
    double sum = 0.0;
    for (const auto& r : records) sum += d_m(r, d0);
    return sum;
}

// Each record scored against its own full-reception D0 (mixed-encoder runs).
inline double d_M_own(std::span<const GofReceptionRecord> records) {
    double sum = 0.0;
    for (const auto& r : records) sum += d_m(r, r.full_d0());
    return sum;
}

// ---------------------------------------------------------------------------
// Temporal distortion

inline double temporal_ratio(std::int64_t displayed, std::int64_t source) {
    require(source > 0, "temporal_ratio: source frame count must be positive");
    require(displayed >= 0, "temporal_ratio: displayed frame count must be non-negative");
    return std::min(1.0, static_cast<double>(displayed) / static_cast<double>(source));
}

// ---------------------------------------------------------------------------
// SSIM

struct SsimParams {
    int window = 8;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;

    double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }

    void validate() const {
        require(window >= 1, "ssim: window must be >= 1");
        require(k1 > 0.0 && k2 > 0.0, "ssim: k1 and k2 must be positive");
        require(dynamic_range > 0.0, "ssim: dynamic range must be positive");
    }
};

namespace detail {

// Summed-area table with one row/column of zero padding.
class IntegralImage {
public:
    template <typename F>
    IntegralImage(int w, int h, F&& value) : w_(w + 1), table_(static_cast<std::size_t>(w + 1) * (h + 1), 0) {
        for (int y = 0; y < h; ++y) {
            std::int64_t row = 0;
            for (int x = 0; x < w; ++x) {
                row += value(x, y);
                table_[idx(x + 1, y + 1)] = table_[idx(x + 1, y)] + row;
            }
        }
    }

    std::int64_t box(int x, int y, int size) const noexcept {
        return table_[idx(x + size, y + size)] - table_[idx(x, y + size)] - table_[idx(x + size, y)] +
               table_[idx(x, y)];
    }

private:
    std::size_t idx(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(x);
    }
    int w_;
    std::vector<std::int64_t> table_;
};

}  // namespace detail

// Mean SSIM over every window position (stride 1) of a square uniform window.
// Window moments are accumulated in exact integer arithmetic; variances and
// covariance use the 1/N normalisation.
inline double ssim(const ImageGrid& x, const ImageGrid& y, const SsimParams& p = {}) {
    p.validate();
    require(x.same_shape(y), "ssim: dimension mismatch");
    require(p.window <= std::min(x.width(), x.height()), "ssim: window larger than image");

    const int w = x.width();
    const int h = x.height();
    auto px = [&](int i, int j) -> std::int64_t { return x.at(i, j); };
    auto py = [&](int i, int j) -> std::int64_t { return y.at(i, j); };
    const detail::IntegralImage sx(w, h, px);
    const detail::IntegralImage sy(w, h, py);
    const detail::IntegralImage sxx(w, h, [&](int i, int j) { return px(i, j) * px(i, j); });
    const detail::IntegralImage syy(w, h, [&](int i, int j) { return py(i, j) * py(i, j); });
    const detail::IntegralImage sxy(w, h, [&](int i, int j) { return px(i, j) * py(i, j); });

    const int n = p.window;
    const auto count = static_cast<std::int64_t>(n) * n;
    const double inv_n = 1.0 / static_cast<double>(count);
    const double inv_n2 = inv_n * inv_n;
    const double c1 = p.c1();
    const double c2 = p.c2();

    double total = 0.0;
    for (int j = 0; j + n <= h; ++j) {
        for (int i = 0; i + n <= w; ++i) {
            const std::int64_t a = sx.box(i, j, n);
            const std::int64_t b = sy.box(i, j, n);
            const double mu_x = static_cast<double>(a) * inv_n;
            const double mu_y = static_cast<double>(b) * inv_n;
            const double var_x = static_cast<double>(count * sxx.box(i, j, n) - a * a) * inv_n2;
            const double var_y = static_cast<double>(count * syy.box(i, j, n) - b * b) * inv_n2;
            const double cov = static_cast<double>(count * sxy.box(i, j, n) - a * b) * inv_n2;
            total += ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) /
                     ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
        }
    }
    const auto windows = static_cast<double>(w - n + 1) * static_cast<double>(h - n + 1);
    return total / windows;
}

inline double mean(std::span<const double> values) {
    require(!values.empty(), "mean of an empty selection");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

// Arithmetic mean of per-pair SSIM; pairs are (received, source).
inline double avg_ssim(std::span<const std::pair<ImageGrid, ImageGrid>> selected, const SsimParams& p = {}) {
    require(!selected.empty(), "avg_ssim: empty selection");
    std::vector<double> scores;
    scores.reserve(selected.size());
    for (const auto& [received, source] : selected) scores.push_back(ssim(received, source, p));
    return mean(scores);
}

// Indices of the `best` highest and `worst` lowest scores (each index used
// once; everything when there are fewer than best + worst scores). Ties break
// towards the earlier index.
inline std::vector<std::size_t> select_extremes(std::span<const double> scores, std::size_t best,
                                                std::size_t worst) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (scores.size() <= best + worst) return order;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best));
    picked.insert(picked.end(), order.end() - static_cast<std::ptrdiff_t>(worst), order.end());
    std::sort(picked.begin(), picked.end());
    return picked;
}

inline double extremes_mean(std::span<const double> scores, std::size_t best, std::size_t worst) {
    require(!scores.empty(), "avg_ssim: empty selection");
    std::vector<double> chosen;
    for (std::size_t i : select_extremes(scores, best, worst)) chosen.push_back(scores[i]);
    return mean(chosen);
}

}  // namespace lcrdo
