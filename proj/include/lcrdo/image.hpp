#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lcrdo/errors.hpp"
#include "lcrdo/rng.hpp"

namespace lcrdo {

// 8-bit luminance raster, row-major.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        require(width > 0 && height > 0, "image dimensions must be positive");
        samples_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return samples_.empty(); }
    std::size_t size() const noexcept { return samples_.size(); }

    std::uint8_t at(int x, int y) const { return samples_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return samples_[index(x, y)]; }

    const std::uint8_t* row(int y) const { return samples_.data() + index(0, y); }
    std::uint8_t* row(int y) { return samples_.data() + index(0, y); }

    const std::vector<std::uint8_t>& samples() const noexcept { return samples_; }
    std::vector<std::uint8_t>& samples() noexcept { return samples_; }

    bool same_shape(const ImageGrid& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> samples_;
};

namespace detail {

inline double smoothstep(double t) noexcept { return t * t * (3.0 - 2.0 * t); }

// One octave of value noise evaluated on a full raster. Lattice values are
// keyed by integer lattice coordinates, so the field is unbounded and a
// translation of the sampling window moves the picture without reshuffling it.
inline void add_value_noise_octave(std::vector<double>& acc, int width, int height, std::uint64_t seed,
                                   std::uint64_t octave, double cell, double offset_x, double offset_y,
                                   double weight) {
    const double x0 = offset_x / cell;
    const double y0 = offset_y / cell;
    const auto ix0 = static_cast<std::int64_t>(std::floor(x0));
    const auto iy0 = static_cast<std::int64_t>(std::floor(y0));
    const auto nx = static_cast<std::int64_t>(std::ceil((offset_x + width) / cell)) - ix0 + 2;
    const auto ny = static_cast<std::int64_t>(std::ceil((offset_y + height) / cell)) - iy0 + 2;

    std::vector<double> lattice(static_cast<std::size_t>(nx * ny));
    for (std::int64_t j = 0; j < ny; ++j) {
        for (std::int64_t i = 0; i < nx; ++i) {
            const auto key = (octave << 56) ^ static_cast<std::uint64_t>(ix0 + i);
            lattice[static_cast<std::size_t>(j * nx + i)] =
                to_unit(hash_key(seed, Stream::Content, key, static_cast<std::uint64_t>(iy0 + j)));
        }
    }

    for (int y = 0; y < height; ++y) {
        const double fy = (offset_y + y) / cell;
        const auto ly = static_cast<std::int64_t>(std::floor(fy)) - iy0;
        const double ty = smoothstep(fy - std::floor(fy));
        for (int x = 0; x < width; ++x) {
            const double fx = (offset_x + x) / cell;
            const auto lx = static_cast<std::int64_t>(std::floor(fx)) - ix0;
            const double tx = smoothstep(fx - std::floor(fx));
            const double* r0 = &lattice[static_cast<std::size_t>(ly * nx + lx)];
            const double* r1 = r0 + nx;
            const double top = r0[0] + (r0[1] - r0[0]) * tx;
            const double bottom = r1[0] + (r1[1] - r1[0]) * tx;
            acc[static_cast<std::size_t>(y) * width + x] += weight * (top + (bottom - top) * ty);
        }
    }
}

}  // namespace detail

// Synthetic camera content: three octaves of value noise (cells of 24, 9 and
// 4 pixels, weights 0.55/0.30/0.15) whose sampling window drifts by
// (0.8, 0.3) pixels per frame. Adjacent frames are therefore near-identical
// translations; different seeds give unrelated fields.
inline ImageGrid synth_frame(std::uint64_t seed, std::int64_t frame_id, int width, int height) {
    require(width > 0 && height > 0, "synth_frame: dimensions must be positive");
    std::vector<double> acc(static_cast<std::size_t>(width) * height, 0.0);
    const double drift_x = 0.8 * static_cast<double>(frame_id);
    const double drift_y = 0.3 * static_cast<double>(frame_id);
    detail::add_value_noise_octave(acc, width, height, seed, 0, 24.0, drift_x, drift_y, 0.55);
    detail::add_value_noise_octave(acc, width, height, seed, 1, 9.0, 1.3 * drift_x, 1.3 * drift_y, 0.30);
    detail::add_value_noise_octave(acc, width, height, seed, 2, 4.0, 1.7 * drift_x, 1.7 * drift_y, 0.15);

    ImageGrid out(width, height);
    auto& s = out.samples();
    for (std::size_t i = 0; i < acc.size(); ++i) {
        s[i] = static_cast<std::uint8_t>(std::clamp(std::lround(acc[i] * 255.0), 0L, 255L));
    }
    return out;
}

// Quantisation step used to mimic lossy coding at a given quality percent.
// 100 is lossless; 80 gives step 5, 30 gives step 15.
inline int quantizer_step(double quality) {
    if (quality >= 100.0) return 1;
    return std::max(1, static_cast<int>(std::lround(1.0 + (100.0 - quality) / 5.0)));
}

inline ImageGrid quantize(const ImageGrid& img, double quality) {
    const int step = quantizer_step(quality);
    if (step == 1) return img;
    ImageGrid out = img;
    for (auto& v : out.samples()) {
        const long q = std::lround(static_cast<double>(v) / step) * step;
        v = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
    }
    return out;
}

inline double mean_abs_diff(const ImageGrid& a, const ImageGrid& b) {
    require(a.same_shape(b), "mean_abs_diff: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += std::abs(static_cast<int>(a.samples()[i]) - static_cast<int>(b.samples()[i]));
    }
    return sum / static_cast<double>(a.size());
}

// Binary (P5) or ASCII (P2) PGM with maxval <= 255.
inline ImageGrid read_pgm(std::istream& in) {
    auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw ConfigError("pgm: unexpected end of header");
    };
    const std::string magic = next_token();
    require(magic == "P5" || magic == "P2", "pgm: unsupported magic '" + magic + "'");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::logic_error&) {
        throw ConfigError("pgm: malformed header");
    }
    require(w > 0 && h > 0, "pgm: dimensions must be positive");
    require(maxval > 0 && maxval <= 255, "pgm: only 8-bit maxval supported");
    ImageGrid img(w, h);
    if (magic == "P5") {
        in.get();
        in.read(reinterpret_cast<char*>(img.samples().data()), static_cast<std::streamsize>(img.size()));
        require(static_cast<std::size_t>(in.gcount()) == img.size(), "pgm: truncated pixel data");
    } else {
        for (auto& v : img.samples()) {
            int value = 0;
            require(static_cast<bool>(in >> value), "pgm: truncated pixel data");
            v = static_cast<std::uint8_t>(std::clamp(value, 0, 255));
        }
    }
    if (maxval != 255) {
        for (auto& v : img.samples()) v = static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
    }
    return img;
}

inline ImageGrid read_pgm_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open image '" + path + "'");
    return read_pgm(in);
}

inline void write_pgm(std::ostream& out, const ImageGrid& img) {
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.samples().data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace lcrdo
