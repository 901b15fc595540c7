#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "so3fm/fisher.hpp"

namespace so3fm {

// Equirectangular heat map of a per-axis marginal density on the sphere.
// For axis k, the marginal at direction d is the mean of the rotation pdf
// over the ring of rotations whose k-th column equals d; with respect to
// the normalized sphere measure it integrates to one. The RGB rendering
// applies a jet-like colormap after normalizing by the image maximum; the
// raw density grid is kept alongside for the normalization checks.
struct SpherePdfImage {
    int width = 0;
    int height = 0;
    std::vector<double> density;        // row-major, width * height
    std::vector<std::uint8_t> pixels;   // RGB, 3 * width * height
};

namespace detail {

// Classic 256-entry jet ramp (blue -> cyan -> yellow -> red).
inline const std::array<std::array<std::uint8_t, 3>, 256>& jet_table() {
    static const auto table = [] {
        std::array<std::array<std::uint8_t, 3>, 256> t{};
        auto ramp = [](double x) {
            return static_cast<std::uint8_t>(
                std::lround(255.0 * std::clamp(1.5 - std::abs(x), 0.0, 1.0)));
        };
        for (int i = 0; i < 256; ++i) {
            const double x = 4.0 * i / 255.0;
            t[i] = {ramp(x - 3.0), ramp(x - 2.0), ramp(x - 1.0)};
        }
        return t;
    }();
    return table;
}

// Right-handed orthonormal triad with d in slot `axis`.
inline Mat3 frame_with_column(const Vec3& d, int axis) {
    Vec3 t = std::abs(d[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = d.cross(t).normalized();
    const Vec3 e2 = d.cross(e1);
    Mat3 r;
    r.col(axis) = d;
    r.col((axis + 1) % 3) = e1;
    r.col((axis + 2) % 3) = e2;
    return r;
}

}  // namespace detail

inline SpherePdfImage render_axis_marginal(const FisherParams& f, int axis,
                                           int width = 256, int height = 128,
                                           int ring_samples = 64) {
    if (axis < 1 || axis > 3) {
        throw std::invalid_argument("render_axis_marginal: axis must be 1, 2 or 3");
    }
    if (width < 2 || height < 2 || ring_samples < 1) {
        throw std::invalid_argument("render_axis_marginal: bad resolution");
    }
    const int col = axis - 1;
    SpherePdfImage img;
    img.width = width;
    img.height = height;
    img.density.resize(static_cast<std::size_t>(width) * height);
    img.pixels.resize(img.density.size() * 3);

    for (int row = 0; row < height; ++row) {
        const double lat = M_PI_2 - M_PI * (row + 0.5) / height;
        for (int px = 0; px < width; ++px) {
            const double lon = -M_PI + 2.0 * M_PI * (px + 0.5) / width;
            const Vec3 d(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                         std::sin(lat));
            const Mat3 base = detail::frame_with_column(d, col);
            double acc = 0.0;
            for (int rs = 0; rs < ring_samples; ++rs) {
                const double phi = 2.0 * M_PI * rs / ring_samples;
                const Mat3 ring = Eigen::AngleAxisd(phi, d).toRotationMatrix() * base;
                acc += std::exp((f.a().transpose() * ring).trace() - f.log_norm());
            }
            img.density[static_cast<std::size_t>(row) * width + px] = acc / ring_samples;
        }
    }

    double maxv = 0.0;
    for (double v : img.density) maxv = std::max(maxv, v);
    if (maxv <= 0.0) maxv = 1.0;
    const auto& jet = detail::jet_table();
    for (std::size_t i = 0; i < img.density.size(); ++i) {
        const int idx = static_cast<int>(
            std::lround(255.0 * std::clamp(img.density[i] / maxv, 0.0, 1.0)));
        img.pixels[3 * i] = jet[idx][0];
        img.pixels[3 * i + 1] = jet[idx][1];
        img.pixels[3 * i + 2] = jet[idx][2];
    }
    return img;
}

// Solid-angle-weighted integral of the rendered marginal over the sphere,
// normalized so the exact answer is 1.
inline double integrate_marginal(const SpherePdfImage& img) {
    double acc = 0.0;
    const double dlon = 2.0 * M_PI / img.width;
    const double dlat = M_PI / img.height;
    for (int row = 0; row < img.height; ++row) {
        const double lat = M_PI_2 - M_PI * (row + 0.5) / img.height;
        const double w = std::cos(lat) * dlon * dlat;
        for (int px = 0; px < img.width; ++px) {
            acc += img.density[static_cast<std::size_t>(row) * img.width + px] * w;
        }
    }
    return acc / (4.0 * M_PI);
}

inline std::string encode_ppm(const SpherePdfImage& img) {
    std::ostringstream out;
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    return out.str();
}

}  // namespace so3fm
