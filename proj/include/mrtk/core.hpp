#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mrtk {

using cdouble = std::complex<double>;
using json = nlohmann::json;

// Thrown for invalid inputs, configs, or contract violations (CLI exit 3).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown for numeric failures: divergence, singular systems (CLI exit 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Encoding axes. Mapping to grid dimensions is fixed:
// frequency -> dim 0 (x), phase -> dim 1 (y), slice -> dim 2 (z).
enum class Axis : int { frequency = 0, phase = 1, slice = 2 };

inline const char* axis_name(Axis a) {
    switch (a) {
        case Axis::frequency: return "frequency";
        case Axis::phase: return "phase";
        case Axis::slice: return "slice";
    }
    return "?";
}

inline Axis axis_from_name(const std::string& s) {
    if (s == "frequency") return Axis::frequency;
    if (s == "phase") return Axis::phase;
    if (s == "slice") return Axis::slice;
    throw ValidationError("unknown axis name: " + s);
}

struct Shape3 {
    std::size_t nx = 0, ny = 0, nz = 0;

    std::size_t total() const { return nx * ny * nz; }
    std::size_t dim(int i) const { return i == 0 ? nx : (i == 1 ? ny : nz); }
    std::size_t& dim(int i) { return i == 0 ? nx : (i == 1 ? ny : nz); }
    bool operator==(const Shape3&) const = default;

    std::string str() const {
        return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
    }
};

// Complex 3D image grid [nx, ny, nz], z fastest-varying.
struct ImageVolume {
    Shape3 shape;
    std::vector<cdouble> data;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per axis
    json meta = json::object();

    ImageVolume() = default;
    explicit ImageVolume(Shape3 s) : shape(s), data(s.total()) {}

    std::size_t idx(std::size_t x, std::size_t y, std::size_t z) const {
        return (x * shape.ny + y) * shape.nz + z;
    }
    cdouble& at(std::size_t x, std::size_t y, std::size_t z) { return data[idx(x, y, z)]; }
    const cdouble& at(std::size_t x, std::size_t y, std::size_t z) const { return data[idx(x, y, z)]; }
};

// Per-coil complex image stack, coil-major: [coil][nx][ny][nz].
struct CoilImages {
    Shape3 shape;
    std::size_t ncoils = 0;
    std::vector<cdouble> data;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    CoilImages() = default;
    CoilImages(Shape3 s, std::size_t nc) : shape(s), ncoils(nc), data(s.total() * nc) {}

    std::size_t idx(std::size_t c, std::size_t x, std::size_t y, std::size_t z) const {
        return ((c * shape.nx + x) * shape.ny + y) * shape.nz + z;
    }
    cdouble& at(std::size_t c, std::size_t x, std::size_t y, std::size_t z) {
        return data[idx(c, x, y, z)];
    }
    const cdouble& at(std::size_t c, std::size_t x, std::size_t y, std::size_t z) const {
        return data[idx(c, x, y, z)];
    }
    cdouble* coil(std::size_t c) { return data.data() + c * shape.total(); }
    const cdouble* coil(std::size_t c) const { return data.data() + c * shape.total(); }
};

// Multi-coil frequency-domain grid. Stored centered: DC at index n/2 per axis.
struct KSpaceVolume {
    Shape3 shape;
    std::size_t ncoils = 0;
    std::vector<cdouble> data;  // coil-major, same layout as CoilImages
    bool is_centered = true;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};

    KSpaceVolume() = default;
    KSpaceVolume(Shape3 s, std::size_t nc) : shape(s), ncoils(nc), data(s.total() * nc) {}

    std::size_t idx(std::size_t c, std::size_t x, std::size_t y, std::size_t z) const {
        return ((c * shape.nx + x) * shape.ny + y) * shape.nz + z;
    }
    cdouble& at(std::size_t c, std::size_t x, std::size_t y, std::size_t z) {
        return data[idx(c, x, y, z)];
    }
    const cdouble& at(std::size_t c, std::size_t x, std::size_t y, std::size_t z) const {
        return data[idx(c, x, y, z)];
    }
    cdouble* coil(std::size_t c) { return data.data() + c * shape.total(); }
    const cdouble* coil(std::size_t c) const { return data.data() + c * shape.total(); }
};

// Real-valued 3D grid (reconstructed images, masks rendered as volumes, ...).
struct RealVolume {
    Shape3 shape;
    std::vector<double> data;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    json meta = json::object();

    RealVolume() = default;
    explicit RealVolume(Shape3 s) : shape(s), data(s.total()) {}

    std::size_t idx(std::size_t x, std::size_t y, std::size_t z) const {
        return (x * shape.ny + y) * shape.nz + z;
    }
    double& at(std::size_t x, std::size_t y, std::size_t z) { return data[idx(x, y, z)]; }
    const double& at(std::size_t x, std::size_t y, std::size_t z) const { return data[idx(x, y, z)]; }
};

// 2D real image, row-major [rows][cols]. The slice unit of the network path.
struct Image2D {
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Image2D() = default;
    Image2D(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
    const double& at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

template <typename T>
void ensure_finite(const std::vector<std::complex<T>>& data, const std::string& what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i].real()) || !std::isfinite(data[i].imag()))
            throw ValidationError(what + ": non-finite value at flat index " + std::to_string(i));
    }
}

inline void ensure_finite(const std::vector<double>& data, const std::string& what) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i]))
            throw ValidationError(what + ": non-finite value at flat index " + std::to_string(i));
    }
}

// Extract in-plane slice z of a real volume: rows = frequency (x), cols = phase (y).
inline Image2D volume_slice(const RealVolume& vol, std::size_t z) {
    if (z >= vol.shape.nz) throw ValidationError("slice index out of range");
    Image2D img(vol.shape.nx, vol.shape.ny);
    for (std::size_t x = 0; x < vol.shape.nx; ++x)
        for (std::size_t y = 0; y < vol.shape.ny; ++y)
            img.at(x, y) = vol.at(x, y, z);
    return img;
}

}  // namespace mrtk
