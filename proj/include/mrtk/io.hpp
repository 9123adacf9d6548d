#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mrtk/core.hpp"

namespace mrtk {

// MRV1 volume container:
//   bytes 0-7   magic "MRVOL001"
//   bytes 8-15  little-endian u64 header length H
//   H bytes     UTF-8 JSON header {dtype, shape, axes, pixel_spacing_mm, meta}
//   then raw C-order little-endian array data.
// dtype: "c64f" (complex, interleaved (re,im) float64 pairs), "f32", "u16".
// axes are always ["frequency","phase","slice","coil"]; single-coil / real data
// use a coil extent of 1.

namespace mrv {

constexpr char kMagic[8] = {'M', 'R', 'V', 'O', 'L', '0', '0', '1'};

struct File {
    std::string dtype;
    std::vector<std::size_t> shape;  // [nx, ny, nz, ncoils]
    std::array<double, 3> pixel_spacing_mm{1.0, 1.0, 1.0};
    json meta = json::object();
    std::vector<std::uint8_t> raw;  // array bytes, C-order over shape
};

inline std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "c64f") return 16;
    if (dtype == "f32") return 4;
    if (dtype == "u16") return 2;
    throw ValidationError("MRV1: unknown dtype " + dtype);
}

inline void write_file(const std::string& path, const File& f) {
    json header = {
        {"dtype", f.dtype},
        {"shape", f.shape},
        {"axes", {"frequency", "phase", "slice", "coil"}},
        {"pixel_spacing_mm", {f.pixel_spacing_mm[0], f.pixel_spacing_mm[1], f.pixel_spacing_mm[2]}},
        {"meta", f.meta},
    };
    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("MRV1: cannot open for writing: " + path);
    out.write(kMagic, 8);
    std::uint64_t hlen = hs.size();
    char lenbuf[8];
    for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xFF);
    out.write(lenbuf, 8);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(f.raw.data()), static_cast<std::streamsize>(f.raw.size()));
    if (!out) throw ValidationError("MRV1: write failed: " + path);
}

inline File read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("MRV1: cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw ValidationError("MRV1: bad magic in " + path);
    char lenbuf[8];
    in.read(lenbuf, 8);
    std::uint64_t hlen = 0;
    for (int i = 0; i < 8; ++i) hlen |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(lenbuf[i])) << (8 * i);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw ValidationError("MRV1: truncated header in " + path);
    json header = json::parse(hs);

    File f;
    f.dtype = header.at("dtype").get<std::string>();
    f.shape = header.at("shape").get<std::vector<std::size_t>>();
    if (f.shape.size() != 4) throw ValidationError("MRV1: expected 4-axis shape in " + path);
    if (header.contains("pixel_spacing_mm")) {
        auto sp = header["pixel_spacing_mm"].get<std::vector<double>>();
        for (std::size_t i = 0; i < 3 && i < sp.size(); ++i) f.pixel_spacing_mm[i] = sp[i];
    }
    if (header.contains("meta")) f.meta = header["meta"];

    std::size_t count = 1;
    for (auto d : f.shape) count *= d;
    f.raw.resize(count * dtype_size(f.dtype));
    in.read(reinterpret_cast<char*>(f.raw.data()), static_cast<std::streamsize>(f.raw.size()));
    if (!in) throw ValidationError("MRV1: truncated data in " + path);
    return f;
}

}  // namespace mrv

// --- typed helpers ---------------------------------------------------------
// In-memory layout is coil-major; file layout is C-order [nx,ny,nz,coil]
// (coil fastest), so coil extents > 1 are transposed on the way through.

inline void write_kspace(const std::string& path, const KSpaceVolume& ksp,
                         const json& meta = json::object()) {
    mrv::File f;
    f.dtype = "c64f";
    f.shape = {ksp.shape.nx, ksp.shape.ny, ksp.shape.nz, ksp.ncoils};
    f.pixel_spacing_mm = ksp.spacing;
    f.meta = meta;
    f.raw.resize(ksp.data.size() * 16);
    double* out = reinterpret_cast<double*>(f.raw.data());
    const std::size_t vox = ksp.shape.total();
    for (std::size_t v = 0; v < vox; ++v)
        for (std::size_t c = 0; c < ksp.ncoils; ++c) {
            const cdouble val = ksp.data[c * vox + v];
            out[2 * (v * ksp.ncoils + c)] = val.real();
            out[2 * (v * ksp.ncoils + c) + 1] = val.imag();
        }
    mrv::write_file(path, f);
}

inline KSpaceVolume read_kspace(const std::string& path) {
    mrv::File f = mrv::read_file(path);
    if (f.dtype != "c64f") throw ValidationError("MRV1: expected c64f volume in " + path);
    KSpaceVolume ksp({f.shape[0], f.shape[1], f.shape[2]}, f.shape[3]);
    ksp.spacing = f.pixel_spacing_mm;
    const double* in = reinterpret_cast<const double*>(f.raw.data());
    const std::size_t vox = ksp.shape.total();
    for (std::size_t v = 0; v < vox; ++v)
        for (std::size_t c = 0; c < ksp.ncoils; ++c)
            ksp.data[c * vox + v] = cdouble(in[2 * (v * ksp.ncoils + c)], in[2 * (v * ksp.ncoils + c) + 1]);
    return ksp;
}

inline void write_complex_image(const std::string& path, const ImageVolume& img) {
    KSpaceVolume k(img.shape, 1);
    k.data = img.data;
    k.spacing = img.spacing;
    write_kspace(path, k, img.meta);
}

inline ImageVolume read_complex_image(const std::string& path) {
    mrv::File f = mrv::read_file(path);
    if (f.dtype != "c64f" || f.shape[3] != 1)
        throw ValidationError("MRV1: expected single-coil c64f volume in " + path);
    ImageVolume img({f.shape[0], f.shape[1], f.shape[2]});
    img.spacing = f.pixel_spacing_mm;
    img.meta = f.meta;
    const double* in = reinterpret_cast<const double*>(f.raw.data());
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = cdouble(in[2 * i], in[2 * i + 1]);
    return img;
}

inline void write_real_volume(const std::string& path, const RealVolume& vol) {
    mrv::File f;
    f.dtype = "f32";
    f.shape = {vol.shape.nx, vol.shape.ny, vol.shape.nz, 1};
    f.pixel_spacing_mm = vol.spacing;
    f.meta = vol.meta;
    f.raw.resize(vol.data.size() * 4);
    float* out = reinterpret_cast<float*>(f.raw.data());
    for (std::size_t i = 0; i < vol.data.size(); ++i) out[i] = static_cast<float>(vol.data[i]);
    mrv::write_file(path, f);
}

inline RealVolume read_real_volume(const std::string& path) {
    mrv::File f = mrv::read_file(path);
    if (f.dtype != "f32" || f.shape[3] != 1)
        throw ValidationError("MRV1: expected f32 volume in " + path);
    RealVolume vol({f.shape[0], f.shape[1], f.shape[2]});
    vol.spacing = f.pixel_spacing_mm;
    vol.meta = f.meta;
    const float* in = reinterpret_cast<const float*>(f.raw.data());
    for (std::size_t i = 0; i < vol.data.size(); ++i) vol.data[i] = in[i];
    return vol;
}

inline void write_u16_volume(const std::string& path, Shape3 shape,
                             const std::vector<std::uint16_t>& codes,
                             const json& meta = json::object()) {
    if (codes.size() != shape.total()) throw ValidationError("u16 volume: size mismatch");
    mrv::File f;
    f.dtype = "u16";
    f.shape = {shape.nx, shape.ny, shape.nz, 1};
    f.meta = meta;
    f.raw.resize(codes.size() * 2);
    std::memcpy(f.raw.data(), codes.data(), f.raw.size());
    mrv::write_file(path, f);
}

inline std::vector<std::uint16_t> read_u16_volume(const std::string& path, Shape3* shape_out = nullptr,
                                                  json* meta_out = nullptr) {
    mrv::File f = mrv::read_file(path);
    if (f.dtype != "u16") throw ValidationError("MRV1: expected u16 volume in " + path);
    std::vector<std::uint16_t> codes(f.raw.size() / 2);
    std::memcpy(codes.data(), f.raw.data(), f.raw.size());
    if (shape_out) *shape_out = {f.shape[0], f.shape[1], f.shape[2]};
    if (meta_out) *meta_out = f.meta;
    return codes;
}

// Flat f32 parameter vector with a JSON sidecar header (model checkpoints).
inline void write_params(const std::string& path, const std::vector<double>& params, const json& meta) {
    mrv::File f;
    f.dtype = "f32";
    f.shape = {params.size(), 1, 1, 1};
    f.meta = meta;
    f.raw.resize(params.size() * 4);
    float* out = reinterpret_cast<float*>(f.raw.data());
    for (std::size_t i = 0; i < params.size(); ++i) out[i] = static_cast<float>(params[i]);
    mrv::write_file(path, f);
}

inline std::vector<double> read_params(const std::string& path, json* meta_out) {
    mrv::File f = mrv::read_file(path);
    if (f.dtype != "f32") throw ValidationError("MRV1: expected f32 params in " + path);
    std::vector<double> params(f.shape[0]);
    const float* in = reinterpret_cast<const float*>(f.raw.data());
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = in[i];
    if (meta_out) *meta_out = f.meta;
    return params;
}

}  // namespace mrtk
