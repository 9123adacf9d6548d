#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mrtk/io.hpp"
#include "mrtk/rng.hpp"

using namespace mrtk;

namespace {
std::string tmp_path(const std::string& name) {
    static const std::string dir = [] {
        const std::string d = (std::filesystem::temp_directory_path() / "mrtk_io_tests").string();
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir + "/" + name;
}
}  // namespace

TEST_CASE("k-space MRV1 roundtrip preserves every sample and the metadata") {
    KSpaceVolume k({6, 5, 4}, 3);
    k.spacing = {1.0, 1.5, 2.0};
    CounterRng rng(1);
    for (auto& v : k.data) v = rng.cnormal(1.0);
    const std::string path = tmp_path("k.mrv");
    write_kspace(path, k, json{{"note", 42}});
    const KSpaceVolume back = read_kspace(path);
    REQUIRE(back.shape == k.shape);
    REQUIRE(back.ncoils == 3);
    REQUIRE(back.spacing == k.spacing);
    REQUIRE(std::memcmp(back.data.data(), k.data.data(), k.data.size() * sizeof(cdouble)) == 0);
    REQUIRE(mrv::read_file(path).meta.at("note") == 42);
}

TEST_CASE("file layout stores the coil axis fastest") {
    KSpaceVolume k({2, 1, 1}, 2);
    k.at(0, 0, 0, 0) = {1, 0};
    k.at(0, 1, 0, 0) = {2, 0};
    k.at(1, 0, 0, 0) = {3, 0};
    k.at(1, 1, 0, 0) = {4, 0};
    const std::string path = tmp_path("layout.mrv");
    write_kspace(path, k);
    const mrv::File f = mrv::read_file(path);
    const double* d = reinterpret_cast<const double*>(f.raw.data());
    // C-order [nx, ny, nz, coil]: (x=0,c=0), (x=0,c=1), (x=1,c=0), (x=1,c=1)
    REQUIRE(d[0] == 1.0);
    REQUIRE(d[2] == 3.0);
    REQUIRE(d[4] == 2.0);
    REQUIRE(d[6] == 4.0);
}

TEST_CASE("real volume roundtrip is exact at f32 precision") {
    RealVolume v({4, 4, 4});
    CounterRng rng(2);
    for (auto& x : v.data) x = static_cast<float>(rng.uniform());
    v.meta = {{"slice_meta", {{"pulse_dim", 3}}}};
    const std::string path = tmp_path("real.mrv");
    write_real_volume(path, v);
    const RealVolume back = read_real_volume(path);
    REQUIRE(back.shape == v.shape);
    REQUIRE(back.data == v.data);
    REQUIRE(back.meta.at("slice_meta").at("pulse_dim") == 3);
}

TEST_CASE("u16 and parameter containers roundtrip") {
    const Shape3 s{3, 3, 3};
    std::vector<std::uint16_t> codes(s.total());
    for (std::size_t i = 0; i < codes.size(); ++i) codes[i] = static_cast<std::uint16_t>(i * 7);
    const std::string upath = tmp_path("codes.mrv");
    write_u16_volume(upath, s, codes, json{{"bits", 12}});
    Shape3 s2;
    json meta;
    REQUIRE(read_u16_volume(upath, &s2, &meta) == codes);
    REQUIRE(s2 == s);
    REQUIRE(meta.at("bits") == 12);

    std::vector<double> params{0.5, -1.25, 3.0};
    const std::string ppath = tmp_path("params.mrv");
    write_params(ppath, params, json{{"kind", "test"}});
    json pmeta;
    REQUIRE(read_params(ppath, &pmeta) == params);
    REQUIRE(pmeta.at("kind") == "test");
}

TEST_CASE("malformed containers are rejected") {
    const std::string path = tmp_path("bad.mrv");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTMAGIC12345678";
    }
    REQUIRE_THROWS_AS(mrv::read_file(path), ValidationError);

    KSpaceVolume k({4, 4, 4}, 1);
    const std::string tpath = tmp_path("trunc.mrv");
    write_kspace(tpath, k);
    std::filesystem::resize_file(tpath, std::filesystem::file_size(tpath) / 2);
    REQUIRE_THROWS_AS(read_kspace(tpath), ValidationError);

    RealVolume v({4, 4, 4});
    const std::string rpath = tmp_path("realnotk.mrv");
    write_real_volume(rpath, v);
    REQUIRE_THROWS_AS(read_kspace(rpath), ValidationError);
}
