#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "terrafeat/cloud_io.hpp"
#include "terrafeat/error.hpp"
#include "terrafeat/log.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>

using namespace terrafeat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("terrafeat_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

PointCloud sample_cloud(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1000.0, 1000.0);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<Point3> pts(n);
    std::vector<Rgb> colors(n);
    std::vector<Label> labels(n);
    std::vector<float> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = {u(rng), u(rng), u(rng) * 1e-3};
        colors[i] = {static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                     static_cast<std::uint8_t>(byte(rng))};
        labels[i] = static_cast<Label>(byte(rng));
        a[i] = static_cast<float>(u(rng) / 7.0);
        b[i] = static_cast<float>(u(rng) * 1e-9);
    }
    PointCloud cloud(std::move(pts));
    cloud.set_colors(std::move(colors));
    cloud.set_labels(std::move(labels));
    cloud.set_feature("h_r", std::move(a));
    cloud.set_feature("tiny", std::move(b));
    return cloud;
}

void check_equal(const PointCloud& a, const PointCloud& b)
{
    REQUIRE(a.size() == b.size());
    CHECK(a.positions() == b.positions());
    CHECK(a.has_colors() == b.has_colors());
    CHECK(a.colors() == b.colors());
    CHECK(a.has_labels() == b.has_labels());
    CHECK(a.labels() == b.labels());
    REQUIRE(a.feature_names() == b.feature_names());
    for (const auto& name : a.feature_names())
        CHECK(a.feature(name) == b.feature(name));
}

struct Quiet {
    log::Sink previous = log::set_sink({});
    ~Quiet() { log::set_sink(previous); }
};

} // namespace

TEST_CASE("ascii PLY with colors")
{
    TempDir dir;
    write_file(dir / "a.ply", "ply\nformat ascii 1.0\nelement vertex 3\n"
                              "property float x\nproperty float y\nproperty float z\n"
                              "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
                              "0 0 0 255 0 0\n1 0 0 0 255 0\n0 1 0.5 0 0 255\n");
    const auto c = load_cloud(dir / "a.ply");
    REQUIRE(c.size() == 3);
    CHECK(c.has_colors());
    CHECK_FALSE(c.has_labels());
    CHECK(c.colors()[2] == Rgb{0, 0, 255});
    CHECK(c.positions()[2].z == 0.5);
}

TEST_CASE("xyz text file")
{
    TempDir dir;
    write_file(dir / "a.xyz", "0 0 0\n1 1 1\n");
    const auto c = load_cloud(dir / "a.xyz");
    REQUIRE(c.size() == 2);
    CHECK_FALSE(c.has_colors());
    CHECK(c.positions()[1] == Point3{1, 1, 1});
}

TEST_CASE("text layouts")
{
    TempDir dir;
    SUBCASE("positional columns")
    {
        write_file(dir / "a.txt", "1 2 3 10 20 30 2 0.5 0.25\n4 5 6 40 50 60 1 1.5 1.25\n");
        const auto c = load_cloud(dir / "a.txt", {CloudFormat::xyz});
        REQUIRE(c.size() == 2);
        CHECK(c.colors()[1] == Rgb{40, 50, 60});
        CHECK(c.labels()[0] == 2);
        CHECK(c.feature_names() == std::vector<std::string>{"scalar_0", "scalar_1"});
        CHECK(c.feature("scalar_1")[1] == 1.25f);
    }
    SUBCASE("csv with header in any column order")
    {
        write_file(dir / "a.csv", "h_r,z,x,y,class\n0.5,3,1,2,4\n-1,6,4,5,1\n");
        const auto c = load_cloud(dir / "a.csv");
        REQUIRE(c.size() == 2);
        CHECK(c.positions()[0] == Point3{1, 2, 3});
        CHECK(c.labels()[1] == 1);
        CHECK(c.feature("h_r")[1] == -1.0f);
    }
    SUBCASE("inconsistent column counts")
    {
        write_file(dir / "a.xyz", "0 0 0\n1 1\n");
        CHECK_THROWS_AS(load_cloud(dir / "a.xyz"), IoError);
    }
    SUBCASE("bad class value")
    {
        write_file(dir / "a.csv", "x,y,z,class\n0,0,0,300\n");
        CHECK_THROWS_AS(load_cloud(dir / "a.csv"), IoError);
    }
}

TEST_CASE("non-finite coordinates")
{
    TempDir dir;
    write_file(dir / "a.xyz", "0 0 0\nnan 1 1\n2 2 inf\n3 3 3\n");
    Quiet quiet;
    const auto r = load_cloud_with_report(dir / "a.xyz");
    CHECK(r.cloud.size() == 2);
    CHECK(r.dropped_non_finite == 2);
    LoadOptions strict;
    strict.non_finite = NonFinitePolicy::reject;
    CHECK_THROWS_AS(load_cloud(dir / "a.xyz", strict), IoError);
}

TEST_CASE("malformed and missing files")
{
    TempDir dir;
    CHECK_THROWS_AS(load_cloud(dir / "missing.ply"), IoError);
    write_file(dir / "bad.ply", "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nend_header\n0\n1\n");
    CHECK_THROWS_AS(load_cloud(dir / "bad.ply"), IoError);
    write_file(dir / "trunc.ply", "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\n"
                                  "property float z\nend_header\n0 0 0\n");
    CHECK_THROWS_AS(load_cloud(dir / "trunc.ply"), IoError);
    write_file(dir / "noheader.ply", "not a ply\n");
    CHECK_THROWS_AS(load_cloud(dir / "noheader.ply"), IoError);
    write_file(dir / "a.unknown", "0 0 0\n");
    CHECK_THROWS_AS(load_cloud(dir / "a.unknown"), IoError);
    CHECK_THROWS_AS(save_cloud(PointCloud({{0, 0, 0}}), dir / "no_such_dir" / "x.ply", SaveFormat::ply_binary),
                    IoError);
}

TEST_CASE("binary PLY round trip is bit exact")
{
    TempDir dir;
    const auto cloud = sample_cloud(5000, 1);
    save_cloud(cloud, dir / "a.ply", SaveFormat::ply_binary);
    check_equal(cloud, load_cloud(dir / "a.ply"));
}

TEST_CASE("text formats round trip exactly")
{
    TempDir dir;
    const auto cloud = sample_cloud(500, 2);
    save_cloud(cloud, dir / "a.ply", SaveFormat::ply_ascii);
    check_equal(cloud, load_cloud(dir / "a.ply"));
    save_cloud(cloud, dir / "a.csv", SaveFormat::csv);
    check_equal(cloud, load_cloud(dir / "a.csv"));
}

TEST_CASE("feature columns appear as vertex properties")
{
    TempDir dir;
    PointCloud cloud({{0, 0, 0}});
    cloud.set_feature("h_r", {1.5f});
    save_cloud(cloud, dir / "a.ply", SaveFormat::ply_binary);
    const auto text = read_file(dir / "a.ply");
    CHECK(text.find("property float h_r\n") != std::string::npos);
}

TEST_CASE("empty cloud writes a valid file")
{
    TempDir dir;
    for (auto [name, fmt] : {std::pair{"e.ply", SaveFormat::ply_binary}, std::pair{"e2.ply", SaveFormat::ply_ascii},
                             std::pair{"e.csv", SaveFormat::csv}}) {
        save_cloud(PointCloud{}, dir / name, fmt);
        CHECK(load_cloud(dir / name).size() == 0);
    }
    CHECK(read_file(dir / "e.ply").find("element vertex 0\n") != std::string::npos);
}

TEST_CASE("float32 and big-endian vertex data")
{
    TempDir dir;
    std::string header = "ply\nformat binary_big_endian 1.0\nelement face 0\nproperty list uchar int vertex_indices\n"
                         "element vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
                         "property short intensity\nend_header\n";
    std::string body;
    auto put_be = [&](const void* src, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(src);
        for (std::size_t i = 0; i < n; ++i)
            body.push_back(static_cast<char>(b[n - 1 - i]));
    };
    const float coords[2][3] = {{1.5f, -2.0f, 3.25f}, {4.0f, 5.0f, 6.0f}};
    const std::int16_t intensity[2] = {-7, 300};
    for (int i = 0; i < 2; ++i) {
        for (float f : coords[i])
            put_be(&f, 4);
        put_be(&intensity[i], 2);
    }
    write_file(dir / "be.ply", header + body);
    const auto c = load_cloud(dir / "be.ply");
    REQUIRE(c.size() == 2);
    CHECK(c.positions()[0] == Point3{1.5, -2.0, 3.25});
    CHECK(c.feature("intensity")[0] == -7.0f);
    CHECK(c.feature("intensity")[1] == 300.0f);
}

TEST_CASE("saving is deterministic")
{
    TempDir dir;
    const auto cloud = sample_cloud(300, 3);
    save_cloud(cloud, dir / "a.ply", SaveFormat::ply_binary);
    save_cloud(cloud, dir / "b.ply", SaveFormat::ply_binary);
    CHECK(read_file(dir / "a.ply") == read_file(dir / "b.ply"));
}
