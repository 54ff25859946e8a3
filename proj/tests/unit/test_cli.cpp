#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "terrafeat/cloud_io.hpp"
#include "terrafeat/raster.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

using namespace terrafeat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        static int counter = 0;
        path = fs::temp_directory_path() / ("terrafeat_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p, std::ios::binary) << text;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const TempDir& dir, const std::string& args)
{
    const std::string out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + TERRAFEAT_CLI + "\" " + args + " >\"" + out + "\" 2>\"" + err + "\"";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

std::size_t line_count(const std::string& s)
{
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

/// mIoU column of an ablation CSV, one value per data row.
std::vector<double> ablation_miou(const std::string& csv)
{
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string cell;
        while (std::getline(h, cell, ','))
            header.push_back(cell);
    }
    const auto col = std::find(header.begin(), header.end(), "miou") - header.begin();
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::istringstream r(line);
        std::string cell;
        for (std::ptrdiff_t i = 0; std::getline(r, cell, ','); ++i)
            if (i == col)
                out.push_back(std::stod(cell));
    }
    return out;
}

} // namespace

TEST_CASE("usage")
{
    TempDir dir;
    CHECK(run(dir, "--help").code == 0);
    CHECK(run(dir, "").code == 2);
    CHECK(run(dir, "pipeline --no_such_flag 1").code == 2);
    CHECK(run(dir, "frobnicate").code == 2);
    const auto r = run(dir, "pipeline --help");
    CHECK(r.code == 0);
    for (const char* flag : {"--dsm_cell", "--min_filter_radius", "--min_filter_tol", "--k_planarity", "--k_normal",
                             "--ground_mode", "--relz_mode", "--subsample_cell", "--features", "--seed", "--mask"})
        CHECK(r.out.find(flag) != std::string::npos);
}

TEST_CASE("synth, pipeline and raster export")
{
    TempDir dir;
    REQUIRE(run(dir, "synth --preset town --size 60 --density 6 --seed 2 --output " + (dir / "town.ply")).code == 0);
    REQUIRE(fs::exists(dir / "town.ply"));
    const std::string input_before = read_file(dir / "town.ply");

    write_file(dir / "run.cfg", "# town run\ninput = " + (dir / "town.ply") + "\noutput = " + (dir / "out/t.ply") +
                                    "\nmin_filter_radius = 15\nmin_filter_tol = 1.0\nfeatures = nu\n");
    const auto r = run(dir, "pipeline --config " + (dir / "run.cfg") + " --features h_r,planarity");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("stage timings") != std::string::npos);
    CHECK(read_file(dir / "town.ply") == input_before);
    const auto out = load_cloud(dir / "out/t.ply");
    CHECK(out.feature_names() == std::vector<std::string>{"h_r", "planarity"});
    for (const char* layer : {"dsm", "dtm", "ndsm"})
        CHECK(fs::exists(dir / ("out/t_" + std::string(layer) + ".asc")));

    const std::string first = read_file(dir / "out/t.ply");
    REQUIRE(run(dir, "pipeline --config " + (dir / "run.cfg") + " --features h_r,planarity").code == 0);
    CHECK(read_file(dir / "out/t.ply") == first);

    SUBCASE("features command")
    {
        const auto f = run(dir, "features --input " + (dir / "town.ply") + " --output " + (dir / "f.csv") +
                                    " --features nu,sigma_z --output_format csv");
        REQUIRE(f.code == 0);
        CHECK(load_cloud(dir / "f.csv").feature_names() == std::vector<std::string>{"nu", "sigma_z"});
        CHECK(run(dir, "features --input " + (dir / "town.ply") + " --output " + (dir / "g.ply") + " --features \"\"")
                  .code == 2);
    }
    SUBCASE("raster export")
    {
        const std::string base = " --input " + (dir / "town.ply") + " --min_filter_radius 15 --min_filter_tol 1";
        REQUIRE(run(dir, "raster-export" + base + " --layer dtm --format asc --output " + (dir / "dtm.asc")).code == 0);
        const auto dtm = import_asc(dir / "dtm.asc");
        CHECK(dtm.geometry() == import_asc(dir / "out/t_dtm.asc").geometry());
        REQUIRE(run(dir, "raster-export" + base + " --layer nu --format pgm --output " + (dir / "nu.pgm")).code == 0);
        CHECK(read_file(dir / "nu.pgm").rfind("P5\n", 0) == 0);
        REQUIRE(run(dir, "raster-export --raster " + (dir / "dtm.asc") + " --format pgm --output " + (dir / "c.pgm"))
                    .code == 0);
        CHECK(run(dir, "raster-export" + base + " --layer slope --output " + (dir / "x.asc")).code == 2);
    }
    SUBCASE("ablation")
    {
        const auto a = run(dir, "ablation --input " + (dir / "out/t.ply") + " --set color --set color,h_r --output " +
                                    (dir / "abl.csv"));
        REQUIRE(a.code == 0);
        const auto miou = ablation_miou(read_file(dir / "abl.csv"));
        REQUIRE(miou.size() == 2);
        CHECK(miou[1] > miou[0]);
        const auto three = run(dir, "ablation --input " + (dir / "out/t.ply") +
                                        " --set color --set color,h_r --set all --output " + (dir / "abl3.csv"));
        REQUIRE(three.code == 0);
        CHECK(ablation_miou(read_file(dir / "abl3.csv")).size() == 3);
        CHECK(run(dir, "ablation --input " + (dir / "out/t.ply")).code == 2);
        CHECK(run(dir, "ablation --input " + (dir / "out/t.ply") + " --set color,sigma_z").code == 2);
    }
}

TEST_CASE("exit codes for I/O and numerical failures")
{
    TempDir dir;
    CHECK(run(dir, "pipeline --input " + (dir / "none.ply") + " --output " + (dir / "o.ply") +
                       " --min_filter_radius 5")
              .code == 3);
    REQUIRE(run(dir, "synth --preset flat --size 20 --density 4 --output " + (dir / "flat.ply")).code == 0);
    const std::string base = "pipeline --input " + (dir / "flat.ply") + " --output " + (dir / "o.ply");
    CHECK(run(dir, base).code == 2); // radius missing
    write_file(dir / "bad.cfg", "dsm_cell = fast\n");
    CHECK(run(dir, base + " --config " + (dir / "bad.cfg")).code == 2);

    // A mask over everything leaves no ground candidates.
    REQUIRE(run(dir, "raster-export --input " + (dir / "flat.ply") + " --layer nu --output " + (dir / "nu.asc")).code ==
            0);
    auto nu = import_asc(dir / "nu.asc");
    RasterGrid all(nu.geometry(), 1.0);
    export_raster(all, dir / "mask.asc", RasterFormat::asc);
    const auto r = run(dir, base + " --min_filter_radius 5 --mask " + (dir / "mask.asc"));
    CHECK(r.code == 4);
    CHECK(r.err.find("ground candidates") != std::string::npos);
}

TEST_CASE("eval")
{
    TempDir dir;
    std::ostringstream csv;
    csv << "x,y,z,class,pred\n";
    auto rows = [&](int n, int gt, int pred) {
        for (int i = 0; i < n; ++i)
            csv << i << ",0,0," << gt << ',' << pred << '\n';
    };
    rows(50, 0, 0);
    rows(10, 0, 1);
    rows(20, 1, 0);
    rows(20, 1, 1);
    write_file(dir / "both.csv", csv.str());

    const auto r = run(dir, "eval --gt " + (dir / "both.csv") + " --pred_column pred --report " + (dir / "r.txt") +
                                " --report_csv " + (dir / "r.csv"));
    REQUIRE(r.code == 0);
    for (const char* v : {"70.00", "62.50", "40.00", "51.25", "76.92", "57.14", "67.03"})
        CHECK(r.out.find(v) != std::string::npos);
    CHECK(read_file(dir / "r.txt") == r.out);
    CHECK(read_file(dir / "r.csv").rfind("class,iou,f1,support\n", 0) == 0);

    const auto same = run(dir, "eval --gt " + (dir / "both.csv") + " --pred " + (dir / "both.csv"));
    REQUIRE(same.code == 0);
    CHECK(same.out.find("100.00") != std::string::npos);
    CHECK(same.out.find("70.00") == std::string::npos);

    write_file(dir / "nolabel.xyz", "0 0 0\n1 1 1\n");
    const auto missing = run(dir, "eval --gt " + (dir / "nolabel.xyz") + " --pred " + (dir / "both.csv"));
    CHECK(missing.code != 0);
    CHECK(missing.err.find("class") != std::string::npos);

    write_file(dir / "short.csv", "x,y,z,class\n0,0,0,1\n");
    CHECK(run(dir, "eval --gt " + (dir / "both.csv") + " --pred " + (dir / "short.csv")).code == 2);
    CHECK(run(dir, "eval --gt " + (dir / "both.csv") + " --pred_column nothing").code == 2);
}

TEST_CASE("synth from a JSON spec")
{
    TempDir dir;
    write_file(dir / "scene.json", R"({"extent": [0, 0, 30, 30], "density": 5, "seed": 7,
        "terrain": {"kind": "sinusoid", "amplitude": 1, "period": 40},
        "boxes": [{"min": [10, 10], "max": [20, 20], "height": 8}],
        "trees": [{"center": [25, 5], "radius": 2}],
        "roads": [{"from": [0, 25], "to": [30, 25], "width": 4}]})");
    REQUIRE(run(dir, "synth --spec " + (dir / "scene.json") + " --output " + (dir / "a.ply")).code == 0);
    REQUIRE(run(dir, "synth --spec " + (dir / "scene.json") + " --output " + (dir / "b.ply")).code == 0);
    CHECK(read_file(dir / "a.ply") == read_file(dir / "b.ply"));
    const auto c = load_cloud(dir / "a.ply");
    CHECK(c.has_labels());
    CHECK(c.has_colors());

    write_file(dir / "bad.json", R"({"density": 0})");
    CHECK(run(dir, "synth --spec " + (dir / "bad.json") + " --output " + (dir / "c.ply")).code == 2);
    CHECK(run(dir, "synth --preset moon --output " + (dir / "c.ply")).code == 2);
    CHECK(run(dir, "synth --output " + (dir / "c.ply")).code == 2);
}
