#include "terrafeat/synth.hpp"

#include "terrafeat/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace terrafeat {

double TerrainSpec::height(double x, double y) const
{
    double z = base + slope_x * x + slope_y * y;
    if (kind == Kind::sinusoid) {
        const double k = 2.0 * std::numbers::pi / period;
        z += amplitude * std::sin(k * x) * std::cos(k * y);
    }
    return z;
}

bool RoadSpec::covers(double x, double y) const
{
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double px = x0 + t * dx - x, py = y0 + t * dy - y;
    return px * px + py * py <= 0.25 * width * width;
}

void SceneSpec::validate() const
{
    if (!(xmax > xmin && ymax > ymin))
        throw std::invalid_argument("scene extent is empty");
    if (!(density > 0.0))
        throw std::invalid_argument("scene density must be positive");
    if (!(noise >= 0.0) || !(color_noise >= 0.0))
        throw std::invalid_argument("scene noise must be non-negative");
    if (terrain.kind == TerrainSpec::Kind::sinusoid && !(terrain.period > 0.0))
        throw std::invalid_argument("terrain period must be positive");
    for (const auto& b : boxes)
        if (!(b.height >= 0.0) || !(b.x1 > b.x0 && b.y1 > b.y0))
            throw std::invalid_argument("box needs a nonempty footprint and non-negative height");
    for (const auto& t : trees)
        if (!(t.density > 0.0) || !(t.radius > 0.0) || !(t.center_height >= 0.0))
            throw std::invalid_argument("tree needs positive density and radius, non-negative height");
    for (const auto& r : roads)
        if (!(r.width > 0.0))
            throw std::invalid_argument("road width must be positive");
}

bool SceneSpec::under_box(double x, double y) const
{
    return std::any_of(boxes.begin(), boxes.end(), [&](const BoxSpec& b) { return b.covers(x, y); });
}

double SceneSpec::roof_height(const BoxSpec& box) const
{
    return terrain_height(0.5 * (box.x0 + box.x1), 0.5 * (box.y0 + box.y1)) + box.height;
}

PointCloud generate_scene(const SceneSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(derive_seed(spec.seed, SeedStream::synth));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> znoise(0.0, 1.0);
    std::normal_distribution<double> cnoise(0.0, 1.0);

    std::vector<Point3> pts;
    std::vector<Rgb> colors;
    std::vector<Label> labels;
    auto emit = [&](double x, double y, double z, Rgb c, Label l) {
        pts.push_back({x, y, z + spec.noise * znoise(rng)});
        auto jitter = [&](std::uint8_t v) {
            const double j = static_cast<double>(v) + spec.color_noise * cnoise(rng);
            return static_cast<std::uint8_t>(std::clamp(std::lround(j), 0L, 255L));
        };
        colors.push_back({jitter(c.r), jitter(c.g), jitter(c.b)});
        labels.push_back(l);
    };
    auto count_for = [&](double measure) {
        return static_cast<std::size_t>(std::llround(spec.density * measure));
    };

    const double w = spec.xmax - spec.xmin;
    const double h = spec.ymax - spec.ymin;
    const std::size_t n_terrain = count_for(w * h);
    pts.reserve(n_terrain + n_terrain / 4);
    for (std::size_t i = 0; i < n_terrain; ++i) {
        const double x = spec.xmin + w * unit(rng);
        const double y = spec.ymin + h * unit(rng);
        if (spec.under_box(x, y))
            continue;
        Rgb c = spec.terrain_color;
        Label l = spec.terrain_label;
        for (const auto& r : spec.roads)
            if (r.covers(x, y)) {
                c = r.color;
                l = r.label;
            }
        emit(x, y, spec.terrain_height(x, y), c, l);
    }

    for (const auto& b : spec.boxes) {
        const double roof = spec.roof_height(b);
        const double bw = b.x1 - b.x0, bh = b.y1 - b.y0;
        const std::size_t n_roof = count_for(bw * bh);
        for (std::size_t i = 0; i < n_roof; ++i)
            emit(b.x0 + bw * unit(rng), b.y0 + bh * unit(rng), roof, b.roof_color, b.label);
        // Walls: the four sides from terrain up to the roof.
        struct Side {
            double ax, ay, bx, by;
        };
        const Side sides[4] = {{b.x0, b.y0, b.x1, b.y0}, {b.x1, b.y0, b.x1, b.y1},
                               {b.x1, b.y1, b.x0, b.y1}, {b.x0, b.y1, b.x0, b.y0}};
        for (const auto& s : sides) {
            const double len = std::hypot(s.bx - s.ax, s.by - s.ay);
            const std::size_t n_wall = count_for(len * b.height);
            for (std::size_t i = 0; i < n_wall; ++i) {
                const double t = unit(rng);
                const double x = s.ax + t * (s.bx - s.ax);
                const double y = s.ay + t * (s.by - s.ay);
                const double ground = spec.terrain_height(x, y);
                emit(x, y, ground + unit(rng) * (roof - ground), b.wall_color, b.label);
            }
        }
    }

    for (const auto& t : spec.trees) {
        const double volume = 4.0 / 3.0 * std::numbers::pi * t.radius * t.radius * t.radius;
        const auto n_tree = static_cast<std::size_t>(std::llround(t.density * volume));
        const double cz = spec.terrain_height(t.cx, t.cy) + t.center_height;
        for (std::size_t i = 0; i < n_tree;) {
            const double dx = 2.0 * unit(rng) - 1.0, dy = 2.0 * unit(rng) - 1.0, dz = 2.0 * unit(rng) - 1.0;
            if (dx * dx + dy * dy + dz * dz > 1.0)
                continue;
            emit(t.cx + t.radius * dx, t.cy + t.radius * dy, cz + t.radius * dz, t.color, t.label);
            ++i;
        }
    }

    PointCloud cloud(std::move(pts));
    cloud.set_colors(std::move(colors));
    cloud.set_labels(std::move(labels));
    return cloud;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

Rgb rgb_from(const json& j, Rgb fallback)
{
    if (j.is_null())
        return fallback;
    if (!j.is_array() || j.size() != 3)
        throw std::invalid_argument("colors are [r, g, b] arrays");
    return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>()};
}

json rgb_to(Rgb c) { return json::array({c.r, c.g, c.b}); }

template <typename T>
T value_or(const json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

} // namespace

SceneSpec scene_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scene JSON: ") + e.what());
    }
    SceneSpec s;
    try {
        if (j.contains("extent")) {
            const auto& e = j.at("extent");
            s.xmin = e.at(0);
            s.ymin = e.at(1);
            s.xmax = e.at(2);
            s.ymax = e.at(3);
        }
        s.density = value_or(j, "density", s.density);
        s.noise = value_or(j, "noise", s.noise);
        s.color_noise = value_or(j, "color_noise", s.color_noise);
        s.seed = value_or<std::uint64_t>(j, "seed", s.seed);
        s.terrain_color = rgb_from(j.value("terrain_color", json()), s.terrain_color);
        s.terrain_label = value_or<Label>(j, "terrain_class", s.terrain_label);
        if (j.contains("terrain")) {
            const auto& t = j.at("terrain");
            const std::string kind = value_or<std::string>(t, "kind", "plane");
            if (kind == "plane")
                s.terrain.kind = TerrainSpec::Kind::plane;
            else if (kind == "sinusoid")
                s.terrain.kind = TerrainSpec::Kind::sinusoid;
            else
                throw std::invalid_argument("terrain kind must be plane or sinusoid");
            s.terrain.base = value_or(t, "base", 0.0);
            s.terrain.slope_x = value_or(t, "slope_x", 0.0);
            s.terrain.slope_y = value_or(t, "slope_y", 0.0);
            s.terrain.amplitude = value_or(t, "amplitude", 0.0);
            s.terrain.period = value_or(t, "period", 100.0);
        }
        for (const auto& b : j.value("boxes", json::array())) {
            BoxSpec box;
            box.x0 = b.at("min").at(0);
            box.y0 = b.at("min").at(1);
            box.x1 = b.at("max").at(0);
            box.y1 = b.at("max").at(1);
            box.height = b.at("height");
            box.roof_color = rgb_from(b.value("roof_color", json()), box.roof_color);
            box.wall_color = rgb_from(b.value("wall_color", json()), box.wall_color);
            box.label = value_or<Label>(b, "class", box.label);
            s.boxes.push_back(box);
        }
        for (const auto& t : j.value("trees", json::array())) {
            TreeSpec tree;
            tree.cx = t.at("center").at(0);
            tree.cy = t.at("center").at(1);
            tree.radius = t.at("radius");
            tree.center_height = value_or(t, "center_height", tree.center_height);
            tree.density = value_or(t, "density", tree.density);
            tree.color = rgb_from(t.value("color", json()), tree.color);
            tree.label = value_or<Label>(t, "class", tree.label);
            s.trees.push_back(tree);
        }
        for (const auto& r : j.value("roads", json::array())) {
            RoadSpec road;
            road.x0 = r.at("from").at(0);
            road.y0 = r.at("from").at(1);
            road.x1 = r.at("to").at(0);
            road.y1 = r.at("to").at(1);
            road.width = r.at("width");
            road.color = rgb_from(r.value("color", json()), road.color);
            road.label = value_or<Label>(r, "class", road.label);
            s.roads.push_back(road);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scene JSON: ") + e.what());
    }
    s.validate();
    return s;
}

std::string scene_to_json(const SceneSpec& s)
{
    json j;
    j["extent"] = {s.xmin, s.ymin, s.xmax, s.ymax};
    j["density"] = s.density;
    j["noise"] = s.noise;
    j["color_noise"] = s.color_noise;
    j["seed"] = s.seed;
    j["terrain_color"] = rgb_to(s.terrain_color);
    j["terrain_class"] = s.terrain_label;
    j["terrain"] = {{"kind", s.terrain.kind == TerrainSpec::Kind::plane ? "plane" : "sinusoid"},
                    {"base", s.terrain.base},
                    {"slope_x", s.terrain.slope_x},
                    {"slope_y", s.terrain.slope_y},
                    {"amplitude", s.terrain.amplitude},
                    {"period", s.terrain.period}};
    j["boxes"] = json::array();
    for (const auto& b : s.boxes)
        j["boxes"].push_back({{"min", {b.x0, b.y0}},
                              {"max", {b.x1, b.y1}},
                              {"height", b.height},
                              {"roof_color", rgb_to(b.roof_color)},
                              {"wall_color", rgb_to(b.wall_color)},
                              {"class", b.label}});
    j["trees"] = json::array();
    for (const auto& t : s.trees)
        j["trees"].push_back({{"center", {t.cx, t.cy}},
                              {"radius", t.radius},
                              {"center_height", t.center_height},
                              {"density", t.density},
                              {"color", rgb_to(t.color)},
                              {"class", t.label}});
    j["roads"] = json::array();
    for (const auto& r : s.roads)
        j["roads"].push_back({{"from", {r.x0, r.y0}},
                              {"to", {r.x1, r.y1}},
                              {"width", r.width},
                              {"color", rgb_to(r.color)},
                              {"class", r.label}});
    return j.dump(2);
}

SceneSpec town_scene(std::uint64_t seed, double size, double density)
{
    SceneSpec s;
    s.xmin = 0;
    s.ymin = 0;
    s.xmax = size;
    s.ymax = size;
    s.density = density;
    s.noise = 0.03;
    s.seed = seed;
    s.terrain.kind = TerrainSpec::Kind::sinusoid;
    s.terrain.base = 400.0;
    s.terrain.amplitude = 1.0;
    s.terrain.period = 2.0 * size;

    const Rgb asphalt{128, 128, 128};
    // Two crossing streets.
    s.roads.push_back({0.0, 0.5 * size, size, 0.5 * size, 8.0, asphalt, kRoadClass});
    s.roads.push_back({0.5 * size, 0.0, 0.5 * size, size, 8.0, asphalt, kRoadClass});

    // One block per quadrant, in a 2x2 arrangement, heights varying per seed.
    std::mt19937_64 rng(derive_seed(seed, SeedStream::synth, 1));
    std::uniform_real_distribution<double> height(4.0, 15.0);
    std::uniform_real_distribution<double> extent(0.12 * size, 0.22 * size);
    const double q = 0.25 * size;
    for (double cx : {q, 3 * q})
        for (double cy : {q, 3 * q}) {
            const double hx = 0.5 * extent(rng), hy = 0.5 * extent(rng);
            BoxSpec b;
            b.x0 = cx - hx;
            b.x1 = cx + hx;
            b.y0 = cy - hy;
            b.y1 = cy + hy;
            b.height = height(rng);
            b.roof_color = asphalt;
            s.boxes.push_back(b);
        }
    // Trees along the streets.
    for (int k = 1; k <= 4; ++k) {
        const double t = static_cast<double>(k) / 5.0 * size;
        s.trees.push_back({t, 0.5 * size + 8.0, 2.5, 5.0, 6.0, {60, 140, 50}, kVegetationClass});
        s.trees.push_back({0.5 * size - 8.0, t, 2.5, 5.0, 6.0, {60, 140, 50}, kVegetationClass});
    }
    return s;
}

SceneSpec terrain_benchmark_scene(std::uint64_t seed, double density)
{
    SceneSpec s;
    s.xmin = 0;
    s.ymin = 0;
    s.xmax = 200;
    s.ymax = 200;
    s.density = density;
    s.noise = 0.03;
    s.seed = seed;
    s.terrain.kind = TerrainSpec::Kind::sinusoid;
    s.terrain.base = 100.0;
    s.terrain.amplitude = 2.0;
    s.terrain.period = 200.0;
    const double heights[6] = {4.0, 6.0, 8.0, 9.0, 10.0, 12.0};
    const double xs[3] = {25.0, 90.0, 150.0};
    const double ys[2] = {40.0, 130.0};
    int k = 0;
    for (double y : ys)
        for (double x : xs) {
            BoxSpec b;
            b.x0 = x;
            b.y0 = y;
            b.x1 = x + 20.0 + 2.0 * k;
            b.y1 = y + 15.0 + k;
            b.height = heights[k++];
            s.boxes.push_back(b);
        }
    return s;
}

} // namespace terrafeat
