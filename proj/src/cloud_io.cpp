#include "terrafeat/cloud_io.hpp"

#include "terrafeat/error.hpp"
#include "terrafeat/log.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace terrafeat {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// shared helpers

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_double(std::string_view tok, double& out)
{
    if (!tok.empty() && tok.front() == '+')
        tok.remove_prefix(1);
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::vector<std::string_view> split_whitespace(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> split_comma(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t end = line.find(',', start);
        std::string_view tok = line.substr(start, end == std::string_view::npos ? end : end - start);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front())))
            tok.remove_prefix(1);
        while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
            tok.remove_suffix(1);
        out.push_back(tok);
        if (end == std::string_view::npos)
            break;
        start = end + 1;
    }
    return out;
}

void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

template <typename T>
void append_shortest(std::string& out, T value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out.append(buf, ptr);
}

Rgb to_rgb(double r, double g, double b)
{
    auto c = [](double v) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    };
    return {c(r), c(g), c(b)};
}

// Columns decoded from any format before the non-finite filter runs.
struct RawColumns {
    std::vector<Point3> positions;
    std::vector<Rgb> colors;
    std::vector<Label> labels;
    std::vector<std::string> feature_names;
    std::vector<std::vector<float>> features;
    bool has_colors = false;
    bool has_labels = false;
};

Label to_label(double v, const fs::path& path)
{
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
        throw IoError(path.string() + ": class value " + std::to_string(v) +
                      " is not an integer in 0..255");
    return static_cast<Label>(v);
}

LoadResult finish(RawColumns raw, const fs::path& path, NonFinitePolicy policy)
{
    const std::size_t n = raw.positions.size();
    std::vector<std::size_t> keep;
    keep.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point3& p = raw.positions[i];
        if (std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z)) {
            keep.push_back(i);
        } else if (policy == NonFinitePolicy::reject) {
            throw IoError(path.string() + ": non-finite coordinate at record " + std::to_string(i));
        }
    }
    LoadResult result;
    result.dropped_non_finite = n - keep.size();

    PointCloud cloud(std::move(raw.positions));
    if (raw.has_colors)
        cloud.set_colors(std::move(raw.colors));
    if (raw.has_labels)
        cloud.set_labels(std::move(raw.labels));
    for (std::size_t f = 0; f < raw.features.size(); ++f) {
        if (cloud.has_feature(raw.feature_names[f]))
            throw IoError(path.string() + ": duplicate column '" + raw.feature_names[f] + "'");
        cloud.set_feature(raw.feature_names[f], std::move(raw.features[f]));
    }
    if (result.dropped_non_finite > 0)
        cloud = cloud.select(keep);
    result.cloud = std::move(cloud);
    return result;
}

// Column role assignment shared by PLY and text readers.
enum class Role { x, y, z, red, green, blue, label, feature, skip };

std::vector<Role> assign_roles(const std::vector<std::string>& names, const fs::path& path)
{
    std::vector<Role> roles(names.size(), Role::feature);
    int found_xyz = 0;
    bool r = false, g = false, b = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string n = lower(names[i]);
        if (n == "x") { roles[i] = Role::x; ++found_xyz; }
        else if (n == "y") { roles[i] = Role::y; ++found_xyz; }
        else if (n == "z") { roles[i] = Role::z; ++found_xyz; }
        else if (n == "red" || n == "r") { roles[i] = Role::red; r = true; }
        else if (n == "green" || n == "g") { roles[i] = Role::green; g = true; }
        else if (n == "blue" || n == "b") { roles[i] = Role::blue; b = true; }
        else if (n == kLabelColumn) roles[i] = Role::label;
    }
    if (found_xyz != 3)
        throw IoError(path.string() + ": missing or duplicated x/y/z columns");
    if (!(r && g && b)) {
        // Partial color channels are kept verbatim as features.
        for (auto& role : roles)
            if (role == Role::red || role == Role::green || role == Role::blue)
                role = Role::feature;
    }
    return roles;
}

// Streams decoded rows into RawColumns according to the roles.
class RowSink {
public:
    RowSink(const std::vector<std::string>& names, std::vector<Role> roles, std::size_t reserve,
            fs::path path)
        : roles_(std::move(roles)), path_(std::move(path))
    {
        raw_.positions.reserve(reserve);
        for (std::size_t i = 0; i < roles_.size(); ++i) {
            if (roles_[i] == Role::red)
                raw_.has_colors = true;
            if (roles_[i] == Role::label)
                raw_.has_labels = true;
            if (roles_[i] == Role::feature) {
                feature_slot_.push_back(raw_.features.size());
                raw_.feature_names.push_back(names[i]);
                raw_.features.emplace_back().reserve(reserve);
            } else {
                feature_slot_.push_back(0);
            }
        }
        if (raw_.has_colors)
            raw_.colors.reserve(reserve);
        if (raw_.has_labels)
            raw_.labels.reserve(reserve);
    }

    void push(const double* values)
    {
        Point3 p;
        double rgb[3] = {0, 0, 0};
        for (std::size_t i = 0; i < roles_.size(); ++i) {
            const double v = values[i];
            switch (roles_[i]) {
            case Role::x: p.x = v; break;
            case Role::y: p.y = v; break;
            case Role::z: p.z = v; break;
            case Role::red: rgb[0] = v; break;
            case Role::green: rgb[1] = v; break;
            case Role::blue: rgb[2] = v; break;
            case Role::label: raw_.labels.push_back(to_label(v, path_)); break;
            case Role::feature: raw_.features[feature_slot_[i]].push_back(static_cast<float>(v)); break;
            case Role::skip: break;
            }
        }
        raw_.positions.push_back(p);
        if (raw_.has_colors)
            raw_.colors.push_back(to_rgb(rgb[0], rgb[1], rgb[2]));
    }

    RawColumns take() { return std::move(raw_); }

private:
    std::vector<Role> roles_;
    std::vector<std::size_t> feature_slot_;
    fs::path path_;
    RawColumns raw_;
};

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };
enum class PlyEncoding { ascii, binary_le, binary_be };

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::float32;
    bool is_list = false;
    PlyType count_type = PlyType::uint8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

std::size_t type_size(PlyType t)
{
    switch (t) {
    case PlyType::int8:
    case PlyType::uint8: return 1;
    case PlyType::int16:
    case PlyType::uint16: return 2;
    case PlyType::int32:
    case PlyType::uint32:
    case PlyType::float32: return 4;
    case PlyType::float64: return 8;
    }
    return 0;
}

PlyType parse_type(const std::string& s, const fs::path& path)
{
    if (s == "char" || s == "int8") return PlyType::int8;
    if (s == "uchar" || s == "uint8") return PlyType::uint8;
    if (s == "short" || s == "int16") return PlyType::int16;
    if (s == "ushort" || s == "uint16") return PlyType::uint16;
    if (s == "int" || s == "int32") return PlyType::int32;
    if (s == "uint" || s == "uint32") return PlyType::uint32;
    if (s == "float" || s == "float32") return PlyType::float32;
    if (s == "double" || s == "float64") return PlyType::float64;
    throw IoError(path.string() + ": unknown PLY property type '" + s + "'");
}

template <typename T>
T load_raw(const char* p, bool swap)
{
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), p, sizeof(T));
    if (swap)
        std::reverse(bytes.begin(), bytes.end());
    T v;
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
}

double decode(const char* p, PlyType t, bool swap)
{
    switch (t) {
    case PlyType::int8: return load_raw<std::int8_t>(p, swap);
    case PlyType::uint8: return load_raw<std::uint8_t>(p, swap);
    case PlyType::int16: return load_raw<std::int16_t>(p, swap);
    case PlyType::uint16: return load_raw<std::uint16_t>(p, swap);
    case PlyType::int32: return load_raw<std::int32_t>(p, swap);
    case PlyType::uint32: return load_raw<std::uint32_t>(p, swap);
    case PlyType::float32: return load_raw<float>(p, swap);
    case PlyType::float64: return load_raw<double>(p, swap);
    }
    return 0.0;
}

struct PlyHeader {
    PlyEncoding encoding = PlyEncoding::ascii;
    std::vector<PlyElement> elements;
};

PlyHeader read_ply_header(std::istream& in, const fs::path& path)
{
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path.string() + ": empty file");
    strip_cr(line);
    if (line != "ply")
        throw IoError(path.string() + ": missing 'ply' magic");
    PlyHeader header;
    bool have_format = false;
    while (true) {
        if (!std::getline(in, line))
            throw IoError(path.string() + ": unterminated PLY header");
        strip_cr(line);
        const auto toks = split_whitespace(line);
        if (toks.empty())
            continue;
        const std::string key(toks[0]);
        if (key == "end_header")
            break;
        if (key == "comment" || key == "obj_info")
            continue;
        if (key == "format") {
            if (toks.size() != 3)
                throw IoError(path.string() + ": malformed format line");
            if (toks[1] == "ascii") header.encoding = PlyEncoding::ascii;
            else if (toks[1] == "binary_little_endian") header.encoding = PlyEncoding::binary_le;
            else if (toks[1] == "binary_big_endian") header.encoding = PlyEncoding::binary_be;
            else throw IoError(path.string() + ": unknown PLY format '" + std::string(toks[1]) + "'");
            have_format = true;
        } else if (key == "element") {
            if (toks.size() != 3)
                throw IoError(path.string() + ": malformed element line");
            double count = 0;
            if (!parse_double(toks[2], count) || count < 0 || count != std::floor(count))
                throw IoError(path.string() + ": bad element count");
            header.elements.push_back({std::string(toks[1]), static_cast<std::size_t>(count), {}});
        } else if (key == "property") {
            if (header.elements.empty())
                throw IoError(path.string() + ": property before any element");
            PlyProperty prop;
            if (toks.size() == 5 && toks[1] == "list") {
                prop.is_list = true;
                prop.count_type = parse_type(std::string(toks[2]), path);
                prop.type = parse_type(std::string(toks[3]), path);
                prop.name = std::string(toks[4]);
            } else if (toks.size() == 3) {
                prop.type = parse_type(std::string(toks[1]), path);
                prop.name = std::string(toks[2]);
            } else {
                throw IoError(path.string() + ": malformed property line");
            }
            header.elements.back().properties.push_back(std::move(prop));
        } else {
            throw IoError(path.string() + ": unexpected header line '" + line + "'");
        }
    }
    if (!have_format)
        throw IoError(path.string() + ": missing format line");
    return header;
}

RawColumns read_ply(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    const PlyHeader header = read_ply_header(in, path);

    const auto vertex_it = std::find_if(header.elements.begin(), header.elements.end(),
                                        [](const PlyElement& e) { return e.name == "vertex"; });
    if (vertex_it == header.elements.end())
        throw IoError(path.string() + ": no vertex element");
    const PlyElement& vertex = *vertex_it;

    std::vector<std::string> names;
    for (const auto& p : vertex.properties) {
        if (p.is_list)
            throw IoError(path.string() + ": list property '" + p.name + "' in vertex element is not supported");
        names.push_back(p.name);
    }
    RowSink sink(names, assign_roles(names, path), vertex.count, path);
    const std::size_t nprop = names.size();
    std::vector<double> row(nprop);

    if (header.encoding == PlyEncoding::ascii) {
        std::string line;
        for (auto it = header.elements.begin(); it != vertex_it; ++it)
            for (std::size_t i = 0; i < it->count; ++i)
                if (!std::getline(in, line))
                    throw IoError(path.string() + ": truncated element '" + it->name + "'");
        for (std::size_t i = 0; i < vertex.count; ++i) {
            if (!std::getline(in, line))
                throw IoError(path.string() + ": expected " + std::to_string(vertex.count) +
                              " vertices, found " + std::to_string(i));
            const auto toks = split_whitespace(line);
            if (toks.size() != nprop)
                throw IoError(path.string() + ": vertex " + std::to_string(i) + " has " +
                              std::to_string(toks.size()) + " values, expected " + std::to_string(nprop));
            for (std::size_t k = 0; k < nprop; ++k)
                if (!parse_double(toks[k], row[k]))
                    throw IoError(path.string() + ": bad number '" + std::string(toks[k]) + "'");
            sink.push(row.data());
        }
        return sink.take();
    }

    const bool swap = (header.encoding == PlyEncoding::binary_le) != (std::endian::native == std::endian::little);
    for (auto it = header.elements.begin(); it != vertex_it; ++it) {
        const bool has_list = std::any_of(it->properties.begin(), it->properties.end(),
                                          [](const PlyProperty& p) { return p.is_list; });
        if (!has_list) {
            std::size_t stride = 0;
            for (const auto& p : it->properties)
                stride += type_size(p.type);
            in.seekg(static_cast<std::streamoff>(stride * it->count), std::ios::cur);
            continue;
        }
        char buf[8];
        for (std::size_t i = 0; i < it->count && in; ++i)
            for (const auto& p : it->properties) {
                if (!p.is_list) {
                    in.seekg(static_cast<std::streamoff>(type_size(p.type)), std::ios::cur);
                    continue;
                }
                in.read(buf, static_cast<std::streamsize>(type_size(p.count_type)));
                const double n = decode(buf, p.count_type, swap);
                if (!(n >= 0.0))
                    throw IoError(path.string() + ": negative list length in element '" + it->name + "'");
                in.seekg(static_cast<std::streamoff>(static_cast<std::size_t>(n) * type_size(p.type)), std::ios::cur);
            }
        if (!in)
            throw IoError(path.string() + ": truncated element '" + it->name + "'");
    }
    std::vector<std::size_t> offsets;
    std::size_t stride = 0;
    for (const auto& p : vertex.properties) {
        offsets.push_back(stride);
        stride += type_size(p.type);
    }
    constexpr std::size_t kChunk = 1 << 16;
    std::vector<char> buffer(kChunk * stride);
    for (std::size_t done = 0; done < vertex.count;) {
        const std::size_t n = std::min(kChunk, vertex.count - done);
        in.read(buffer.data(), static_cast<std::streamsize>(n * stride));
        if (static_cast<std::size_t>(in.gcount()) != n * stride)
            throw IoError(path.string() + ": truncated binary vertex data");
        for (std::size_t i = 0; i < n; ++i) {
            const char* rec = buffer.data() + i * stride;
            for (std::size_t k = 0; k < nprop; ++k)
                row[k] = decode(rec + offsets[k], vertex.properties[k].type, swap);
            sink.push(row.data());
        }
        done += n;
    }
    return sink.take();
}

std::vector<std::string> output_names(const PointCloud& cloud)
{
    std::vector<std::string> names{"x", "y", "z"};
    if (cloud.has_colors())
        names.insert(names.end(), {"red", "green", "blue"});
    if (cloud.has_labels())
        names.emplace_back(kLabelColumn);
    for (const auto& name : cloud.feature_names())
        names.push_back(name);
    return names;
}

void write_ply(const PointCloud& cloud, const fs::path& path, bool binary)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    std::ostringstream header;
    header << "ply\n"
           << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
           << "comment terrafeat\n"
           << "element vertex " << cloud.size() << '\n'
           << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.has_colors())
        header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (cloud.has_labels())
        header << "property uchar " << kLabelColumn << '\n';
    for (const auto& name : cloud.feature_names())
        header << "property float " << name << '\n';
    header << "end_header\n";
    out << header.str();

    const auto& pts = cloud.positions();
    const auto& feats = cloud.features();
    std::string buf;
    constexpr std::size_t kFlush = 1 << 20;

    if (binary) {
        auto put = [&](auto v) {
            char bytes[sizeof(v)];
            std::memcpy(bytes, &v, sizeof(v));
            if constexpr (std::endian::native != std::endian::little)
                std::reverse(bytes, bytes + sizeof(v));
            buf.append(bytes, sizeof(v));
        };
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            put(pts[i].x);
            put(pts[i].y);
            put(pts[i].z);
            if (cloud.has_colors()) {
                const Rgb c = cloud.colors()[i];
                put(c.r);
                put(c.g);
                put(c.b);
            }
            if (cloud.has_labels())
                put(cloud.labels()[i]);
            for (const auto& f : feats)
                put(f.second[i]);
            if (buf.size() > kFlush) {
                out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
    } else {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            append_shortest(buf, pts[i].x);
            buf += ' ';
            append_shortest(buf, pts[i].y);
            buf += ' ';
            append_shortest(buf, pts[i].z);
            if (cloud.has_colors()) {
                const Rgb c = cloud.colors()[i];
                buf += ' ' + std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' + std::to_string(c.b);
            }
            if (cloud.has_labels())
                buf += ' ' + std::to_string(cloud.labels()[i]);
            for (const auto& f : feats) {
                buf += ' ';
                append_shortest(buf, f.second[i]);
            }
            buf += '\n';
            if (buf.size() > kFlush) {
                out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// XYZ / CSV

RawColumns read_text(const fs::path& path, bool comma_hint)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    std::vector<std::string> names;
    std::optional<RowSink> sink;
    std::optional<bool> comma;
    std::vector<double> row;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#')
            continue;
        if (!comma)
            comma = comma_hint || line.find(',') != std::string::npos;
        const auto toks = *comma ? split_comma(line) : split_whitespace(line);

        if (!sink) {
            bool numeric = true;
            double tmp;
            for (auto t : toks)
                numeric = numeric && parse_double(t, tmp);
            if (!numeric) {
                for (auto t : toks)
                    names.emplace_back(t);
                sink.emplace(names, assign_roles(names, path), 0, path);
                row.resize(names.size());
                continue;
            }
            const std::size_t n = toks.size();
            if (n < 3)
                throw IoError(path.string() + ": need at least 3 columns, found " + std::to_string(n));
            names = {"x", "y", "z"};
            std::size_t next = 3;
            if (n >= 6) {
                names.insert(names.end(), {"red", "green", "blue"});
                next = 6;
            }
            if (n >= 7) {
                names.emplace_back(kLabelColumn);
                next = 7;
            }
            for (std::size_t k = next; k < n; ++k)
                names.push_back("scalar_" + std::to_string(k - next));
            sink.emplace(names, assign_roles(names, path), 0, path);
            row.resize(names.size());
        }
        if (toks.size() != names.size())
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(names.size()) + " columns, found " + std::to_string(toks.size()));
        for (std::size_t k = 0; k < toks.size(); ++k)
            if (!parse_double(toks[k], row[k]))
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad number '" +
                              std::string(toks[k]) + "'");
        sink->push(row.data());
    }
    if (in.bad())
        throw IoError("read failed for " + path.string());
    if (!sink)
        return RawColumns{};
    return sink->take();
}

void write_csv(const PointCloud& cloud, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    std::string buf;
    const auto names = output_names(cloud);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i)
            buf += ',';
        buf += names[i];
    }
    buf += '\n';
    const auto& pts = cloud.positions();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        append_shortest(buf, pts[i].x);
        buf += ',';
        append_shortest(buf, pts[i].y);
        buf += ',';
        append_shortest(buf, pts[i].z);
        if (cloud.has_colors()) {
            const Rgb c = cloud.colors()[i];
            buf += ',' + std::to_string(c.r) + ',' + std::to_string(c.g) + ',' + std::to_string(c.b);
        }
        if (cloud.has_labels())
            buf += ',' + std::to_string(cloud.labels()[i]);
        for (const auto& f : cloud.features()) {
            buf += ',';
            append_shortest(buf, f.second[i]);
        }
        buf += '\n';
        if (buf.size() > (1 << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

CloudFormat detect_format(const fs::path& path)
{
    const std::string ext = lower(path.extension().string());
    if (ext == ".ply")
        return CloudFormat::ply;
    if (ext == ".xyz" || ext == ".txt" || ext == ".pts")
        return CloudFormat::xyz;
    if (ext == ".csv")
        return CloudFormat::csv;
    throw IoError(path.string() + ": cannot detect point cloud format from extension");
}

} // namespace

LoadResult load_cloud_with_report(const fs::path& path, const LoadOptions& options)
{
    if (!fs::exists(path))
        throw IoError("no such file: " + path.string());
    const CloudFormat format = options.format ? *options.format : detect_format(path);
    RawColumns raw;
    switch (format) {
    case CloudFormat::ply: raw = read_ply(path); break;
    case CloudFormat::xyz: raw = read_text(path, false); break;
    case CloudFormat::csv: raw = read_text(path, true); break;
    }
    return finish(std::move(raw), path, options.non_finite);
}

PointCloud load_cloud(const fs::path& path, const LoadOptions& options)
{
    LoadResult result = load_cloud_with_report(path, options);
    if (result.dropped_non_finite > 0)
        log::warn(path.string() + ": dropped " + std::to_string(result.dropped_non_finite) +
                  " points with non-finite coordinates");
    return std::move(result.cloud);
}

void save_cloud(const PointCloud& cloud, const fs::path& path, SaveFormat format)
{
    switch (format) {
    case SaveFormat::ply_ascii: write_ply(cloud, path, false); break;
    case SaveFormat::ply_binary: write_ply(cloud, path, true); break;
    case SaveFormat::csv: write_csv(cloud, path); break;
    }
}

} // namespace terrafeat
