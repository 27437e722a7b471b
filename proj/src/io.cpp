#include "bbalign/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "bbalign/errors.hpp"

namespace bbalign {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("cannot write " + path);
}

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

ScalarType scalar_type(const std::string& name, std::size_t line) {
    if (name == "char" || name == "int8") return ScalarType::Int8;
    if (name == "uchar" || name == "uint8") return ScalarType::UInt8;
    if (name == "short" || name == "int16") return ScalarType::Int16;
    if (name == "ushort" || name == "uint16") return ScalarType::UInt16;
    if (name == "int" || name == "int32") return ScalarType::Int32;
    if (name == "uint" || name == "uint32") return ScalarType::UInt32;
    if (name == "float" || name == "float32") return ScalarType::Float32;
    if (name == "double" || name == "float64") return ScalarType::Float64;
    throw ParseError("unknown PLY property type '" + name + "'", line);
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::Float64;
    bool is_list = false;
    ScalarType count_type = ScalarType::UInt8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> props;
};

template <class T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        v = std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void store_le(std::string& out, T v) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.append(bytes.data(), bytes.size());
}

double load_scalar(const char* p, ScalarType t) {
    switch (t) {
        case ScalarType::Int8: return load_le<std::int8_t>(p);
        case ScalarType::UInt8: return load_le<std::uint8_t>(p);
        case ScalarType::Int16: return load_le<std::int16_t>(p);
        case ScalarType::UInt16: return load_le<std::uint16_t>(p);
        case ScalarType::Int32: return load_le<std::int32_t>(p);
        case ScalarType::UInt32: return load_le<std::uint32_t>(p);
        case ScalarType::Float32: return load_le<float>(p);
        case ScalarType::Float64: return load_le<double>(p);
    }
    return 0.0;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

bool parse_double(std::string_view tok, double& v) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

// Splits text into lines, dropping a trailing '\r'.
class LineReader {
public:
    LineReader(const std::string& text, std::size_t pos, std::size_t line) : text_(text), pos_(pos), line_(line) {}

    bool next(std::string& out) {
        if (pos_ >= text_.size()) return false;
        const std::size_t end = text_.find('\n', pos_);
        const std::size_t stop = end == std::string::npos ? text_.size() : end;
        out.assign(text_, pos_, stop - pos_);
        if (!out.empty() && out.back() == '\r') out.pop_back();
        pos_ = end == std::string::npos ? text_.size() : end + 1;
        ++line_;
        return true;
    }
    std::size_t line() const { return line_; }
    std::size_t pos() const { return pos_; }

private:
    const std::string& text_;
    std::size_t pos_;
    std::size_t line_;
};

struct VertexLayout {
    int x = -1, y = -1, z = -1, nx = -1, ny = -1, nz = -1;
};

VertexLayout layout_of(const Element& e) {
    VertexLayout l;
    for (std::size_t n = 0; n < e.props.size(); ++n) {
        const auto& name = e.props[n].name;
        const int idx = e.props[n].is_list ? -1 : static_cast<int>(n);
        if (name == "x") l.x = idx;
        if (name == "y") l.y = idx;
        if (name == "z") l.z = idx;
        if (name == "nx") l.nx = idx;
        if (name == "ny") l.ny = idx;
        if (name == "nz") l.nz = idx;
    }
    return l;
}

void finish_vertex(WeightedCloud& cloud, const VertexLayout& l, const std::vector<double>& vals, bool with_normals,
                   std::size_t where) {
    const Vec3 p(vals[l.x], vals[l.y], vals[l.z]);
    if (!p.allFinite()) throw ParseError("non-finite vertex coordinate", where);
    cloud.points.push_back(p);
    if (with_normals) {
        Vec3 n(vals[l.nx], vals[l.ny], vals[l.nz]);
        const double len = n.norm();
        if (!std::isfinite(len) || len == 0.0) throw ParseError("zero or non-finite normal", where);
        cloud.normals.push_back(n / len);
    }
}

}  // namespace

WeightedCloud parse_ply(const std::string& bytes) {
    LineReader reader(bytes, 0, 0);
    std::string line;
    if (!reader.next(line) || line != "ply") throw ParseError("missing 'ply' magic", 1);

    std::vector<Element> elements;
    bool ascii = false;
    bool have_format = false;
    bool ended = false;
    while (reader.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") {
            ended = true;
            break;
        }
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError("malformed format line", reader.line());
            if (tok[1] == "ascii") {
                ascii = true;
            } else if (tok[1] == "binary_little_endian") {
                ascii = false;
            } else {
                throw UnsupportedFormat("PLY encoding '" + tok[1] + "' is not supported");
            }
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line", reader.line());
            Element e;
            e.name = tok[1];
            std::size_t count = 0;
            const auto res = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
            if (res.ec != std::errc() || res.ptr != tok[2].data() + tok[2].size())
                throw ParseError("bad element count '" + tok[2] + "'", reader.line());
            e.count = count;
            elements.push_back(e);
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("property before element", reader.line());
            Property p;
            if (tok.size() == 5 && tok[1] == "list") {
                p.is_list = true;
                p.count_type = scalar_type(tok[2], reader.line());
                p.type = scalar_type(tok[3], reader.line());
                p.name = tok[4];
            } else if (tok.size() == 3) {
                p.type = scalar_type(tok[1], reader.line());
                p.name = tok[2];
            } else {
                throw ParseError("malformed property line", reader.line());
            }
            elements.back().props.push_back(p);
        } else {
            throw ParseError("unexpected header keyword '" + tok[0] + "'", reader.line());
        }
    }
    if (!ended) throw ParseError("missing end_header", reader.line());
    if (!have_format) throw ParseError("missing format line", reader.line());

    const Element* vertex = nullptr;
    for (const auto& e : elements) {
        if (e.name == "vertex") vertex = &e;
    }
    if (!vertex) throw ParseError("no vertex element", reader.line());
    const VertexLayout layout = layout_of(*vertex);
    if (layout.x < 0 || layout.y < 0 || layout.z < 0) throw ParseError("vertex element lacks x, y, z", reader.line());
    const bool with_normals = layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;

    WeightedCloud cloud;
    cloud.points.reserve(vertex->count);
    if (with_normals) cloud.normals.reserve(vertex->count);

    if (ascii) {
        for (const auto& e : elements) {
            const bool is_vertex = &e == vertex;
            for (std::size_t item = 0; item < e.count; ++item) {
                bool got = false;
                while ((got = reader.next(line))) {
                    if (line.find_first_not_of(" \t") != std::string::npos) break;
                }
                if (!got) {
                    throw ParseError("element '" + e.name + "' declares " + std::to_string(e.count) +
                                         " items, body has " + std::to_string(item),
                                     reader.line());
                }
                const auto tok = split_ws(line);
                std::vector<double> vals(e.props.size(), 0.0);
                std::size_t t = 0;
                for (std::size_t n = 0; n < e.props.size(); ++n) {
                    if (t >= tok.size()) throw ParseError("too few values", reader.line());
                    double v = 0.0;
                    if (!parse_double(tok[t], v)) throw ParseError("bad number '" + tok[t] + "'", reader.line());
                    ++t;
                    if (e.props[n].is_list) {
                        if (v < 0 || v != std::floor(v)) throw ParseError("bad list length", reader.line());
                        t += static_cast<std::size_t>(v);
                        if (t > tok.size()) throw ParseError("list runs past end of line", reader.line());
                    } else {
                        vals[n] = v;
                    }
                }
                if (t != tok.size()) throw ParseError("too many values", reader.line());
                if (is_vertex) finish_vertex(cloud, layout, vals, with_normals, reader.line());
            }
        }
        while (reader.next(line)) {
            if (line.find_first_not_of(" \t") != std::string::npos)
                throw ParseError("data after the last declared element", reader.line());
        }
        return cloud;
    }

    std::size_t pos = reader.pos();
    auto need = [&](std::size_t n) {
        if (bytes.size() - pos < n) throw ParseError("unexpected end of binary data", pos);
    };
    for (const auto& e : elements) {
        const bool is_vertex = &e == vertex;
        std::vector<double> vals(e.props.size(), 0.0);
        for (std::size_t item = 0; item < e.count; ++item) {
            const std::size_t item_start = pos;
            for (std::size_t n = 0; n < e.props.size(); ++n) {
                const Property& p = e.props[n];
                if (p.is_list) {
                    need(type_size(p.count_type));
                    const double len = load_scalar(bytes.data() + pos, p.count_type);
                    pos += type_size(p.count_type);
                    if (len < 0) throw ParseError("negative list length", pos);
                    const std::size_t skip = static_cast<std::size_t>(len) * type_size(p.type);
                    need(skip);
                    pos += skip;
                } else {
                    need(type_size(p.type));
                    vals[n] = load_scalar(bytes.data() + pos, p.type);
                    pos += type_size(p.type);
                }
            }
            if (is_vertex) finish_vertex(cloud, layout, vals, with_normals, item_start);
        }
    }
    if (pos != bytes.size()) throw ParseError("trailing bytes after the last declared element", pos);
    return cloud;
}

WeightedCloud parse_xyz(const std::string& text) {
    LineReader reader(text, 0, 0);
    std::string line;
    WeightedCloud cloud;
    int columns = -1;
    while (reader.next(line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok.size() != 3 && tok.size() != 6) throw ParseError("expected 3 or 6 values", reader.line());
        if (columns < 0) columns = static_cast<int>(tok.size());
        if (static_cast<int>(tok.size()) != columns) throw ParseError("inconsistent column count", reader.line());
        std::vector<double> vals(tok.size());
        for (std::size_t n = 0; n < tok.size(); ++n) {
            if (!parse_double(tok[n], vals[n])) throw ParseError("bad number '" + tok[n] + "'", reader.line());
        }
        const VertexLayout l{0, 1, 2, 3, 4, 5};
        finish_vertex(cloud, l, vals, columns == 6, reader.line());
    }
    return cloud;
}

WeightedCloud read_cloud(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.rfind("ply", 0) == 0 && bytes.size() > 3 && (bytes[3] == '\n' || bytes[3] == '\r'))
        return parse_ply(bytes);
    auto ends_with = [&](const std::string& suffix) {
        return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".xyz") || ends_with(".txt") || ends_with(".XYZ")) return parse_xyz(bytes);
    if (ends_with(".ply") || ends_with(".PLY")) throw ParseError("missing 'ply' magic", 1);
    throw UnsupportedFormat("unsupported point cloud format: " + path);
}

std::string format_ply(const WeightedCloud& cloud, PlyEncoding encoding) {
    const bool normals = cloud.has_normals();
    std::string out = "ply\nformat ";
    out += encoding == PlyEncoding::Ascii ? "ascii 1.0\n" : "binary_little_endian 1.0\n";
    out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
    out += "end_header\n";
    char buf[40];
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        std::array<double, 6> v{cloud.points[i].x(), cloud.points[i].y(), cloud.points[i].z(), 0, 0, 0};
        if (normals) {
            v[3] = cloud.normals[i].x();
            v[4] = cloud.normals[i].y();
            v[5] = cloud.normals[i].z();
        }
        const int n = normals ? 6 : 3;
        for (int c = 0; c < n; ++c) {
            if (encoding == PlyEncoding::Ascii) {
                std::snprintf(buf, sizeof buf, "%.17g", v[c]);
                out += buf;
                out += c + 1 == n ? '\n' : ' ';
            } else {
                store_le(out, v[c]);
            }
        }
    }
    return out;
}

void write_ply(const WeightedCloud& cloud, const std::string& path, PlyEncoding encoding) {
    write_file(path, format_ply(cloud, encoding));
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json quat_json(const UnitQuaternion& q) { return json::array({q.i, q.j, q.k, q.r}); }

// Bounds can be -inf when an objective underflows; JSON has no infinities.
json bound_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double bound_of(const json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

Vec3 vec_of(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector", 0);
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

UnitQuaternion quat_of(const json& j) {
    if (!j.is_array() || j.size() != 4) throw ParseError("expected a quaternion [i, j, k, r]", 0);
    // Stored values are already unit; keep them bit-exact.
    UnitQuaternion q;
    q.i = j[0].get<double>();
    q.j = j[1].get<double>();
    q.k = j[2].get<double>();
    q.r = j[3].get<double>();
    const double n = std::sqrt(q.dot(q));
    if (std::abs(n - 1.0) > 1e-9) throw InvariantViolation("stored quaternion is not unit-norm");
    return q;
}

}  // namespace

json result_to_json(const AlignmentResult& r) {
    json doc;
    doc["q_ijkr"] = quat_json(r.q);
    doc["t"] = vec_json(r.t);
    doc["bounds_scale"] = "log";
    doc["rot_lower"] = bound_json(r.rot_lower);
    doc["rot_upper"] = bound_json(r.rot_upper);
    doc["trans_lower"] = bound_json(r.trans_lower);
    doc["trans_upper"] = bound_json(r.trans_upper);
    doc["depths"] = {{"rot", r.rot_depth}, {"trans", r.trans_depth}};
    doc["selected"] = r.selected;
    json cands = json::array();
    for (const auto& c : r.candidates) {
        cands.push_back({{"q_ijkr", quat_json(c.q)},
                         {"t", vec_json(c.t)},
                         {"lambda_deg", c.lambda_deg},
                         {"mw_index", c.mw_index},
                         {"rot_lower", bound_json(c.rot_lower)},
                         {"rot_upper", bound_json(c.rot_upper)},
                         {"trans_lower", bound_json(c.trans_lower)},
                         {"trans_upper", bound_json(c.trans_upper)},
                         {"rot_nodes", c.rot_nodes},
                         {"trans_nodes", c.trans_nodes},
                         {"trans_pruned", c.trans_pruned}});
    }
    doc["candidates"] = cands;
    doc["root_box"] = {{"lo", vec_json(r.root_box.lo)}, {"hi", vec_json(r.root_box.hi)}};
    doc["components"] = {{"source", r.source_components}, {"target", r.target_components}};
    doc["rmse"] = r.rmse;
    doc["timings_ms"] = r.timings_ms;
    return doc;
}

AlignmentResult result_from_json(const json& doc) {
    try {
        AlignmentResult r;
        r.q = quat_of(doc.at("q_ijkr"));
        r.t = vec_of(doc.at("t"));
        r.rot_lower = bound_of(doc.at("rot_lower"));
        r.rot_upper = bound_of(doc.at("rot_upper"));
        r.trans_lower = bound_of(doc.at("trans_lower"));
        r.trans_upper = bound_of(doc.at("trans_upper"));
        r.rot_depth = doc.at("depths").at("rot").get<int>();
        r.trans_depth = doc.at("depths").at("trans").get<int>();
        r.selected = doc.at("selected").get<std::size_t>();
        for (const auto& c : doc.at("candidates")) {
            CandidateDiagnostics d;
            d.q = quat_of(c.at("q_ijkr"));
            d.t = vec_of(c.at("t"));
            d.lambda_deg = c.at("lambda_deg").get<double>();
            d.mw_index = c.at("mw_index").get<int>();
            d.rot_lower = bound_of(c.at("rot_lower"));
            d.rot_upper = bound_of(c.at("rot_upper"));
            d.trans_lower = bound_of(c.at("trans_lower"));
            d.trans_upper = bound_of(c.at("trans_upper"));
            d.rot_nodes = c.at("rot_nodes").get<std::uint64_t>();
            d.trans_nodes = c.at("trans_nodes").get<std::uint64_t>();
            d.trans_pruned = c.at("trans_pruned").get<bool>();
            r.candidates.push_back(d);
        }
        r.root_box.lo = vec_of(doc.at("root_box").at("lo"));
        r.root_box.hi = vec_of(doc.at("root_box").at("hi"));
        r.source_components = doc.at("components").at("source").get<std::size_t>();
        r.target_components = doc.at("components").at("target").get<std::size_t>();
        r.rmse = doc.at("rmse").get<double>();
        r.timings_ms = doc.at("timings_ms").get<std::map<std::string, double>>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed result document: ") + e.what(), 0);
    }
}

void write_result(const AlignmentResult& result, const std::string& path) {
    write_file(path, result_to_json(result).dump(2) + "\n");
}

AlignmentResult read_result(const std::string& path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    return result_from_json(doc);
}

std::string format_trace(const std::vector<TraceRecord>& trace) {
    std::string out = "iter,stage,depth,nodes_active,best_L,best_U,gap\n";
    char buf[160];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%llu,%s,%d,%llu,%.17g,%.17g,%.17g\n", static_cast<unsigned long long>(r.iter),
                      r.stage.c_str(), r.depth, static_cast<unsigned long long>(r.nodes_active), r.best_lower,
                      r.best_upper, r.gap);
        out += buf;
    }
    return out;
}

void write_trace(const std::vector<TraceRecord>& trace, const std::string& path) {
    write_file(path, format_trace(trace));
}

}  // namespace bbalign
