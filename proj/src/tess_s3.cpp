#include "bbalign/tess_s3.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "bbalign/errors.hpp"

namespace bbalign {

TetraNode::TetraNode(const std::array<UnitQuaternion, 4>& vertices, int depth)
    : vertices_(vertices), depth_(depth), min_dot_(1.0) {
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) min_dot_ = std::min(min_dot_, vertices_[a].dot(vertices_[b]));
    }
}

double TetraNode::max_dot() const {
    double m = -1.0;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) m = std::max(m, vertices_[a].dot(vertices_[b]));
    }
    return m;
}

Mat4 TetraNode::vertex_matrix() const {
    Mat4 q;
    for (int c = 0; c < 4; ++c) q.col(c) = vertices_[c].vec();
    return q;
}

UnitQuaternion TetraNode::center() const {
    Vec4 s = Vec4::Zero();
    for (const auto& v : vertices_) s += v.vec();
    return UnitQuaternion(s);
}

namespace {

bool is_even_permutation(const std::array<int, 4>& p) {
    int inversions = 0;
    for (int a = 0; a < 4; ++a) {
        for (int b = a + 1; b < 4; ++b) inversions += p[a] > p[b] ? 1 : 0;
    }
    return inversions % 2 == 0;
}

std::vector<UnitQuaternion> vertices_600cell() {
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<UnitQuaternion> out;
    out.reserve(120);

    // Even permutations of (+-phi, +-1, +-1/phi, 0).
    std::array<int, 4> perm{0, 1, 2, 3};
    do {
        if (!is_even_permutation(perm)) continue;
        for (int signs = 0; signs < 8; ++signs) {
            const std::array<double, 4> base{(signs & 1) ? -phi : phi, (signs & 2) ? -1.0 : 1.0,
                                             (signs & 4) ? -1.0 / phi : 1.0 / phi, 0.0};
            Vec4 v;
            for (int c = 0; c < 4; ++c) v[c] = base[perm[c]];
            out.emplace_back(v);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    for (int axis = 0; axis < 4; ++axis) {
        for (double s : {2.0, -2.0}) {
            Vec4 v = Vec4::Zero();
            v[axis] = s;
            out.emplace_back(v);
        }
    }
    for (int signs = 0; signs < 16; ++signs) {
        Vec4 v;
        for (int c = 0; c < 4; ++c) v[c] = (signs >> c & 1) ? -1.0 : 1.0;
        out.emplace_back(v);
    }
    return out;
}

std::vector<TetraNode> hemisphere_nodes(const std::vector<UnitQuaternion>& vertices,
                                        const std::vector<std::array<std::uint16_t, 4>>& cells) {
    std::vector<TetraNode> out;
    for (const auto& cell : cells) {
        const bool upper = std::any_of(cell.begin(), cell.end(),
                                       [&](std::uint16_t v) { return vertices[v].r > 0.0; });
        if (!upper) continue;
        out.emplace_back(std::array<UnitQuaternion, 4>{vertices[cell[0]], vertices[cell[1]],
                                                       vertices[cell[2]], vertices[cell[3]]},
                         0);
    }
    return out;
}

void check_counts(const Tessellation& t) {
    if (t.vertices.size() != 120 || t.cells.size() != 600 || t.hemisphere_cells.size() != 330) {
        throw InvariantViolation("600-cell construction produced " + std::to_string(t.vertices.size()) +
                                 " vertices, " + std::to_string(t.cells.size()) + " cells, " +
                                 std::to_string(t.hemisphere_cells.size()) + " hemisphere cells");
    }
}

}  // namespace

Tessellation generate_600cell() {
    Tessellation t;
    t.vertices = vertices_600cell();
    const int n = static_cast<int>(t.vertices.size());

    std::vector<char> adjacent(static_cast<std::size_t>(n) * n, 0);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const bool edge = std::abs(t.vertices[a].dot(t.vertices[b]) - kCos36) < 1e-9;
            adjacent[a * n + b] = adjacent[b * n + a] = edge;
        }
    }
    auto adj = [&](int a, int b) { return adjacent[a * n + b] != 0; };
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (!adj(a, b)) continue;
            for (int c = b + 1; c < n; ++c) {
                if (!adj(a, c) || !adj(b, c)) continue;
                for (int d = c + 1; d < n; ++d) {
                    if (adj(a, d) && adj(b, d) && adj(c, d)) {
                        t.cells.push_back({static_cast<std::uint16_t>(a), static_cast<std::uint16_t>(b),
                                           static_cast<std::uint16_t>(c), static_cast<std::uint16_t>(d)});
                    }
                }
            }
        }
    }
    t.hemisphere_cells = hemisphere_nodes(t.vertices, t.cells);
    check_counts(t);
    return t;
}

const Tessellation& default_tessellation() {
    static const Tessellation tess = generate_600cell();
    return tess;
}

namespace {

UnitQuaternion midpoint(const UnitQuaternion& a, const UnitQuaternion& b) {
    return UnitQuaternion(a.vec() + b.vec());
}

}  // namespace

std::array<TetraNode, 8> subdivide(const TetraNode& node) {
    const auto& q = node.vertices();
    const int d = node.depth() + 1;
    // Edge midpoints indexed by vertex pair.
    const UnitQuaternion m01 = midpoint(q[0], q[1]), m02 = midpoint(q[0], q[2]), m03 = midpoint(q[0], q[3]);
    const UnitQuaternion m12 = midpoint(q[1], q[2]), m13 = midpoint(q[1], q[3]), m23 = midpoint(q[2], q[3]);

    // The three internal edges join opposite midpoints; each comes with the
    // two remaining opposite pairs (c, c') and (d, d') that ring it.
    struct Diagonal {
        const UnitQuaternion* a;
        const UnitQuaternion* b;
        const UnitQuaternion* c;
        const UnitQuaternion* d;
        const UnitQuaternion* c2;
        const UnitQuaternion* d2;
    };
    const std::array<Diagonal, 3> diagonals{{
        {&m01, &m23, &m02, &m03, &m13, &m12},
        {&m02, &m13, &m01, &m03, &m23, &m12},
        {&m03, &m12, &m01, &m02, &m23, &m13},
    }};
    int best = 0;
    double best_dot = diagonals[0].a->dot(*diagonals[0].b);
    for (int k = 1; k < 3; ++k) {
        const double dot = diagonals[k].a->dot(*diagonals[k].b);
        if (dot > best_dot) {
            best = k;
            best_dot = dot;
        }
    }
    const Diagonal& g = diagonals[best];
    return {
        TetraNode({q[0], m01, m02, m03}, d),
        TetraNode({q[1], m01, m12, m13}, d),
        TetraNode({q[2], m02, m12, m23}, d),
        TetraNode({q[3], m03, m13, m23}, d),
        TetraNode({*g.a, *g.b, *g.c, *g.d}, d),
        TetraNode({*g.a, *g.b, *g.d, *g.c2}, d),
        TetraNode({*g.a, *g.b, *g.c2, *g.d2}, d),
        TetraNode({*g.a, *g.b, *g.d2, *g.c}, d),
    };
}

bool contains_ray(const TetraNode& node, const UnitQuaternion& q) {
    const Eigen::PartialPivLU<Mat4> lu(node.vertex_matrix());
    if (!(lu.rcond() > 1e-14)) throw InvariantViolation("degenerate cell: vertex matrix is singular");
    const Vec4 alpha = lu.solve(q.vec());
    return (alpha.array() >= -1e-9).all();
}

bool contains(const TetraNode& node, const UnitQuaternion& q) {
    if (q.r > 0.0) return contains_ray(node, q);
    if (q.r < 0.0) return contains_ray(node, -q);
    return contains_ray(node, q) || contains_ray(node, -q);
}

bool covers_rotation(const TetraNode& node, const UnitQuaternion& q) {
    return contains_ray(node, q) || contains_ray(node, -q);
}

int rot_depth_for_tolerance(double eps_rad) {
    const double ratio = (1.0 / kCos36 - 1.0) / (1.0 / std::cos(0.5 * eps_rad) - 1.0);
    // Guard the exact-boundary case against roundoff (ratio 1 at eps = 72 deg).
    const double n = std::ceil(std::log2(ratio) - 1e-9);
    return std::max(0, static_cast<int>(n));
}

double min_dot_lower_bound(int depth) {
    const double p = std::ldexp(1.0, depth);
    return p * kCos36 / (1.0 + (p - 1.0) * kCos36);
}

double rot_tolerance_for_depth(int depth) {
    return 2.0 * std::acos(std::min(1.0, min_dot_lower_bound(depth)));
}

namespace {

constexpr char kMagic[8] = {'S', '3', 'T', 'E', 'S', 'S', '0', '1'};

template <class T>
void write_le(std::ostream& os, T value) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), bytes.size());
}

template <class T>
T read_le(std::istream& is, std::size_t& offset) {
    std::array<char, sizeof(T)> bytes{};
    if (!is.read(bytes.data(), bytes.size())) throw ParseError("truncated tessellation cache", offset);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    offset += sizeof(T);
    return std::bit_cast<T>(bytes);
}

}  // namespace

void save_tessellation(const Tessellation& tess, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kMagic, sizeof(kMagic));
    for (const auto& v : tess.vertices) {
        for (double c : {v.i, v.j, v.k, v.r}) write_le(os, c);
    }
    for (const auto& cell : tess.cells) {
        for (std::uint16_t idx : cell) write_le(os, idx);
    }
    if (!os) throw IoError("failed writing " + path);
}

Tessellation load_tessellation(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ParseError("bad tessellation cache magic", 0);
    }
    std::size_t offset = sizeof(kMagic);
    Tessellation t;
    t.vertices.reserve(120);
    for (int v = 0; v < 120; ++v) {
        Vec4 q;
        for (int c = 0; c < 4; ++c) q[c] = read_le<double>(is, offset);
        const double n = q.norm();
        if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12) throw ParseError("cache vertex not unit-norm", offset);
        UnitQuaternion u;
        u.i = q[0];
        u.j = q[1];
        u.k = q[2];
        u.r = q[3];
        t.vertices.push_back(u);
    }
    t.cells.reserve(600);
    for (int c = 0; c < 600; ++c) {
        std::array<std::uint16_t, 4> cell{};
        for (auto& idx : cell) {
            idx = read_le<std::uint16_t>(is, offset);
            if (idx >= 120) throw ParseError("cache cell index out of range", offset);
        }
        t.cells.push_back(cell);
    }
    if (is.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes in tessellation cache", offset);
    for (const auto& cell : t.cells) {
        for (int a = 0; a < 4; ++a) {
            for (int b = a + 1; b < 4; ++b) {
                if (std::abs(t.vertices[cell[a]].dot(t.vertices[cell[b]]) - kCos36) > 1e-9)
                    throw InvariantViolation("cached cell is not a regular 600-cell tetrahedron");
            }
        }
    }
    t.hemisphere_cells = hemisphere_nodes(t.vertices, t.cells);
    check_counts(t);
    return t;
}

}  // namespace bbalign
