#include "giorom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace giorom {

double Bounds::diagonal() const {
    double s = 0.0;
    for (std::size_t a = 0; a < lo.size(); ++a) {
        const double e = hi[a] - lo[a];
        s += e * e;
    }
    return std::sqrt(s);
}

void PointCloud::validate() const {
    const int d = dim();
    if (d != 2 && d != 3) throw DataError("point cloud dimension must be 2 or 3");
    if (size() < 1) throw DataError("point cloud is empty");
    if (static_cast<int64_t>(object_id.size()) != size())
        throw DataError("object_id length does not match point count");
    for (int64_t i = 0; i < size(); ++i)
        for (int a = 0; a < d; ++a) {
            const double x = positions(i, a);
            if (x < bounds.lo[static_cast<std::size_t>(a)] || x > bounds.hi[static_cast<std::size_t>(a)])
                throw DataError("point " + std::to_string(i) + " outside bounds on axis " + std::to_string(a));
        }
}

namespace {

struct CellKey {
    int64_t c[3];
    bool operator==(const CellKey& o) const { return c[0] == o.c[0] && c[1] == o.c[1] && c[2] == o.c[2]; }
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::uint64_t h = 1469598103934665603ULL;
        for (int i = 0; i < 3; ++i) {
            h ^= static_cast<std::uint64_t>(k.c[i]);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<std::size_t>(a)] = b;
    }
};

}  // namespace

RadiusGraph build_radius_graph(const PointCloud& cloud, double radius) {
    if (radius <= 0.0) throw DataError("radius must be positive");
    const int64_t Q = cloud.size();
    const int d = cloud.dim();
    const double r2 = radius * radius;

    std::unordered_map<CellKey, std::vector<int>, CellHash> cells;
    cells.reserve(static_cast<std::size_t>(Q));
    auto key_of = [&](int64_t i) {
        CellKey k{{0, 0, 0}};
        for (int a = 0; a < d; ++a)
            k.c[a] = static_cast<int64_t>(std::floor(cloud.positions(i, a) / radius));
        return k;
    };
    for (int64_t i = 0; i < Q; ++i) cells[key_of(i)].push_back(static_cast<int>(i));

    RadiusGraph g;
    g.radius = radius;
    g.row_offsets.assign(static_cast<std::size_t>(Q) + 1, 0);
    std::vector<int> nbrs;
    for (int64_t i = 0; i < Q; ++i) {
        nbrs.clear();
        const CellKey base = key_of(i);
        const int zlo = d == 3 ? -1 : 0, zhi = d == 3 ? 1 : 0;
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = zlo; dz <= zhi; ++dz) {
                    CellKey k{{base.c[0] + dx, base.c[1] + dy, base.c[2] + dz}};
                    auto it = cells.find(k);
                    if (it == cells.end()) continue;
                    for (int j : it->second) {
                        if (j == static_cast<int>(i)) continue;
                        double s = 0.0;
                        for (int a = 0; a < d; ++a) {
                            const double diff = cloud.positions(i, a) - cloud.positions(j, a);
                            s += diff * diff;
                        }
                        if (s <= r2) nbrs.push_back(j);
                    }
                }
        std::sort(nbrs.begin(), nbrs.end());
        for (int j : nbrs) {
            g.receivers.push_back(static_cast<int>(i));
            g.senders.push_back(j);
        }
        g.row_offsets[static_cast<std::size_t>(i) + 1] = static_cast<int>(g.receivers.size());
    }
    g.components_per_object = connected_components(g, cloud.object_id);
    return g;
}

std::vector<int> connected_components(const RadiusGraph& graph, const std::vector<int>& object_id) {
    const int Q = static_cast<int>(object_id.size());
    UnionFind uf(Q);
    // each object's connectivity is judged on its own induced subgraph
    for (std::size_t e = 0; e < graph.receivers.size(); ++e)
        if (object_id[static_cast<std::size_t>(graph.receivers[e])] ==
            object_id[static_cast<std::size_t>(graph.senders[e])])
            uf.unite(graph.receivers[e], graph.senders[e]);
    int max_id = 0;
    for (int id : object_id) max_id = std::max(max_id, id);
    std::vector<int> counts(static_cast<std::size_t>(max_id) + 1, 0);
    std::vector<char> seen_root(static_cast<std::size_t>(Q), 0);
    for (int i = 0; i < Q; ++i) {
        const int root = uf.find(i);
        if (!seen_root[static_cast<std::size_t>(root)]) {
            seen_root[static_cast<std::size_t>(root)] = 1;
            counts[static_cast<std::size_t>(object_id[static_cast<std::size_t>(i)])] += 1;
        }
    }
    return counts;
}

double find_connected_radius(const PointCloud& cloud, double r0) {
    if (r0 <= 0.0) throw DataError("seed radius must be positive");
    const double diag = cloud.bounds.diagonal();
    double r = r0;
    for (;;) {
        const double probe = std::min(r, diag);
        RadiusGraph g = build_radius_graph(cloud, probe);
        if (g.single_component_everywhere()) return probe;
        if (probe >= diag) return diag;  // fully connected within each object at the diagonal
        r *= 1.2;
    }
}

SubsampleResult subsample(const PointCloud& cloud, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0 || fraction > 1.0) throw DataError("fraction must be in (0, 1]");
    const int64_t Q = cloud.size();
    int max_id = 0;
    for (int id : cloud.object_id) max_id = std::max(max_id, id);
    std::vector<std::vector<int>> by_object(static_cast<std::size_t>(max_id) + 1);
    for (int64_t i = 0; i < Q; ++i)
        by_object[static_cast<std::size_t>(cloud.object_id[static_cast<std::size_t>(i)])].push_back(static_cast<int>(i));

    Rng rng(seed);
    std::vector<int> picked;
    for (auto& members : by_object) {
        if (members.empty()) continue;
        const int64_t n = static_cast<int64_t>(members.size());
        int64_t take = static_cast<int64_t>(std::llround(fraction * static_cast<double>(n)));
        take = std::max<int64_t>(1, std::min(take, n));
        // partial Fisher-Yates
        for (int64_t k = 0; k < take; ++k) {
            const int64_t pick = k + static_cast<int64_t>(rng.randint(static_cast<std::uint64_t>(n - k)));
            std::swap(members[static_cast<std::size_t>(k)], members[static_cast<std::size_t>(pick)]);
        }
        picked.insert(picked.end(), members.begin(), members.begin() + take);
    }
    std::sort(picked.begin(), picked.end());

    const int d = cloud.dim();
    Tensor pos({static_cast<int64_t>(picked.size()), d});
    std::vector<int> ids(picked.size());
    for (std::size_t k = 0; k < picked.size(); ++k) {
        for (int a = 0; a < d; ++a) pos.mut_data()[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] = cloud.positions(picked[k], a);
        ids[k] = cloud.object_id[static_cast<std::size_t>(picked[k])];
    }
    SubsampleResult out;
    out.cloud = PointCloud{std::move(pos), std::move(ids), cloud.bounds};
    out.indices = std::move(picked);
    return out;
}

Tensor boundary_features(const PointCloud& cloud, double radius) {
    if (radius <= 0.0) throw DataError("radius must be positive");
    const int64_t Q = cloud.size();
    const int d = cloud.dim();
    Tensor f({Q, 2 * d});
    double* fd = f.mut_data();
    auto clip = [](double v) { return std::max(-1.0, std::min(1.0, v)); };
    for (int64_t i = 0; i < Q; ++i)
        for (int a = 0; a < d; ++a) {
            fd[i * 2 * d + a] = clip((cloud.positions(i, a) - cloud.bounds.lo[static_cast<std::size_t>(a)]) / radius);
            fd[i * 2 * d + d + a] = clip((cloud.bounds.hi[static_cast<std::size_t>(a)] - cloud.positions(i, a)) / radius);
        }
    return f;
}

LatentGrid make_latent_grid(const Bounds& bounds, int resolution) {
    if (resolution < 2) throw DataError("latent grid resolution must be >= 2");
    const int d = bounds.dim();
    int64_t S = 1;
    for (int a = 0; a < d; ++a) S *= resolution;
    Tensor pos({S, d});
    double* pd = pos.mut_data();
    std::vector<double> step(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a)
        step[static_cast<std::size_t>(a)] =
            (bounds.hi[static_cast<std::size_t>(a)] - bounds.lo[static_cast<std::size_t>(a)]) / (resolution - 1);
    for (int64_t s = 0; s < S; ++s) {
        int64_t rem = s;
        for (int a = d - 1; a >= 0; --a) {
            const int64_t idx = rem % resolution;
            rem /= resolution;
            pd[s * d + a] = bounds.lo[static_cast<std::size_t>(a)] + step[static_cast<std::size_t>(a)] * static_cast<double>(idx);
        }
    }
    LatentGrid g;
    g.resolution = resolution;
    g.positions = std::move(pos);
    g.spacing0 = step[0];
    return g;
}

std::vector<int> nearest_source(const Tensor& src_pos, const Tensor& dst_pos) {
    const int64_t S = src_pos.extent(0), D = dst_pos.extent(0);
    const int d = static_cast<int>(src_pos.extent(1));
    std::vector<int> out(static_cast<std::size_t>(D), 0);
    for (int64_t i = 0; i < D; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int64_t j = 0; j < S; ++j) {
            double s = 0.0;
            for (int a = 0; a < d; ++a) {
                const double diff = dst_pos(i, a) - src_pos(j, a);
                s += diff * diff;
            }
            if (s < best) {
                best = s;
                arg = static_cast<int>(j);
            }
        }
        out[static_cast<std::size_t>(i)] = arg;
    }
    return out;
}

}  // namespace giorom
