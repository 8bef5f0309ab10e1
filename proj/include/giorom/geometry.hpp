#pragma once

#include <vector>

#include "giorom/rng.hpp"
#include "giorom/tensor.hpp"

namespace giorom {

struct Bounds {
    std::vector<double> lo, hi;  // size d
    int dim() const { return static_cast<int>(lo.size()); }
    double diagonal() const;
};

struct PointCloud {
    Tensor positions;             // [Q, d], world units
    std::vector<int> object_id;   // per point
    Bounds bounds;

    int64_t size() const { return positions.extent(0); }
    int dim() const { return static_cast<int>(positions.extent(1)); }
    void validate() const;  // positions inside bounds, d in {2,3}, Q >= 1
};

// Directed neighbor lists under a ball radius. Edge (receiver, sender) is
// present iff ||x_r - x_s|| <= radius and r != s; the set is symmetric.
struct RadiusGraph {
    double radius = 0.0;
    std::vector<int> receivers;     // sorted by (receiver, sender)
    std::vector<int> senders;
    std::vector<int> row_offsets;   // size Q+1, incoming-edge ranges per receiver
    std::vector<int> components_per_object;

    int64_t edge_count() const { return static_cast<int64_t>(receivers.size()); }
    bool single_component_everywhere() const {
        for (int c : components_per_object)
            if (c != 1) return false;
        return true;
    }
};

struct LatentGrid {
    int resolution = 32;      // per axis
    Tensor positions;         // [S, d], S = resolution^d, row-major over axes
    double spacing0 = 0.0;    // axis-0 spacing
    int64_t size() const { return positions.extent(0); }
};

// Exact neighbor sets via uniform spatial hashing with cell size r.
RadiusGraph build_radius_graph(const PointCloud& cloud, double radius);

// Union-find component count per object id over the undirected edge set.
// Returns counts indexed by object id (0..max_id).
std::vector<int> connected_components(const RadiusGraph& graph, const std::vector<int>& object_id);

// Smallest radius in the sequence r0 * 1.2^k (clamped to the bounds diagonal)
// at which every object forms a single component.
double find_connected_radius(const PointCloud& cloud, double r0);

struct SubsampleResult {
    PointCloud cloud;
    std::vector<int> indices;  // ascending positions into the source cloud
};

// Uniform selection without replacement, at least one point per object,
// deterministic under seed.
SubsampleResult subsample(const PointCloud& cloud, double fraction, std::uint64_t seed);

// Per-axis distances to the lo and hi walls, divided by r and clipped to
// [-1, 1]. Layout per row: [lo_0..lo_{d-1}, hi_0..hi_{d-1}].
Tensor boundary_features(const PointCloud& cloud, double radius);

// Inclusive axis-wise linspace over the bounds.
LatentGrid make_latent_grid(const Bounds& bounds, int resolution);

// Nearest source index for each destination (used by transfer fallbacks).
std::vector<int> nearest_source(const Tensor& src_pos, const Tensor& dst_pos);

}  // namespace giorom
