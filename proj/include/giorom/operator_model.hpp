#pragma once

#include <functional>
#include <string>
#include <vector>

#include "giorom/geometry.hpp"
#include "giorom/nn.hpp"
#include "giorom/params.hpp"

namespace giorom {

// ---- generic operator building blocks ----

// Batched per-edge kernel: (edge_feats [E,ec], recv_feats [E,c], send_feats
// [E,c]) -> messages [E,m].
using EdgeKernel = std::function<Var(const Var&, const Var&, const Var&)>;
// Node update: (node_feats [Q,c], aggregated messages [Q,m]) -> [Q,out].
using NodeUpdate = std::function<Var(const Var&, const Var&)>;
// Batched transfer kernel: (dst_pos [P,d], src_pos [P,d], src_feats [P,c]) -> [P,out].
using TransferKernel = std::function<Var(const Var&, const Var&, const Var&)>;

// Per-receiver reduction plan: incoming edges sorted by sender position, so
// the fixed summation order is intrinsic to the geometry rather than to the
// particle labelling.
struct AggPlan {
    std::vector<int> order;    // edge indices grouped by receiver
    std::vector<int> offsets;  // size Q+1
};
AggPlan agg_plan_by_position(const RadiusGraph& graph, const Tensor& positions);

struct IoResult {
    Var nodes;
    Var edges;  // residual edge features: input edges + messages
};

// Message passing with mean aggregation. Empty neighborhoods aggregate to a
// zero message. With no edges at all the input edge features pass through.
IoResult interaction_operator(const Var& nodes, const RadiusGraph& graph, const Var& edges,
                              const EdgeKernel& kernel, const NodeUpdate& update,
                              const Tensor& positions);

// Kernel-integral transfer between point sets: mean of kernel values over
// sources within `radius` of each destination. Exactly coincident source
// points are deduplicated (first index kept); destinations with empty
// neighborhoods evaluate the kernel at the single nearest source.
Var gno_transfer(const Tensor& src_positions, const Var& src_features, const Tensor& dst_positions,
                 double radius, const TransferKernel& kernel);

// ---- the learnable operator stack ----

struct ModelConfig {
    int dim = 2;
    int window = 6;
    int latent = 128;            // node/edge feature width after encoding
    int grid_channels = 32;      // FNO width on the latent grid
    int decoder_channels = 16;   // GNO decoder output, lifted back to latent
    int modes = 16;              // retained Fourier modes per axis
    int grid_res = 32;           // latent grid resolution per axis
    int type_embed_dim = 16;
    int num_types = 4;
    int fno_layers = 2;
    std::vector<int> encoder_hidden = {128};
    std::vector<int> io_hidden = {32, 64};
    std::vector<int> gno_hidden = {32, 64};
    double gno_radius = 0.0;  // world units; 0 derives 2x grid spacing when first used

    int node_input_width() const { return window * dim + 2 * dim + type_embed_dim; }
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& json_text);

using ParamFn = std::function<Var(const std::string&)>;

class OperatorModel {
public:
    OperatorModel(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ModelConfig& config_mut() { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Predicted per-particle acceleration [Q, d] in normalized units.
    // window_flat is the normalized velocity window [Q, w*d]; types are the
    // per-particle material labels.
    Var forward(const ParamFn& P, const PointCloud& cloud, const RadiusGraph& graph,
                const Tensor& window_flat, const std::vector<int>& types,
                const LatentGrid& grid) const;

    Var forward(TapedParams& taped, const PointCloud& cloud, const RadiusGraph& graph,
                const Tensor& window_flat, const std::vector<int>& types,
                const LatentGrid& grid) const {
        return forward([&taped](const std::string& n) { return taped[n]; }, cloud, graph,
                       window_flat, types, grid);
    }
    Tensor infer(const PointCloud& cloud, const RadiusGraph& graph, const Tensor& window_flat,
                 const std::vector<int>& types, const LatentGrid& grid) const {
        ConstParams cp(params_);
        return forward([&cp](const std::string& n) { return cp[n]; }, cloud, graph, window_flat,
                       types, grid).v;
    }

    // One FNO block: gelu(pointwise linear + spectral convolution).
    Var fno_layer(const ParamFn& P, const Var& grid_feats, int layer) const;

private:
    ModelConfig cfg_;
    ParamStore params_;
    Mlp node_encoder_, edge_encoder_;
    Mlp io_enc_kernel_, io_enc_update_, io_dec_kernel_, io_dec_update_;
    Mlp gno_enc_kernel_, gno_dec_kernel_;
};

}  // namespace giorom
