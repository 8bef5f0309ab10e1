#pragma once

#include <functional>
#include <vector>

#include "giorom/fft.hpp"
#include "giorom/tensor.hpp"

namespace giorom {

class Tape;

// Differentiable handle: a value plus its (optional) slot on a tape.
// Constants carry a null tape and take no part in the reverse sweep.
struct Var {
    Tensor v;
    Tape* tape = nullptr;
    int node = -1;

    Var() = default;
    explicit Var(Tensor t) : v(std::move(t)) {}
    Var(Tensor t, Tape* tp, int n) : v(std::move(t)), tape(tp), node(n) {}
    bool taped() const { return tape != nullptr && node >= 0; }
};

// Ordered record of primitive ops. The tape is rebuilt every training step;
// nodes are appended in forward order, so sweeping the record backwards
// visits each node exactly once in reverse topological order.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(const Tensor& value) { return Var(value, this, add_node()); }

    int add_node() {
        nodes_.push_back(Node{});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_pull(int node, std::function<void()> pull) {
        nodes_[static_cast<std::size_t>(node)].pull = std::move(pull);
    }

    bool has_grad(int node) const { return nodes_[static_cast<std::size_t>(node)].grad.defined(); }

    // Accumulation buffer for a node, allocated on first touch.
    Tensor& grad_buf(int node, const std::vector<int64_t>& shape) {
        Node& n = nodes_[static_cast<std::size_t>(node)];
        if (!n.grad.defined()) n.grad = Tensor(shape);
        return n.grad;
    }

    const Tensor& grad(int node) const { return nodes_[static_cast<std::size_t>(node)].grad; }

    // Reverse sweep from a scalar loss. Nodes recorded after the loss cannot
    // contribute and are skipped.
    void backward(const Var& loss);

    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor grad;                  // adjoint, lazily allocated
        std::function<void()> pull;   // pushes this node's grad into its inputs
    };
    std::vector<Node> nodes_;
};

namespace ad {

// y = x W + b with leading-axis batching: x [N, in], W [in, out], b [out].
Var linear(const Var& x, const Var& W, const Var& b);

// Exact (erf-form) Gaussian Error Linear Unit, elementwise.
Var gelu(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var reshape(const Var& x, std::vector<int64_t> shape);

// Column-wise concatenation of [N, c_i] blocks.
Var concat_cols(const std::vector<Var>& parts);

// out[e, :] = x[idx[e], :]
Var gather_rows(const Var& x, const std::vector<int>& idx);

// Mean of x's rows per segment, summed in the explicit order given:
// rows order[offsets[s] .. offsets[s+1]) belong to segment s. Empty segments
// yield zero rows. The caller fixes the order (e.g. sorted by sender
// position), which makes the reduction independent of row labelling.
Var segment_mean_ordered(const Var& x, const std::vector<int>& order,
                         const std::vector<int>& offsets);

// out[i, a] = sum_j U[i, a*r + j] * q[j], with U [N, d*r], q [r], out [N, d].
Var blockwise_matvec(const Var& U, const Var& q, int d);

Var sum(const Var& x);
Var mse(const Var& a, const Var& b);

// ---- spectral convolution ----

struct SpectralMode {
    int kr;  // signed row frequency, in [-(m-1), m-1]
    int kc;  // column frequency, in [0, m-1]
};

// Fixed enumeration of the retained half-plane modes for a per-axis mode
// count m: column 0 keeps rows 0..m-1 only (their mirrors are implied by
// conjugate symmetry); columns 1..m-1 keep all signed rows. Index 0 is the
// self-conjugate DC mode, whose weight acts through its real part only.
std::vector<SpectralMode> spectral_modes(int m);
int64_t spectral_mode_count(int m);

// x [H, W, c], weights [n_modes, c, c, 2] (re/im). Mirrored modes apply the
// conjugated weight, so the output is exactly real and equals a circular
// convolution whose kernel spectrum is the Hermitian extension of R.
Var spectral_conv(const Var& x, const Var& weights, int m);

}  // namespace ad
}  // namespace giorom
