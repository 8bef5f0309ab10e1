#pragma once

#include <map>
#include <string>
#include <vector>

#include "giorom/params.hpp"
#include "giorom/rng.hpp"

namespace giorom {

inline Tensor glorot_init(int64_t fan_in, int64_t fan_out, Rng& rng) {
    Tensor w({fan_in, fan_out});
    const double s = std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
    double* d = w.mut_data();
    for (int64_t i = 0; i < w.numel(); ++i) d[i] = s * rng.normal();
    return w;
}

// Fully connected stack with gelu on hidden layers and a linear output.
// Parameters are registered as <prefix>.l<k>.{W,b}.
struct Mlp {
    std::string prefix;
    std::vector<int> widths;  // [in, hidden..., out]

    void register_params(ParamStore& store, Rng& rng) const {
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            store.add(layer_name(l) + ".W", glorot_init(widths[l], widths[l + 1], rng));
            store.add(layer_name(l) + ".b", Tensor({widths[l + 1]}));
        }
    }

    // Params is any callable name -> Var (taped leaf or constant).
    template <typename Params>
    Var forward(const Params& p, const Var& x) const {
        Var h = x;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            h = ad::linear(h, p(layer_name(l) + ".W"), p(layer_name(l) + ".b"));
            if (l + 2 < widths.size()) h = ad::gelu(h);
        }
        return h;
    }

    std::string layer_name(std::size_t l) const { return prefix + ".l" + std::to_string(l); }
};

// Adam with a fixed exponential learning-rate schedule lr0 * gamma^step.
class Adam {
public:
    Adam(double lr0, double gamma, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr0_(lr0), gamma_(gamma), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    double learning_rate() const { return lr0_ * std::pow(gamma_, static_cast<double>(step_)); }
    int64_t step_count() const { return step_; }

    void step(ParamStore& store) {
        const double lr = learning_rate();
        const double t = static_cast<double>(step_ + 1);
        const double bc1 = 1.0 - std::pow(beta1_, t);
        const double bc2 = 1.0 - std::pow(beta2_, t);
        for (auto& [name, p] : store.params_mut()) {
            const Tensor& g = store.grad(name);
            Tensor& m = slot(m_, name, p.shape());
            Tensor& v = slot(v_, name, p.shape());
            Tensor np(p.shape());
            double* pd = np.mut_data();
            double* md = m.mut_data();
            double* vd = v.mut_data();
            for (int64_t i = 0; i < p.numel(); ++i) {
                const double gi = g.flat(i);
                md[i] = beta1_ * md[i] + (1.0 - beta1_) * gi;
                vd[i] = beta2_ * vd[i] + (1.0 - beta2_) * gi * gi;
                const double mhat = md[i] / bc1;
                const double vhat = vd[i] / bc2;
                pd[i] = p.flat(i) - lr * mhat / (std::sqrt(vhat) + eps_);
            }
            p = std::move(np);
        }
        ++step_;
    }

private:
    Tensor& slot(std::map<std::string, Tensor>& m, const std::string& name,
                 const std::vector<int64_t>& shape) {
        auto it = m.find(name);
        if (it == m.end()) it = m.emplace(name, Tensor(shape)).first;
        return it->second;
    }

    double lr0_, gamma_, beta1_, beta2_, eps_;
    int64_t step_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

}  // namespace giorom
