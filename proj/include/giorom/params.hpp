#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "giorom/autodiff.hpp"
#include "giorom/tensor.hpp"

namespace giorom {

// Named parameters with same-shaped gradient slots. Iteration is
// name-ordered, which fixes leaf order on the tape.
class ParamStore {
public:
    const Tensor& add(const std::string& name, Tensor init);
    const Tensor& at(const std::string& name) const;
    Tensor& grad(const std::string& name);
    const Tensor& grad(const std::string& name) const;
    void set(const std::string& name, Tensor value);
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    void zero_grads();
    std::size_t size() const { return params_.size(); }
    int64_t total_elements() const;

    const std::map<std::string, Tensor>& params() const { return params_; }
    std::map<std::string, Tensor>& params_mut() { return params_; }
    std::map<std::string, Tensor>& grads() { return grads_; }

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> grads_;
};

// Parameters bound to a tape as leaves for one forward/backward pass.
class TapedParams {
public:
    TapedParams(Tape& tape, ParamStore& store);
    // Taped leaf when a tape binding exists, otherwise the raw constant.
    Var operator[](const std::string& name) const;
    ParamStore& store() const { return store_; }

private:
    Tape& tape_;
    ParamStore& store_;
    std::map<std::string, Var> leaves_;
};

// Read-only view used for inference: same lookup surface, no tape.
class ConstParams {
public:
    explicit ConstParams(const ParamStore& store) : store_(store) {}
    Var operator[](const std::string& name) const;

private:
    const ParamStore& store_;
};

// Accumulates d(loss)/d(param) into the store's gradient slots and clears
// the tape. The loss must be a taped scalar.
void gradient(const Var& loss, Tape& tape, const TapedParams& taped);

// ---- binary parameter container ----
// Layout (little-endian): magic "GPRM", u8 version, u32 count, then per
// parameter: u32 name_len, name bytes, u8 ndim, u32 extents[ndim],
// f64 payload[numel]. Parameters are written in name order.
void write_param_blob(std::ostream& os, const ParamStore& store);
void read_param_blob(std::istream& is, ParamStore& store);

// ---- checkpoint file ----
// Layout: magic "GCKP", u8 version, u32 meta_len, meta (UTF-8 JSON), then a
// parameter container. The JSON carries the architecture and run metadata so
// the checkpoint is self-contained.
void save_checkpoint(const std::string& path, const std::string& meta_json, const ParamStore& store);
std::string load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace giorom
