#include "giorom/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace giorom {

static_assert(std::endian::native == std::endian::little,
              "parameter container assumes a little-endian host");

const Tensor& ParamStore::add(const std::string& name, Tensor init) {
    if (params_.count(name)) throw DataError("duplicate parameter name: " + name);
    grads_[name] = Tensor(init.shape());
    auto [it, ok] = params_.emplace(name, std::move(init));
    (void)ok;
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::grad(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::set(const std::string& name, Tensor value) {
    auto it = params_.find(name);
    if (it == params_.end()) throw DataError("unknown parameter: " + name);
    if (!it->second.same_shape(value))
        throw ShapeError("parameter " + name + " shape change " + it->second.shape_str() + " -> " +
                         value.shape_str());
    it->second = std::move(value);
}

void ParamStore::zero_grads() {
    for (auto& [name, g] : grads_) g = Tensor(g.shape());
}

int64_t ParamStore::total_elements() const {
    int64_t n = 0;
    for (const auto& [name, p] : params_) n += p.numel();
    return n;
}

TapedParams::TapedParams(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {
    for (const auto& [name, p] : store.params()) leaves_.emplace(name, tape.leaf(p));
}

Var TapedParams::operator[](const std::string& name) const {
    auto it = leaves_.find(name);
    if (it == leaves_.end()) throw DataError("unknown parameter: " + name);
    return it->second;
}

Var ConstParams::operator[](const std::string& name) const { return Var(store_.at(name)); }

void gradient(const Var& loss, Tape& tape, const TapedParams& taped) {
    tape.backward(loss);
    ParamStore& store = taped.store();
    for (const auto& [name, p] : store.params()) {
        const Var leaf = taped[name];
        Tensor& slot = store.grad(name);
        Tensor out(p.shape());
        if (tape.has_grad(leaf.node)) {
            const Tensor& g = tape.grad(leaf.node);
            double* od = out.mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) od[i] = g.flat(i);
        }
        slot = std::move(out);
    }
    tape.clear();
}

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("truncated parameter container");
    return v;
}

}  // namespace

void write_param_blob(std::ostream& os, const ParamStore& store) {
    os.write("GPRM", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, p] : store.params()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint8_t>(os, static_cast<std::uint8_t>(p.ndim()));
        for (int64_t i = 0; i < p.ndim(); ++i) put<std::uint32_t>(os, static_cast<std::uint32_t>(p.extent(static_cast<int>(i))));
        os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.numel() * 8));
    }
}

void read_param_blob(std::istream& is, ParamStore& store) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GPRM", 4) != 0) throw DataError("not a parameter container");
    const auto version = get<std::uint8_t>(is);
    if (version != 1) throw DataError("unsupported parameter container version");
    const auto count = get<std::uint32_t>(is);
    for (std::uint32_t k = 0; k < count; ++k) {
        const auto name_len = get<std::uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const auto ndim = get<std::uint8_t>(is);
        std::vector<int64_t> shape(ndim);
        for (auto& e : shape) e = get<std::uint32_t>(is);
        Tensor tensor(shape);
        is.read(reinterpret_cast<char*>(tensor.mut_data()), static_cast<std::streamsize>(tensor.numel() * 8));
        if (!is) throw DataError("truncated parameter payload for " + name);
        if (store.has(name)) {
            store.set(name, std::move(tensor));
        } else {
            store.add(name, std::move(tensor));
        }
    }
}

void save_checkpoint(const std::string& path, const std::string& meta_json, const ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint: " + path);
    os.write("GCKP", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(meta_json.size()));
    os.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
    write_param_blob(os, store);
    if (!os) throw DataError("failed writing checkpoint: " + path);
}

std::string load_checkpoint(const std::string& path, ParamStore& store) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GCKP", 4) != 0) throw DataError("not a checkpoint file: " + path);
    const auto version = get<std::uint8_t>(is);
    if (version != 1) throw DataError("unsupported checkpoint version");
    const auto meta_len = get<std::uint32_t>(is);
    std::string meta(meta_len, '\0');
    is.read(meta.data(), meta_len);
    if (!is) throw DataError("truncated checkpoint meta");
    read_param_blob(is, store);
    return meta;
}

}  // namespace giorom
