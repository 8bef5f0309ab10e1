#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "giorom/autodiff.hpp"
#include "giorom/nn.hpp"
#include "giorom/params.hpp"
#include "giorom/rng.hpp"
#include "oracles.hpp"

using namespace giorom;
using namespace giorom::ad;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    double* d = t.mut_data();
    for (int64_t i = 0; i < t.numel(); ++i) d[i] = scale * rng.normal();
    return t;
}

// FD sweep of a scalar-valued builder over every parameter in the store.
double fd_sweep(ParamStore& store, const std::function<Var(Tape&, TapedParams&)>& build) {
    Tape tape;
    TapedParams taped(tape, store);
    Var loss = build(tape, taped);
    gradient(loss, tape, taped);
    std::map<std::string, Tensor> analytic;
    for (const auto& [name, g] : store.grads()) analytic[name] = g;
    auto eval = [&]() {
        Tape t2;
        TapedParams tp2(t2, store);
        return build(t2, tp2).v.item();
    };
    double worst = 0.0;
    for (const auto& [name, p] : store.params())
        worst = std::max(worst, oracle::fd_check_param(store, name, eval, analytic.at(name)));
    return worst;
}

}  // namespace

TEST_CASE("linear identity and hand arithmetic") {
    Var x(Tensor({1, 2}, {1, 2}));
    Var W(Tensor({2, 2}, {1, 0, 0, 1}));
    Var b(Tensor({2}, {0, 0}));
    Var y = linear(x, W, b);
    CHECK(y.v(0, 0) == doctest::Approx(1.0));
    CHECK(y.v(0, 1) == doctest::Approx(2.0));

    Var x2(Tensor({1, 2}, {1, 1}));
    Var W2(Tensor({2, 1}, {2, 3}));
    Var b2(Tensor({1}, {1}));
    CHECK(linear(x2, W2, b2).v(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("linear matches triple-loop oracle") {
    Rng rng(1234);
    Tensor x = random_tensor({7, 5}, rng);
    Tensor W = random_tensor({5, 4}, rng);
    Tensor b = random_tensor({4}, rng);
    Tensor ref = oracle::matmul_bias(x, W, b);
    Var y = linear(Var(x), Var(W), Var(b));
    for (int64_t i = 0; i < ref.numel(); ++i) CHECK(std::fabs(y.v.flat(i) - ref.flat(i)) < 1e-12);
}

TEST_CASE("linear rejects shape mismatch with both shapes reported") {
    Var x(Tensor({2, 3}));
    Var W(Tensor({4, 2}));
    Var b(Tensor({2}));
    try {
        linear(x, W, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2, 3]") != std::string::npos);
        CHECK(msg.find("[4, 2]") != std::string::npos);
    }
}

TEST_CASE("gelu values") {
    Var zero(Tensor({1}, {0.0}));
    CHECK(gelu(zero).v.item() == doctest::Approx(0.0));

    Var big(Tensor({1}, {12.0}));
    CHECK(std::fabs(gelu(big).v.item() - 12.0) < 1e-9);

    // gelu(1) against the quadrature definition of erf
    Var one(Tensor({1}, {1.0}));
    const double expected = 0.5 * (1.0 + oracle::erf_quadrature(1.0 / std::sqrt(2.0)));
    CHECK(std::fabs(gelu(one).v.item() - expected) < 1e-10);
}

TEST_CASE("gradient of sum is all-ones") {
    ParamStore store;
    Rng rng(5);
    store.add("W", random_tensor({3, 4}, rng));
    Tape tape;
    TapedParams taped(tape, store);
    Var loss = sum(taped["W"]);
    gradient(loss, tape, taped);
    const Tensor& g = store.grad("W");
    for (int64_t i = 0; i < g.numel(); ++i) CHECK(g.flat(i) == doctest::Approx(1.0));
    CHECK(tape.size() == 0);  // tape cleared
}

TEST_CASE("gradient of mse matches closed form on 2x2 case") {
    ParamStore store;
    store.add("W", Tensor({2, 2}, {0.5, -0.3, 0.2, 0.8}));
    Tensor x({2, 2}, {1.0, 2.0, -1.0, 0.5});
    Tensor target({2, 2}, {0.3, 0.1, -0.2, 0.4});
    Tape tape;
    TapedParams taped(tape, store);
    Var pred = linear(Var(x), taped["W"], Var(Tensor({2})));
    Var loss = mse(pred, Var(target));
    gradient(loss, tape, taped);
    // closed form: dL/dW = (2/4) x^T (xW - t)
    Tensor resid({2, 2});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = -target(i, j);
            for (int k = 0; k < 2; ++k) acc += x(i, k) * store.at("W")(k, j);
            resid.mut_data()[i * 2 + j] = acc;
        }
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j) {
            double expect = 0.0;
            for (int i = 0; i < 2; ++i) expect += x(i, k) * resid(i, j);
            expect *= 2.0 / 4.0;
            CHECK(store.grad("W")(k, j) == doctest::Approx(expect).epsilon(1e-10));
        }
}

TEST_CASE("loss must be scalar") {
    ParamStore store;
    store.add("W", Tensor({2, 2}, {1, 2, 3, 4}));
    Tape tape;
    TapedParams taped(tape, store);
    Var notloss = scale(taped["W"], 2.0);
    CHECK_THROWS_AS(tape.backward(notloss), ShapeError);
}

TEST_CASE("finite differences: every primitive") {
    Rng rng(99);
    const double tol = 1e-4;

    SUBCASE("linear") {
        ParamStore store;
        store.add("x", random_tensor({4, 3}, rng));
        store.add("W", random_tensor({3, 5}, rng));
        store.add("b", random_tensor({5}, rng));
        Tensor tgt = random_tensor({4, 5}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  return mse(linear(p["x"], p["W"], p["b"]), Var(tgt));
              }) < tol);
    }
    SUBCASE("gelu") {
        ParamStore store;
        store.add("x", random_tensor({4, 3}, rng));
        Tensor tgt = random_tensor({4, 3}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) { return mse(gelu(p["x"]), Var(tgt)); }) < tol);
    }
    SUBCASE("add sub mul scale") {
        ParamStore store;
        store.add("a", random_tensor({3, 3}, rng));
        store.add("b", random_tensor({3, 3}, rng));
        Tensor tgt = random_tensor({3, 3}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  Var m = mul(add(p["a"], p["b"]), sub(p["a"], scale(p["b"], 0.7)));
                  return mse(m, Var(tgt));
              }) < tol);
    }
    SUBCASE("concat gather segment_mean") {
        ParamStore store;
        store.add("a", random_tensor({4, 2}, rng));
        store.add("b", random_tensor({4, 3}, rng));
        const std::vector<int> idx = {0, 2, 2, 3, 1};
        const std::vector<int> order = {0, 1, 2, 3, 4};
        const std::vector<int> offsets = {0, 2, 2, 5};  // middle segment empty
        Tensor tgt = random_tensor({3, 5}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  Var cat = concat_cols({p["a"], p["b"]});
                  Var gathered = gather_rows(cat, idx);
                  Var agg = segment_mean_ordered(gathered, order, offsets);
                  return mse(agg, Var(tgt));
              }) < tol);
    }
    SUBCASE("blockwise_matvec") {
        ParamStore store;
        store.add("U", random_tensor({5, 6}, rng));
        store.add("q", random_tensor({3}, rng));
        Tensor tgt = random_tensor({5, 2}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  return mse(blockwise_matvec(p["U"], p["q"], 2), Var(tgt));
              }) < tol);
    }
    SUBCASE("sum reshape") {
        ParamStore store;
        store.add("x", random_tensor({2, 6}, rng));
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  return sum(gelu(reshape(p["x"], {3, 4})));
              }) < tol);
    }
    SUBCASE("spectral_conv") {
        ParamStore store;
        const int m = 2, C = 2;
        store.add("x", random_tensor({6, 6, C}, rng));
        store.add("R", random_tensor({spectral_mode_count(m), C, C, 2}, rng));
        Tensor tgt = random_tensor({6, 6, C}, rng);
        CHECK(fd_sweep(store, [&](Tape&, TapedParams& p) {
                  return mse(spectral_conv(p["x"], p["R"], m), Var(tgt));
              }) < tol);
    }
}

TEST_CASE("ops are deterministic") {
    Rng rng(7);
    Tensor x = random_tensor({64, 32}, rng);
    Tensor W = random_tensor({32, 48}, rng);
    Tensor b = random_tensor({48}, rng);
    Var y1 = linear(Var(x), Var(W), Var(b));
    Var y2 = linear(Var(x), Var(W), Var(b));
    for (int64_t i = 0; i < y1.v.numel(); ++i) CHECK(y1.v.flat(i) == y2.v.flat(i));
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    ParamStore store;
    Rng rng(3);
    store.add("W", random_tensor({3, 3}, rng));
    const Tensor before = store.at("W");
    store.zero_grads();
    Adam opt(1e-3, 1.0);
    opt.step(store);
    for (int64_t i = 0; i < before.numel(); ++i) CHECK(store.at("W").flat(i) == before.flat(i));
}

TEST_CASE("adam learning rate schedule is exact") {
    const double gamma = std::pow(0.1, 1.0 / 5e6);
    Adam opt(1e-4, gamma);
    ParamStore store;
    store.add("w", Tensor({1}, {1.0}));
    store.zero_grads();
    for (int n = 0; n < 2500; ++n) opt.step(store);
    const double expect = 1e-4 * std::pow(gamma, 2500.0);
    CHECK(std::fabs(opt.learning_rate() - expect) / expect < 1e-12);
}

TEST_CASE("param container round trip") {
    ParamStore store;
    Rng rng(11);
    store.add("a.W", random_tensor({3, 4}, rng));
    store.add("b.vec", random_tensor({7}, rng));
    std::stringstream ss;
    write_param_blob(ss, store);
    ParamStore loaded;
    read_param_blob(ss, loaded);
    CHECK(loaded.size() == 2);
    for (const auto& [name, p] : store.params()) {
        const Tensor& q = loaded.at(name);
        REQUIRE(q.same_shape(p));
        for (int64_t i = 0; i < p.numel(); ++i) CHECK(q.flat(i) == p.flat(i));
    }
}
