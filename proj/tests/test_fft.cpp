#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "giorom/fft.hpp"
#include "giorom/rng.hpp"
#include "oracles.hpp"

using namespace giorom;

namespace {

Tensor random_field(int H, int W, int C, Rng& rng) {
    Tensor t({H, W, C});
    for (int64_t i = 0; i < t.numel(); ++i) t.mut_data()[i] = rng.normal();
    return t;
}

}  // namespace

TEST_CASE("constant field has a DC-only spectrum of c*H*W") {
    const double c = 2.5;
    Tensor x = Tensor::full({8, 8, 1}, c);
    Spectrum2d s = fft2_real(x);
    for (int r = 0; r < 8; ++r)
        for (int col = 0; col < s.half_w(); ++col) {
            const cplx v = s.at(r, col, 0);
            if (r == 0 && col == 0) {
                CHECK(std::fabs(v.real() - c * 64.0) < 1e-10);
                CHECK(std::fabs(v.imag()) < 1e-10);
            } else {
                CHECK(std::abs(v) < 1e-10);
            }
        }
}

TEST_CASE("single cosine along one axis lands on two conjugate modes") {
    const int H = 8, W = 8;
    Tensor x({H, W, 1});
    for (int r = 0; r < H; ++r)
        for (int col = 0; col < W; ++col)
            x.mut_data()[r * W + col] = std::cos(2.0 * M_PI * 3.0 * col / W);
    Spectrum2d s = fft2_real(x);
    // stored half plane sees the +3 column mode only; the -3 mode is implied
    int nonzero = 0;
    for (int r = 0; r < H; ++r)
        for (int col = 0; col < s.half_w(); ++col)
            if (std::abs(s.at(r, col, 0)) > 1e-9) ++nonzero;
    CHECK(nonzero == 1);
    CHECK(std::fabs(s.at(0, 3, 0).real() - 0.5 * H * W) < 1e-9);

    // full-plane view: exactly the two conjugate modes
    std::vector<double> flat(static_cast<std::size_t>(H) * W);
    for (int i = 0; i < H * W; ++i) flat[static_cast<std::size_t>(i)] = x.flat(i);
    auto full = oracle::direct_dft2(flat, H, W);
    int full_nonzero = 0;
    for (const auto& v : full)
        if (std::abs(v) > 1e-9) ++full_nonzero;
    CHECK(full_nonzero == 2);
}

TEST_CASE("random 8x8 matches the direct DFT oracle to 1e-10") {
    Rng rng(42);
    Tensor x = random_field(8, 8, 1, rng);
    std::vector<double> flat(64);
    for (int i = 0; i < 64; ++i) flat[static_cast<std::size_t>(i)] = x.flat(i);
    auto ref = oracle::direct_dft2(flat, 8, 8);
    Spectrum2d s = fft2_real(x);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < s.half_w(); ++c)
            CHECK(std::abs(s.at(r, c, 0) - ref[static_cast<std::size_t>(r * 8 + c)]) < 1e-10);
}

TEST_CASE("inverse(forward(x)) == x for shapes up to 64x64") {
    Rng rng(43);
    // includes non-power-of-two extents to exercise the Bluestein path
    const int shapes[][2] = {{1, 1}, {2, 3}, {4, 4}, {5, 7}, {8, 8}, {12, 20}, {9, 9}, {16, 16}, {31, 17}, {64, 64}};
    for (auto [H, W] : shapes) {
        Tensor x = random_field(H, W, 2, rng);
        Tensor back = ifft2_real(fft2_real(x));
        REQUIRE(back.same_shape(x));
        for (int64_t i = 0; i < x.numel(); ++i) CHECK(std::fabs(back.flat(i) - x.flat(i)) < 1e-10);
    }
}

TEST_CASE("fft1d inverse round trip on odd length") {
    Rng rng(44);
    const int n = 13;
    std::vector<cplx> z(n), orig;
    for (auto& v : z) v = cplx(rng.normal(), rng.normal());
    orig = z;
    fft1d(z.data(), n, -1);
    fft1d(z.data(), n, +1);
    for (int i = 0; i < n; ++i) CHECK(std::abs(z[static_cast<std::size_t>(i)] / double(n) - orig[static_cast<std::size_t>(i)]) < 1e-11);
}
