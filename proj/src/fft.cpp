#include "giorom/fft.hpp"

#include <cmath>

namespace giorom {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_pow2(cplx* x, int n, int sign) {
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const cplx u = x[i + k];
                const cplx v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp-z transform for arbitrary lengths.
void fft_bluestein(cplx* x, int n, int sign) {
    const int m = next_pow2(2 * n - 1);
    std::vector<cplx> chirp(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // i^2 mod 2n keeps the angle argument small
        const long long i2 = (static_cast<long long>(i) * i) % (2LL * n);
        const double ang = sign * M_PI * static_cast<double>(i2) / n;
        chirp[static_cast<std::size_t>(i)] = cplx(std::cos(ang), std::sin(ang));
    }
    std::vector<cplx> a(static_cast<std::size_t>(m), cplx(0, 0));
    std::vector<cplx> b(static_cast<std::size_t>(m), cplx(0, 0));
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = x[i] * chirp[static_cast<std::size_t>(i)];
    b[0] = std::conj(chirp[0]);
    for (int i = 1; i < n; ++i) {
        b[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(m - i)] = std::conj(chirp[static_cast<std::size_t>(i)]);
    }
    fft_pow2(a.data(), m, -1);
    fft_pow2(b.data(), m, -1);
    for (int i = 0; i < m; ++i) a[static_cast<std::size_t>(i)] *= b[static_cast<std::size_t>(i)];
    fft_pow2(a.data(), m, +1);
    const double inv_m = 1.0 / m;
    for (int i = 0; i < n; ++i) x[i] = a[static_cast<std::size_t>(i)] * inv_m * chirp[static_cast<std::size_t>(i)];
}

}  // namespace

void fft1d(cplx* x, int n, int sign) {
    if (n == 1) return;
    if (is_pow2(n)) {
        fft_pow2(x, n, sign);
    } else {
        fft_bluestein(x, n, sign);
    }
}

void fft2_full(std::vector<cplx>& z, int h, int w, int channels, int sign) {
    std::vector<cplx> line(static_cast<std::size_t>(std::max(h, w)));
    // rows
    for (int ch = 0; ch < channels; ++ch) {
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) line[static_cast<std::size_t>(c)] = z[static_cast<std::size_t>((r * w + c) * channels + ch)];
            fft1d(line.data(), w, sign);
            for (int c = 0; c < w; ++c) z[static_cast<std::size_t>((r * w + c) * channels + ch)] = line[static_cast<std::size_t>(c)];
        }
        // columns
        for (int c = 0; c < w; ++c) {
            for (int r = 0; r < h; ++r) line[static_cast<std::size_t>(r)] = z[static_cast<std::size_t>((r * w + c) * channels + ch)];
            fft1d(line.data(), h, sign);
            for (int r = 0; r < h; ++r) z[static_cast<std::size_t>((r * w + c) * channels + ch)] = line[static_cast<std::size_t>(r)];
        }
    }
}

Spectrum2d fft2_real(const Tensor& x) {
    if (x.ndim() != 3) throw ShapeError("fft2_real expects [H, W, C], got " + x.shape_str());
    const int h = static_cast<int>(x.extent(0));
    const int w = static_cast<int>(x.extent(1));
    const int ch = static_cast<int>(x.extent(2));
    std::vector<cplx> z(static_cast<std::size_t>(h) * w * ch);
    for (int64_t i = 0; i < x.numel(); ++i) z[static_cast<std::size_t>(i)] = cplx(x.flat(i), 0.0);
    fft2_full(z, h, w, ch, -1);
    Spectrum2d s;
    s.h = h;
    s.w = w;
    s.channels = ch;
    const int hw = s.half_w();
    s.coeff.resize(static_cast<std::size_t>(h) * hw * ch);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < hw; ++c)
            for (int k = 0; k < ch; ++k)
                s.at(r, c, k) = z[static_cast<std::size_t>((r * w + c) * ch + k)];
    return s;
}

Tensor ifft2_real(const Spectrum2d& s) {
    const int h = s.h, w = s.w, ch = s.channels;
    const int hw = s.half_w();
    std::vector<cplx> z(static_cast<std::size_t>(h) * w * ch, cplx(0, 0));
    // Hermitian extension of the stored half-plane: Z[(H-r)%H, W-c] = conj(Z[r, c]).
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < hw; ++c) {
            for (int k = 0; k < ch; ++k) {
                z[static_cast<std::size_t>((r * w + c) * ch + k)] = s.at(r, c, k);
            }
        }
        for (int c = hw; c < w; ++c) {
            const int mr = (h - r) % h;
            const int mc = w - c;
            for (int k = 0; k < ch; ++k) {
                z[static_cast<std::size_t>((r * w + c) * ch + k)] = std::conj(s.at(mr, mc, k));
            }
        }
    }
    fft2_full(z, h, w, ch, +1);
    Tensor out({h, w, ch});
    double* o = out.mut_data();
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (int64_t i = 0; i < out.numel(); ++i) o[i] = z[static_cast<std::size_t>(i)].real() * scale;
    return out;
}

}  // namespace giorom
