#pragma once

#include <complex>
#include <vector>

#include "giorom/tensor.hpp"

namespace giorom {

using cplx = std::complex<double>;

// In-place complex DFT of length n (any n >= 1; radix-2 when n is a power of
// two, Bluestein otherwise). sign = -1 forward, +1 inverse. Unnormalized in
// both directions; callers divide by n where needed.
void fft1d(cplx* x, int n, int sign);

// Real-input 2D FFT, half-plane layout. Forward is unnormalized; the inverse
// applies the 1/(H*W) factor.
struct Spectrum2d {
    int h = 0, w = 0, channels = 0;  // w is the FULL spatial width
    int half_w() const { return w / 2 + 1; }
    // row-major [h, half_w, channels]
    std::vector<cplx> coeff;
    const cplx& at(int r, int c, int ch) const {
        return coeff[static_cast<std::size_t>((r * half_w() + c) * channels + ch)];
    }
    cplx& at(int r, int c, int ch) {
        return coeff[static_cast<std::size_t>((r * half_w() + c) * channels + ch)];
    }
};

// x has shape [H, W, C].
Spectrum2d fft2_real(const Tensor& x);
Tensor ifft2_real(const Spectrum2d& s);

// Full-plane complex 2D FFT helpers used by the spectral convolution.
// Layout: row-major [H, W, C]. Unnormalized forward, sign=-1; the inverse
// (sign=+1) is also unnormalized.
void fft2_full(std::vector<cplx>& z, int h, int w, int channels, int sign);

}  // namespace giorom
