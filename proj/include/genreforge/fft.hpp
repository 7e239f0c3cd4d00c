#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace genreforge {

// Iterative radix-2 FFT with precomputed twiddle and bit-reversal tables.
// Immutable after construction; forward() is const, so one plan can be
// shared across preprocessing threads.
class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const { return n_; }

    // In-place forward transform; buf.size() must equal size().
    void forward(std::vector<std::complex<double>>& buf) const;

private:
    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> roots_;  // exp(-2*pi*i*k/n), k in [0, n/2)
};

}  // namespace genreforge
