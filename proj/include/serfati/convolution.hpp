#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace serfati {

/// Linear (non-periodic) discrete convolution on an nx x ny node box through
/// zero-padded real FFTs:
///   out(i, j) = sum over (i', j') of k(i - i', j - j') src(i', j').
/// Kernels are registered once as offset functions and kept as spectra.
class ToeplitzConvolver {
public:
    using Spectrum = std::vector<std::complex<double>>;

    ToeplitzConvolver(int nx, int ny);
    ~ToeplitzConvolver();
    ToeplitzConvolver(const ToeplitzConvolver&) = delete;
    ToeplitzConvolver& operator=(const ToeplitzConvolver&) = delete;

    /// Samples k(di, dj) for |di| < nx, |dj| < ny and returns its id.
    int add_kernel(const std::function<double(int, int)>& k);

    /// Spectrum of a node array (row-major, i fastest).
    Spectrum transform(const std::vector<double>& src) const;
    /// acc += spectrum(kernel) * s.
    void accumulate(Spectrum& acc, int kernel, const Spectrum& s) const;
    Spectrum zero_spectrum() const;
    /// Back to node values; writes nx * ny entries.
    void inverse(const Spectrum& acc, std::vector<double>& out) const;

    int padded_x() const { return px_; }
    int padded_y() const { return py_; }

private:
    struct Plans;
    int nx_, ny_, px_, py_;
    std::unique_ptr<Plans> plans_;
    std::vector<Spectrum> kernels_;
};

/// Smallest 2^a 3^b 5^c not below n.
int fft_friendly_size(int n);

}  // namespace serfati
