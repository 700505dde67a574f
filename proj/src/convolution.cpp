#include "serfati/convolution.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "serfati/errors.hpp"

namespace serfati {

namespace {

// the FFTW planner is not reentrant
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

int fft_friendly_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

struct ToeplitzConvolver::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::size_t real_size = 0;
    std::size_t complex_size = 0;
};

namespace {

struct RealBuf {
    double* p;
    explicit RealBuf(std::size_t n) : p(fftw_alloc_real(n)) {
        if (!p) throw std::bad_alloc();
    }
    ~RealBuf() { fftw_free(p); }
};

struct ComplexBuf {
    fftw_complex* p;
    explicit ComplexBuf(std::size_t n) : p(fftw_alloc_complex(n)) {
        if (!p) throw std::bad_alloc();
    }
    ~ComplexBuf() { fftw_free(p); }
};

}  // namespace

ToeplitzConvolver::ToeplitzConvolver(int nx, int ny)
    : nx_(nx), ny_(ny), px_(fft_friendly_size(2 * nx - 1)), py_(fft_friendly_size(2 * ny - 1)),
      plans_(std::make_unique<Plans>()) {
    if (nx < 1 || ny < 1) throw ConfigError("convolution box must be non-empty");
    plans_->real_size = static_cast<std::size_t>(px_) * py_;
    plans_->complex_size = static_cast<std::size_t>(py_) * (px_ / 2 + 1);
    RealBuf r(plans_->real_size);
    ComplexBuf c(plans_->complex_size);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans_->forward = fftw_plan_dft_r2c_2d(py_, px_, r.p, c.p, FFTW_ESTIMATE);
    plans_->backward = fftw_plan_dft_c2r_2d(py_, px_, c.p, r.p, FFTW_ESTIMATE);
    if (!plans_->forward || !plans_->backward) throw ConfigError("FFT planning failed");
}

ToeplitzConvolver::~ToeplitzConvolver() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plans_->forward) fftw_destroy_plan(plans_->forward);
    if (plans_->backward) fftw_destroy_plan(plans_->backward);
}

int ToeplitzConvolver::add_kernel(const std::function<double(int, int)>& k) {
    RealBuf r(plans_->real_size);
    std::fill(r.p, r.p + plans_->real_size, 0.0);
    for (int dj = -(ny_ - 1); dj < ny_; ++dj)
        for (int di = -(nx_ - 1); di < nx_; ++di) {
            int a = (di + px_) % px_, b = (dj + py_) % py_;
            r.p[static_cast<std::size_t>(b) * px_ + a] = k(di, dj);
        }
    ComplexBuf c(plans_->complex_size);
    fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
    Spectrum s(plans_->complex_size);
    std::copy_n(reinterpret_cast<const std::complex<double>*>(c.p), plans_->complex_size, s.data());
    kernels_.push_back(std::move(s));
    return static_cast<int>(kernels_.size()) - 1;
}

ToeplitzConvolver::Spectrum ToeplitzConvolver::transform(const std::vector<double>& src) const {
    if (src.size() != static_cast<std::size_t>(nx_) * ny_)
        throw ConfigError("convolution source has the wrong size");
    RealBuf r(plans_->real_size);
    std::fill(r.p, r.p + plans_->real_size, 0.0);
    for (int j = 0; j < ny_; ++j)
        std::copy_n(&src[static_cast<std::size_t>(j) * nx_], nx_, r.p + static_cast<std::size_t>(j) * px_);
    ComplexBuf c(plans_->complex_size);
    fftw_execute_dft_r2c(plans_->forward, r.p, c.p);
    Spectrum s(plans_->complex_size);
    std::copy_n(reinterpret_cast<const std::complex<double>*>(c.p), plans_->complex_size, s.data());
    return s;
}

ToeplitzConvolver::Spectrum ToeplitzConvolver::zero_spectrum() const {
    return Spectrum(plans_->complex_size);
}

void ToeplitzConvolver::accumulate(Spectrum& acc, int kernel, const Spectrum& s) const {
    const Spectrum& k = kernels_.at(static_cast<std::size_t>(kernel));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += k[i] * s[i];
}

void ToeplitzConvolver::inverse(const Spectrum& acc, std::vector<double>& out) const {
    ComplexBuf c(plans_->complex_size);
    std::copy_n(acc.data(), plans_->complex_size, reinterpret_cast<std::complex<double>*>(c.p));
    RealBuf r(plans_->real_size);
    fftw_execute_dft_c2r(plans_->backward, c.p, r.p);
    double scale = 1.0 / static_cast<double>(plans_->real_size);
    out.resize(static_cast<std::size_t>(nx_) * ny_);
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            out[static_cast<std::size_t>(j) * nx_ + i] = scale * r.p[static_cast<std::size_t>(j) * px_ + i];
}

}  // namespace serfati
