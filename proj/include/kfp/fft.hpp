#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace kfp {

/// Cached FFTW c2c plans for cubic grids, keyed by (dim, n).  Plans are
/// created once under a lock; execution on caller buffers is thread-safe.
/// Forward applies the unnormalized DFT with kernel e^{-i k.x}; inverse the
/// unnormalized e^{+i k.x} sum.
class FftPlan {
  public:
    static const FftPlan& get(int dim, int n) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_pair(dim, n);
        auto it = cache.find(key);
        if (it == cache.end())
            it = cache.emplace(key, std::unique_ptr<FftPlan>(new FftPlan(dim, n)))
                     .first;
        return *it->second;
    }

    void forward(const std::complex<double>* in,
                 std::complex<double>* out) const {
        execute(fwd_, in, out);
    }
    void inverse(const std::complex<double>* in,
                 std::complex<double>* out) const {
        execute(bwd_, in, out);
    }

    ~FftPlan() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

  private:
    FftPlan(int dim, int n) {
        if (dim < 1 || dim > 3 || n < 2)
            throw std::invalid_argument("FftPlan: bad grid shape");
        std::size_t total = 1;
        for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(n);
        std::vector<std::complex<double>> a(total), b(total);
        std::vector<int> dims(dim, n);
        fwd_ = fftw_plan_dft(dim, dims.data(),
                             reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft(dim, dims.data(),
                             reinterpret_cast<fftw_complex*>(a.data()),
                             reinterpret_cast<fftw_complex*>(b.data()),
                             FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("FftPlan: planning failed");
    }

    // Out-of-place c2c transforms preserve their input.
    void execute(fftw_plan p, const std::complex<double>* in,
                 std::complex<double>* out) const {
        fftw_execute_dft(
            p,
            reinterpret_cast<fftw_complex*>(
                const_cast<std::complex<double>*>(in)),
            reinterpret_cast<fftw_complex*>(out));
    }

    fftw_plan fwd_;
    fftw_plan bwd_;
};

}  // namespace kfp
