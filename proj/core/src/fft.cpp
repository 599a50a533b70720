#include "prism/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace prism::fft {

namespace {

// FFTW planning is not thread-safe; executing distinct plans is.
// Plans are created once per (size, direction) with FFTW_UNALIGNED so they
// can run in-place on any caller buffer.
class PlanCache {
  public:
    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> tmp(n);
        auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw std::runtime_error("fftw plan creation failed");
        plans_[key] = plan;
        return plan;
    }

  private:
    std::mutex mu_;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(std::span<cplx> x, int sign) {
    if (x.empty()) throw std::invalid_argument("fft: empty input");
    fftw_plan plan = cache().get(x.size(), sign);
    auto* p = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void forward(std::span<cplx> x) { run(x, FFTW_FORWARD); }

void inverse(std::span<cplx> x) {
    run(x, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= inv;
}

void backward_raw(std::span<cplx> x) { run(x, FFTW_BACKWARD); }

void forward(std::vector<cplx>& x) { forward(std::span<cplx>(x)); }
void inverse(std::vector<cplx>& x) { inverse(std::span<cplx>(x)); }
void backward_raw(std::vector<cplx>& x) { backward_raw(std::span<cplx>(x)); }

double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const auto half = n / 2;
    const double df = sample_rate / static_cast<double>(n);
    if (k <= half) return df * static_cast<double>(k);
    return df * (static_cast<double>(k) - static_cast<double>(n));
}

}  // namespace prism::fft
