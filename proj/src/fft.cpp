#include "spmlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace spmlab {

namespace {

std::mutex g_plan_mutex;

struct PlanCache {
    std::map<std::pair<int, int>, fftw_plan> plans;
    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
        fftw_cleanup();
    }
};

fftw_plan plan_for(int d, int n) {
    static PlanCache cache;
    auto& plans = cache.plans;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = plans.find({d, n});
    if (it != plans.end()) return it->second;
    // Template buffers just for planning; execution uses the new-array API.
    const std::size_t size = d == 1 ? n : static_cast<std::size_t>(n) * n;
    fftw_complex* buf = fftw_alloc_complex(size);
    fftw_plan plan = d == 1 ? fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED)
                            : fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans.emplace(std::make_pair(d, n), plan);
    return plan;
}

}  // namespace

void inverse_fft(const std::complex<double>* spec, int d, int n, double* out) {
    if (d != 1 && d != 2) throw std::invalid_argument("inverse_fft: d must be 1 or 2");
    const std::size_t size = d == 1 ? n : static_cast<std::size_t>(n) * n;
    std::vector<std::complex<double>> work(spec, spec + size);
    fftw_plan plan = plan_for(d, n);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()),
                     reinterpret_cast<fftw_complex*>(work.data()));
    for (std::size_t i = 0; i < size; ++i) out[i] = work[i].real();
}

}  // namespace spmlab
