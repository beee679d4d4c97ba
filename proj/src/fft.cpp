#include "wavefreeze/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace wavefreeze {
namespace {

struct PlanCache {
    std::mutex mutex;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }

    fftw_plan get(const std::vector<int>& shape, int sign) {
        std::lock_guard<std::mutex> lock(mutex);
        auto key = std::make_pair(shape, sign);
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        std::size_t total = 1;
        for (int s : shape) total *= static_cast<std::size_t>(s);
        auto* scratch = fftw_alloc_complex(total);
        fftw_plan plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), scratch, scratch, sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        plans.emplace(key, plan);
        return plan;
    }
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void execute(const std::vector<int>& shape, std::complex<double>* data, int sign) {
    fftw_plan plan = cache().get(shape, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, p, p);
}

}  // namespace

void fft_forward(const std::vector<int>& shape, std::complex<double>* data) { execute(shape, data, FFTW_FORWARD); }

void fft_inverse(const std::vector<int>& shape, std::complex<double>* data) { execute(shape, data, FFTW_BACKWARD); }

}  // namespace wavefreeze
