#include "spectreg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace spectreg::fft {

namespace {

// FFTW planning is not thread-safe; executing a finished plan is.
class PlanCache {
  public:
    ~PlanCache() {
        for (auto &[key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(const Extents &dims, Direction dir) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto key = std::make_pair(dims, dir);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        std::vector<int> n(dims.begin(), dims.end());
        const auto count = static_cast<std::size_t>(product(dims));
        auto *scratch = fftw_alloc_complex(count);
        const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
        auto plan = fftw_plan_dft(static_cast<int>(n.size()), n.data(), scratch, scratch, sign,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(scratch);
        if (plan == nullptr) throw std::runtime_error("FFTW failed to plan a transform of " + format_extents(dims));
        plans_.emplace(std::move(key), plan);
        return plan;
    }

  private:
    std::mutex mutex_;
    std::map<std::pair<Extents, Direction>, fftw_plan> plans_;
};

PlanCache &cache() {
    static PlanCache instance;
    return instance;
}

} // namespace

void transform(std::span<cplx> data, const Extents &dims, Direction dir) {
    if (static_cast<std::int64_t>(data.size()) != product(dims)) {
        throw std::invalid_argument("transform buffer size does not match " + format_extents(dims));
    }
    auto plan = cache().get(dims, dir);
    auto *ptr = reinterpret_cast<fftw_complex *>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

} // namespace spectreg::fft
