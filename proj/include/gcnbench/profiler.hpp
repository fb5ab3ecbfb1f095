#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <string_view>

namespace gcnbench {

enum class KernelCategory : std::size_t { SpMM = 0, DenseMM, Glue, Offload, Sampling };

inline constexpr std::size_t kNumCategories = 5;
inline constexpr std::array<KernelCategory, kNumCategories> kAllCategories{
    KernelCategory::SpMM, KernelCategory::DenseMM, KernelCategory::Glue,
    KernelCategory::Offload, KernelCategory::Sampling};

std::string_view to_string(KernelCategory c);
KernelCategory parse_category(std::string_view name);

// Accumulates wall time per category. Not thread-safe: kernels record from
// the calling thread only, around their (possibly parallel) bodies.
class Profiler {
 public:
  using Clock = std::chrono::steady_clock;

  void add(KernelCategory c, double seconds) {
    seconds_[static_cast<std::size_t>(c)] += seconds;
  }
  double seconds(KernelCategory c) const { return seconds_[static_cast<std::size_t>(c)]; }
  const std::array<double, kNumCategories>& all() const { return seconds_; }
  void reset() { seconds_.fill(0.0); }

 private:
  std::array<double, kNumCategories> seconds_{};
};

class ScopedTimer {
 public:
  ScopedTimer(Profiler* profiler, KernelCategory c)
      : profiler_(profiler), category_(c), start_(Profiler::Clock::now()) {}
  ~ScopedTimer() {
    if (profiler_ != nullptr) {
      const std::chrono::duration<double> d = Profiler::Clock::now() - start_;
      profiler_->add(category_, d.count());
    }
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  Profiler* profiler_;
  KernelCategory category_;
  Profiler::Clock::time_point start_;
};

}  // namespace gcnbench
