#pragma once

#include <chrono>

namespace pvgen {

// Accumulated wall-clock seconds per generation stage.
struct StageTimes {
  double deform = 0.0;
  double synth = 0.0;
  double blur = 0.0;
  double resample = 0.0;
  double io = 0.0;

  double total() const { return deform + synth + blur + resample + io; }
  StageTimes& operator+=(const StageTimes& o) {
    deform += o.deform;
    synth += o.synth;
    blur += o.blur;
    resample += o.resample;
    io += o.io;
    return *this;
  }
};

// Adds elapsed time to *slot on destruction; no-op when slot is null.
class ScopedStage {
 public:
  explicit ScopedStage(double* slot) : slot_(slot), start_(std::chrono::steady_clock::now()) {}
  ~ScopedStage() {
    if (slot_) *slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  ScopedStage(const ScopedStage&) = delete;
  ScopedStage& operator=(const ScopedStage&) = delete;

 private:
  double* slot_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace pvgen
