#ifndef HORIZON_CHECKPOINT_HPP
#define HORIZON_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "horizon/mtpu.hpp"
#include "horizon/net.hpp"

namespace horizon {

enum class ModelMode : std::uint8_t {
  Single = 0,     // one pooled network
  Mtpu = 1,       // shared trunk + one head per period
  PerPeriod = 2,  // one independent network per period
};

// Trained-model container. The file layout is a fixed little-endian
// header (magic, version, mode, seed, epsilon, periods, vocabulary
// min_count) followed by one block per network: dims, output flag, then
// 32-bit float parameters in layer order (weights row-major by input
// index, then biases). Loading and re-saving a file reproduces it byte
// for byte.
struct Checkpoint {
  ModelMode mode = ModelMode::Single;
  std::uint64_t seed = 0;
  double epsilon = 1e-5;
  std::uint32_t periods = 1;
  std::uint32_t min_count = 1;
  // Single: {net}; Mtpu: {trunk, head_1..head_T}; PerPeriod: {net_1..net_T}
  std::vector<Mlp> nets;

  MtpuModel to_mtpu() const;
  static Checkpoint from_mtpu(const MtpuModel& model, std::uint64_t seed,
                              double epsilon, std::uint32_t min_count);
};

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace horizon

#endif  // HORIZON_CHECKPOINT_HPP
