#ifndef HORIZON_SRC_BATCH_SAMPLER_HPP
#define HORIZON_SRC_BATCH_SAMPLER_HPP

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "horizon/random.hpp"

namespace horizon::detail {

// Cyclic minibatch source over an index pool: hands out fixed-size batches
// from a shuffled order, reshuffling whenever the pool wraps.
class BatchSampler {
 public:
  BatchSampler(std::size_t pool_size, std::uint64_t seed)
      : order_(pool_size), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    shuffle_inplace(order_, rng_);
  }

  void fill(std::size_t batch, std::vector<std::size_t>& out) {
    out.clear();
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      if (cursor_ == order_.size()) {
        shuffle_inplace(order_, rng_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
};

}  // namespace horizon::detail

#endif  // HORIZON_SRC_BATCH_SAMPLER_HPP
