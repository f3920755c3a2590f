#include "spinflow/types.hpp"

#include <atomic>

namespace spinflow {

namespace {
std::atomic<std::size_t> g_budget{std::size_t{1} << 22};
}

std::size_t memory_budget() { return g_budget.load(std::memory_order_relaxed); }

void set_memory_budget(std::size_t max_dim) {
  g_budget.store(max_dim, std::memory_order_relaxed);
}

void check_dimension(std::size_t dim, const std::string& what) {
  if (dim > memory_budget()) {
    throw DimensionError(what + ": Hilbert dimension " + std::to_string(dim) +
                         " exceeds the memory budget of " + std::to_string(memory_budget()) +
                         " amplitudes; use a smaller ladder or raise --max-dim");
  }
}

} // namespace spinflow
