#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace preavg {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_grid_error : error { using error::error; };
struct misaligned_grid_error : error { using error::error; };
struct numeric_error : error { using error::error; };
struct index_error : error { using error::error; };
struct invalid_window_error : error { using error::error; };
struct degenerate_variance_error : error { using error::error; };
struct simulation_diverged_error : error { using error::error; };
struct unsupported_model_error : error { using error::error; };
struct invalid_expansion_error : error { using error::error; };
struct study_invalid_error : error { using error::error; };
struct parse_error : error { using error::error; };

// Raised when a Monte Carlo path produces a non-finite functional; carries
// the stream key so the offending path can be replayed.
struct tainted_replication_error : error {
  tainted_replication_error(const std::string& what, std::uint64_t master,
                            std::uint32_t rep)
      : error(what), master_seed(master), replication(rep) {}
  std::uint64_t master_seed;
  std::uint32_t replication;
};

}  // namespace preavg
