#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "hcpick/tracker.hpp"

namespace hcpick {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Canonical key=value serialization of the tracker settings, shortest
/// round-trip float formatting via max_digits10.
inline std::string canonical(const TrackSettings& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "initial_dt=" << s.initial_dt << ";min_dt=" << s.min_dt << ";max_dt=" << s.max_dt
     << ";max_steps=" << s.max_steps << ";corrector_tolerance=" << s.corrector_tolerance
     << ";max_corrector_iters=" << s.max_corrector_iters << ";step_growth=" << s.step_growth
     << ";successes_before_growth=" << s.successes_before_growth << ";step_shrink=" << s.step_shrink
     << ";success_distance_sq=" << s.success_distance_sq << ";divergence_norm=" << s.divergence_norm
     << ";imaginary_tolerance=" << s.imaginary_tolerance << ";polish_iters=" << s.polish_iters
     << ";polish_floor=" << s.polish_floor;
  return os.str();
}

inline std::uint64_t settings_hash(const TrackSettings& s) { return fnv1a(canonical(s)); }

}  // namespace hcpick
