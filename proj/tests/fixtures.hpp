#pragma once

#include <string>

#include "jssp/instance.hpp"

namespace fixtures {

// Job0: (M0,3) -> (M1,2); Job1: (M1,2) -> (M0,4)
inline jssp::Instance tiny() {
  return jssp::parse_instance("2 2\n0 3 1 2\n1 2 0 4\n", jssp::InstanceFormat::Standard, "tiny");
}

// Dispatching O00, O10, O11, O20 and then O21 places O21 on M1 ahead of O11,
// which was scheduled at 7 and moves to 11.
inline jssp::Instance push_example() {
  return jssp::make_instance("push", 3, {{1, 0, 2}, {0, 1, 2}, {2, 1, 0}}, {{2, 3, 2}, {7, 3, 2}, {5, 6, 2}});
}

inline std::string data(const std::string& rel) { return std::string(JSSP_DATA_DIR) + "/" + rel; }

}  // namespace fixtures
