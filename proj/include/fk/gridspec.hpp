#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fk {

// Epsilon-grid spellings: a comma list ("0,0.05,0.1"),
// "lin:start:stop:steps" (inclusive, linear) or "log:start:stop:steps"
// (inclusive, log-spaced, start > 0).
std::vector<double> parse_eps_grid(const std::string& spec);

// Comma list of non-negative integers ("1,3,5").
std::vector<std::size_t> parse_index_list(const std::string& spec);

}  // namespace fk
