#pragma once

#include <functional>
#include <string>

namespace osr {

// Reduced oracle suite; one "PASS <name> ..." or "FAIL <name> ..." line per
// check. Returns the number of failures.
int run_selftest(const std::function<void(const std::string&)>& line);

}  // namespace osr
