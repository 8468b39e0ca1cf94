#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ergolab {

// One closed-form example; `run` returns true when it holds.
struct SelfCheck {
  std::string name;
  std::function<bool()> run;
};

// The closed-form examples of every module, in module order.
std::vector<SelfCheck> selftest_checks();

}  // namespace ergolab
