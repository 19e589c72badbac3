#include <algorithm>
#include <iostream>
#include <thread>

#include "cutoff/verify/acceptance.hpp"

// One line per criterion; exits nonzero if any criterion or invariant fails.
int main() {
  cutoff::acceptance::Options options;
  options.seed = 1;
  options.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto report = cutoff::acceptance::run_full_acceptance(options);
  std::cout << report.text() << std::flush;
  return report.all_passed() ? 0 : 1;
}
