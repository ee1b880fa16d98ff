// Acceptance gate: runs every reproduction recipe and prints one
// pass/fail line per criterion. Nonzero exit if any fails.

#include <cstdio>

#include "chanem/repro.hpp"

int main() {
  int failures = 0;
  for (const auto& r : chanem::repro::run_all()) {
    std::printf("[%s] criterion %2d %-28s (%.2f s)%s%s\n",
                r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                r.detail.empty() ? "" : " — ", r.detail.c_str());
    if (!r.passed) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
