// Acceptance suite: runs every verification criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exits nonzero if any fails.

#include <cstdio>
#include <filesystem>

#include "prionlab/verify.hpp"

int main(int argc, char** argv) {
  const uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1234;
  const std::filesystem::path work = "acceptance_work";
  std::filesystem::remove_all(work);

  std::vector<prionlab::CriterionResult> results;
  try {
    results = prionlab::run_suite("all", seed, work);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance suite aborted: %s\n", e.what());
    return 99;
  }

  int failures = 0;
  for (const auto& c : results) {
    std::printf("[%s] %2d. %-48s %s (%.2fs)\n", c.pass ? "PASS" : "FAIL", c.index,
                c.name.c_str(), c.detail.c_str(), c.seconds);
    if (!c.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures;
}
