// Runs the twelve acceptance criteria and prints one PASS/FAIL line per criterion.
#include <cstdio>
#include <cstdlib>
#include <exception>

#include "byzgossip/verify.hpp"

int main(int argc, char** argv) {
  byzgossip::VerifyOptions opts;
  opts.config_dir = BYZGOSSIP_SOURCE_DIR "/configs";
  if (argc > 1) opts.trials = static_cast<std::size_t>(std::strtoull(argv[1], nullptr, 10));
  byzgossip::Verifier verifier(opts);
  int failed = 0;
  for (int id = 1; id <= 12; ++id) {
    try {
      const byzgossip::CriterionResult r = verifier.run(id);
      std::printf("%s criterion %2d  %-48s %s (%.1fs)\n", r.passed ? "PASS" : "FAIL", id, r.title.c_str(),
                  r.detail.c_str(), r.seconds);
      failed += !r.passed;
    } catch (const std::exception& e) {
      std::printf("FAIL criterion %2d  error: %s\n", id, e.what());
      ++failed;
    }
    std::fflush(stdout);
  }
  std::printf("%d of 12 criteria passed\n", 12 - failed);
  return failed == 0 ? 0 : 1;
}
