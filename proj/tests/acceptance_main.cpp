// Acceptance suite: runs criteria 1-10 at their stated tolerances and runtime
// budgets, one PASS/FAIL line each. Exit status 0 only when all pass.
//
//   acceptance [--quick] [--seed N] [--workers N]

#include "bracketflow/verify.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  bracketflow::VerifyOptions options;
  bool quick = false;
  CLI::App app{"acceptance criteria 1-10", "acceptance"};
  app.add_flag("--quick", quick, "reduced path counts for the SDE criterion");
  app.add_option("--seed", options.seed, "base random seed");
  app.add_option("--workers", options.workers, "threads for SDE runs");
  CLI11_PARSE(app, argc, argv);
  options.mode = quick ? bracketflow::VerifyMode::Quick : bracketflow::VerifyMode::Full;

  int failed = 0;
  bracketflow::run_acceptance(options, [&](const bracketflow::CriterionResult& r) {
    std::cout << bracketflow::format_result_line(r) << std::endl;
    if (!r.passed) ++failed;
  });
  std::cout << (failed == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED: " + std::to_string(failed) + " of 10") << std::endl;
  return failed == 0 ? 0 : 1;
}
