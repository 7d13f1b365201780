#ifndef BRACKETFLOW_VERIFY_HPP
#define BRACKETFLOW_VERIFY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bracketflow {

/// Outcome of one cross-module acceptance check.
struct CriterionResult {
  int id{0};
  std::string name;
  bool passed{false};      // numeric check and runtime budget both met
  bool within_time{true};
  std::string detail;      // measured quantities against their tolerances
  double seconds{0};
  double time_limit{0};    // 0 when no budget applies
};

enum class VerifyMode { Quick, Full };

struct VerifyOptions {
  VerifyMode mode{VerifyMode::Full};
  /// Multiplies every numeric tolerance. 1 is the stated suite; values below
  /// 1 tighten it (0 makes every check fail, used to exercise the harness).
  double tolerance_scale{1.0};
  std::uint64_t seed{20240601};
  unsigned workers{1};
  std::vector<int> only;  // empty: all criteria 1..10
};

inline constexpr int kCriterionCount = 10;

CriterionResult run_criterion(int id, const VerifyOptions& options);

/// Runs the selected criteria in order, reporting each result as it finishes.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "[PASS] 1 name (0.12 s / 1 s): detail"
std::string format_result_line(const CriterionResult& r);

}  // namespace bracketflow

#endif  // BRACKETFLOW_VERIFY_HPP
