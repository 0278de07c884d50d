#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace byzgossip {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  nlohmann::json metrics;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 20240611;
  /// Directory holding the experiment fixtures re-run by the determinism check.
  std::string config_dir;
};

const std::vector<std::string>& suite_names();
/// Criterion ids covered by a suite; throws Config on an unknown name.
std::vector<int> suite_criteria(std::string_view suite);

/// Evaluates acceptance criteria 1..12. Runs shared between criteria (the
/// randomized property suites feed both their own criterion and the
/// error-term criterion) are computed once per Verifier.
class Verifier {
 public:
  explicit Verifier(VerifyOptions opts = {});

  CriterionResult run(int id);
  std::vector<CriterionResult> run_suite(std::string_view suite);

  struct PropertyStats {
    std::size_t trials = 0;
    std::size_t rounds_checked = 0;
    std::size_t alpha_violations = 0;
    std::size_t lambda_violations = 0;
    std::size_t error_violations = 0;
    double worst_alpha_ratio = 0.0;   // max spread / (alpha Var)
    double worst_lambda_ratio = 0.0;  // max shift / (lambda Var)
    double worst_error_ratio = 0.0;   // max ||E||^2 / bound
    std::map<std::string, std::size_t> best_attack_counts;
  };

  /// Randomized single-round suite for CGPlus or NNA.
  const PropertyStats& property_suite(bool nna);

 private:
  VerifyOptions opts_;
  std::optional<PropertyStats> cg_;
  std::optional<PropertyStats> nna_;
};

nlohmann::json to_json(const CriterionResult& r);

}  // namespace byzgossip
