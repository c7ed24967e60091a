#pragma once

#include <cstdint>
#include <iosfwd>

namespace safex::tools {

struct SelftestReport {
  int cases = 0;
  double max_rel_mean = 0.0;
  double max_rel_var = 0.0;
  int invariant_failures = 0;
  bool pass = false;
};

/// Random GP instances against a dense LU solve of the posterior formulas, plus
/// variance range and kernel smoothness checks.
SelftestReport gp_selftest(int cases, std::uint64_t seed, std::ostream& log);

}  // namespace safex::tools
