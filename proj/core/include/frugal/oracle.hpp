#ifndef FRUGAL_ORACLE_HPP
#define FRUGAL_ORACLE_HPP

#include <vector>

#include "frugal/chain.hpp"

namespace frugal {

/// One step of an optimal policy: the control action plus either the repeat
/// count k (DMSOA solver) or the measure bit a_m (OSMBOA solver).
struct OracleDecision {
  int a_c = 0;
  int k_or_am = 0;
};

struct OracleSolution {
  /// Return of the recorded decision sequence, accumulated forward per base
  /// step exactly the way the wrapper accounts an episode.
  double optimal_return = 0.0;
  /// Backward-induction optimum; equals optimal_return up to accumulation
  /// order (|difference| <= 1e-9 on enumerable instances).
  double dp_value = 0.0;
  std::vector<OracleDecision> decisions;
  int measured_steps = 0;
  int unmeasured_steps = 0;
  double ratio = 0.0;  // unmeasured / measured
};

/// Exact optimum over (control, k)-decision sequences by backward induction
/// over (state, steps remaining). Episode end forces the final measurement,
/// matching the wrapper. Throws std::invalid_argument when n * horizon > 1e6.
OracleSolution solve_dmsoa(const ChainParams& chain, double c, double gamma, int K,
                           int horizon);

/// Exact optimum over per-step (control, measure) tuples by backward
/// induction over the augmented state (true state, memory payload, freshness,
/// steps remaining). allow_skip=false restricts to always-measure policies.
OracleSolution solve_osmboa(const ChainParams& chain, double c, double gamma, int horizon,
                            bool allow_skip = true);

struct SweepRow {
  double c = 0.0;
  double ratio = 0.0;
  double optimal_return = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  bool ratio_nondecreasing = true;
};

/// One oracle solve per intrinsic-bonus level; reports whether the optimal
/// skip ratio is monotone in c over the grid.
SweepResult sweep_intrinsic_dmsoa(const ChainParams& chain, double gamma, int K, int horizon,
                                  const std::vector<double>& c_grid);
SweepResult sweep_intrinsic_osmboa(const ChainParams& chain, double gamma, int horizon,
                                   const std::vector<double>& c_grid);

}  // namespace frugal

#endif  // FRUGAL_ORACLE_HPP
