#include "frugal/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace frugal {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int chain_step(int s, int a) { return a == 1 ? s + 1 : (s > 0 ? s - 1 : 0); }

void check_size(const ChainParams& chain, int horizon) {
  if (chain.n < 2) throw std::invalid_argument("oracle: chain needs n >= 2");
  if (horizon < 1) throw std::invalid_argument("oracle: horizon must be >= 1");
  if (static_cast<long long>(chain.n) * horizon > 1000000)
    throw std::invalid_argument("oracle: instance too large (n * horizon > 1e6)");
}

}  // namespace

OracleSolution solve_dmsoa(const ChainParams& chain, double c, double gamma, int K,
                           int horizon) {
  check_size(chain, horizon);
  if (K < 1) throw std::invalid_argument("oracle: K must be >= 1");
  const int n = chain.n;
  const int goal = n - 1;
  const double r_ext = chain.step_reward;

  // V[t][s]: best return with t base steps remaining from non-terminal s.
  std::vector<std::vector<double>> V(horizon + 1, std::vector<double>(n, 0.0));

  // simulate one decision; returns (aggregated reward, steps used, end state, terminal)
  struct Sim {
    double reward;
    double disc;
    int steps;
    int end_state;
    bool terminal;
  };
  auto simulate = [&](int s, int a_c, int k, int t_remaining) {
    Sim sim{0.0, 1.0, 0, s, false};
    for (int i = 1; i <= k; ++i) {
      sim.end_state = chain_step(sim.end_state, a_c);
      ++sim.steps;
      sim.terminal = sim.end_state == goal;
      const bool truncated = sim.steps == t_remaining;
      const bool last = i == k || sim.terminal || truncated;
      sim.reward += sim.disc * (last ? r_ext : c);
      sim.disc *= gamma;
      if (last) break;
    }
    return sim;
  };

  for (int t = 1; t <= horizon; ++t) {
    for (int s = 0; s < goal; ++s) {
      double best = kNegInf;
      for (int a_c = 0; a_c < 2; ++a_c) {
        for (int k = 1; k <= K; ++k) {
          const Sim sim = simulate(s, a_c, k, t);
          double v = sim.reward;
          if (!sim.terminal && sim.steps < t) v += sim.disc * V[t - sim.steps][sim.end_state];
          if (v > best) best = v;
        }
      }
      V[t][s] = best;
    }
  }

  OracleSolution sol;
  sol.dp_value = V[horizon][0];

  // greedy trace, accumulating forward per base step like the wrapper does
  int s = 0, t = horizon;
  double disc = 1.0;
  while (s != goal && t > 0) {
    double best = kNegInf;
    int best_a = 0, best_k = 1;
    for (int a_c = 0; a_c < 2; ++a_c) {
      for (int k = 1; k <= K; ++k) {
        const Sim sim = simulate(s, a_c, k, t);
        double v = sim.reward;
        if (!sim.terminal && sim.steps < t) v += sim.disc * V[t - sim.steps][sim.end_state];
        if (v > best) {
          best = v;
          best_a = a_c;
          best_k = k;
        }
      }
    }
    sol.decisions.push_back({best_a, best_k});
    const Sim sim = simulate(s, best_a, best_k, t);
    int cur = s;
    for (int i = 1; i <= sim.steps; ++i) {
      cur = chain_step(cur, best_a);
      const bool last = i == sim.steps;
      sol.optimal_return += disc * (last ? r_ext : c);
      disc *= gamma;
      if (last)
        sol.measured_steps += 1;
      else
        sol.unmeasured_steps += 1;
    }
    s = sim.end_state;
    t -= sim.steps;
  }
  sol.ratio = sol.measured_steps > 0
                  ? static_cast<double>(sol.unmeasured_steps) / sol.measured_steps
                  : 0.0;
  return sol;
}

OracleSolution solve_osmboa(const ChainParams& chain, double c, double gamma, int horizon,
                            bool allow_skip) {
  check_size(chain, horizon);
  const int n = chain.n;
  const int goal = n - 1;
  const double r_ext = chain.step_reward;

  // Augmented state: (true state, memory payload, freshness flag). The value
  // depends only on (s, t) for a deterministic chain, but enumerating the
  // full augmented space keeps the solver aligned with what the agent sees.
  const int n_aug = n * n * 2;
  auto aug = [&](int s, int mem, int flag) { return (s * n + mem) * 2 + flag; };

  std::vector<std::vector<double>> V(horizon + 1, std::vector<double>(n_aug, 0.0));

  for (int t = 1; t <= horizon; ++t) {
    for (int s = 0; s < goal; ++s) {
      for (int mem = 0; mem < n; ++mem) {
        for (int flag = 0; flag < 2; ++flag) {
          double best = kNegInf;
          for (int a_c = 0; a_c < 2; ++a_c) {
            for (int a_m = allow_skip ? 0 : 1; a_m < 2; ++a_m) {
              const int s2 = chain_step(s, a_c);
              const bool terminal = s2 == goal;
              const bool truncated = t == 1;
              const bool measured = a_m == 1 || terminal || truncated;
              double v = measured ? r_ext : c;
              if (!terminal && !truncated) {
                const int mem2 = measured ? s2 : mem;
                v += gamma * V[t - 1][aug(s2, mem2, measured ? 1 : 0)];
              }
              if (v > best) best = v;
            }
          }
          V[t][aug(s, mem, flag)] = best;
        }
      }
    }
  }

  OracleSolution sol;
  sol.dp_value = V[horizon][aug(0, 0, 1)];

  int s = 0, mem = 0, flag = 1, t = horizon;
  double disc = 1.0;
  while (s != goal && t > 0) {
    double best = kNegInf;
    int best_a = 0, best_m = allow_skip ? 0 : 1;
    for (int a_c = 0; a_c < 2; ++a_c) {
      for (int a_m = allow_skip ? 0 : 1; a_m < 2; ++a_m) {
        const int s2 = chain_step(s, a_c);
        const bool terminal = s2 == goal;
        const bool truncated = t == 1;
        const bool measured = a_m == 1 || terminal || truncated;
        double v = measured ? r_ext : c;
        if (!terminal && !truncated) {
          const int mem2 = measured ? s2 : mem;
          v += gamma * V[t - 1][aug(s2, mem2, measured ? 1 : 0)];
        }
        if (v > best) {
          best = v;
          best_a = a_c;
          best_m = a_m;
        }
      }
    }
    sol.decisions.push_back({best_a, best_m});
    const int s2 = chain_step(s, best_a);
    const bool terminal = s2 == goal;
    const bool truncated = t == 1;
    const bool measured = best_m == 1 || terminal || truncated;
    sol.optimal_return += disc * (measured ? r_ext : c);
    disc *= gamma;
    if (measured) {
      sol.measured_steps += 1;
      mem = s2;
      flag = 1;
    } else {
      sol.unmeasured_steps += 1;
      flag = 0;
    }
    s = s2;
    t -= 1;
    if (terminal) break;
  }
  sol.ratio = sol.measured_steps > 0
                  ? static_cast<double>(sol.unmeasured_steps) / sol.measured_steps
                  : 0.0;
  return sol;
}

namespace {

template <typename Solve>
SweepResult sweep(const std::vector<double>& c_grid, Solve&& solve) {
  if (c_grid.empty()) throw std::invalid_argument("sweep_intrinsic: empty c grid");
  SweepResult out;
  out.rows.reserve(c_grid.size());
  for (double c : c_grid) {
    const OracleSolution sol = solve(c);
    out.rows.push_back({c, sol.ratio, sol.optimal_return});
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].ratio < out.rows[i - 1].ratio - 1e-12) out.ratio_nondecreasing = false;
  return out;
}

}  // namespace

SweepResult sweep_intrinsic_dmsoa(const ChainParams& chain, double gamma, int K, int horizon,
                                  const std::vector<double>& c_grid) {
  return sweep(c_grid, [&](double c) { return solve_dmsoa(chain, c, gamma, K, horizon); });
}

SweepResult sweep_intrinsic_osmboa(const ChainParams& chain, double gamma, int horizon,
                                   const std::vector<double>& c_grid) {
  return sweep(c_grid, [&](double c) { return solve_osmboa(chain, c, gamma, horizon); });
}

}  // namespace frugal
