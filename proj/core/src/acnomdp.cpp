#include "frugal/acnomdp.hpp"

#include <cstdio>
#include <stdexcept>

namespace frugal {

int MeasurementTrace::measured_steps() const {
  int n = 0;
  for (const auto& d : decisions)
    for (auto m : d.measured) n += m ? 1 : 0;
  return n;
}

int MeasurementTrace::unmeasured_steps() const {
  int n = 0;
  for (const auto& d : decisions)
    for (auto m : d.measured) n += m ? 0 : 1;
  return n;
}

void append_decision(MeasurementTrace& trace, const CostedTransition& t) {
  DecisionRecord rec;
  rec.decision_index = static_cast<int>(trace.decisions.size());
  rec.span = t.base_steps;
  rec.k_or_am = t.a_m_or_k;
  rec.measured.assign(static_cast<size_t>(t.base_steps), 0);
  if (t.measured_count > 0) rec.measured.back() = 1;  // measurement lands on the final step
  trace.decisions.push_back(std::move(rec));
}

double measurement_ratio(const MeasurementTrace& trace) {
  const int measured = trace.measured_steps();
  if (measured == 0) throw std::domain_error("measurement_ratio: no measured step in trace");
  return static_cast<double>(trace.unmeasured_steps()) / static_cast<double>(measured);
}

AcnomdpEnv::AcnomdpEnv(std::unique_ptr<Env> base, WrapperConfig cfg)
    : base_(std::move(base)), cfg_(cfg) {
  if (!base_) throw std::invalid_argument("AcnomdpEnv: null base environment");
  descriptor_ = base_->descriptor();
  if (cfg_.gamma <= 0.0 || cfg_.gamma > 1.0)
    throw std::invalid_argument("AcnomdpEnv: gamma must be in (0, 1]");
  if (cfg_.K < 1) throw std::invalid_argument("AcnomdpEnv: K must be >= 1");
  if (cfg_.memory_window < 1)
    throw std::invalid_argument("AcnomdpEnv: memory_window must be >= 1");
  if (cfg_.stale_mode == StaleMode::zeros && cfg_.memory_window != 1)
    throw std::invalid_argument("AcnomdpEnv: stale_mode=zeros requires memory_window=1");
  if (descriptor_.r_ext_max > 0.0 && cfg_.c < descriptor_.r_ext_max)
    std::fprintf(stderr,
                 "warning: intrinsic bonus c=%g is below r_ext_max=%g; "
                 "the agent has no incentive to skip measurements\n",
                 cfg_.c, descriptor_.r_ext_max);
}

void AcnomdpEnv::require_active() const {
  if (!active_) throw std::logic_error("AcnomdpEnv: episode is not active");
}

ObservationPacket AcnomdpEnv::reset(std::uint64_t seed) {
  StateVector s0 = base_->reset(seed);
  memory_.clear();
  for (int i = 0; i < cfg_.memory_window; ++i) memory_.push_front(s0);
  accounting_ = {};
  episode_discount_ = 1.0;
  base_step_index_ = 0;
  active_ = true;

  packet_.fresh = true;
  packet_.source_step = 0;
  if (cfg_.stale_mode == StaleMode::zeros) {
    packet_.payload = s0;
  } else {
    StateVector window;
    window.reserve(memory_.size() * s0.size());
    for (const auto& m : memory_) window.insert(window.end(), m.begin(), m.end());
    packet_.payload = std::move(window);
  }
  return packet_;
}

ObservationPacket AcnomdpEnv::make_packet(const StepOutcome& out, bool measured) {
  ObservationPacket p;
  if (measured) {
    memory_.push_front(out.next_state);
    memory_.pop_back();
    p.fresh = true;
    p.source_step = base_step_index_;
  } else {
    p.fresh = false;
    p.source_step = packet_.source_step;
  }
  if (cfg_.stale_mode == StaleMode::zeros) {
    if (measured)
      p.payload = out.next_state;
    else
      p.payload = std::nullopt;  // EMPTY
  } else {
    StateVector window;
    window.reserve(memory_.size() * memory_.front().size());
    for (const auto& m : memory_) window.insert(window.end(), m.begin(), m.end());
    p.payload = std::move(window);
  }
  return p;
}

void AcnomdpEnv::account_step(double r_ext, bool measured) {
  accounting_.base_steps += 1;
  accounting_.extrinsic_sum += r_ext;
  const double delivered = measured ? r_ext : cfg_.c;
  accounting_.costed_sum += delivered;
  accounting_.discounted_costed += episode_discount_ * delivered;
  episode_discount_ *= cfg_.gamma;
  if (measured)
    accounting_.measured_steps += 1;
  else
    accounting_.unmeasured_steps += 1;
  ++base_step_index_;
}

CostedTransition AcnomdpEnv::osmboa_step(ActionTuple a) {
  require_active();
  if (a.a_m != 0 && a.a_m != 1)
    throw std::invalid_argument("AcnomdpEnv::osmboa_step: a_m must be 0 or 1");

  CostedTransition t;
  t.obs = packet_;
  t.a_c = a.a_c;
  t.a_m_or_k = a.a_m;

  StepOutcome out = base_->step(a.a_c);
  // Episode end forces a final measurement regardless of a_m.
  const bool measured = a.a_m == 1 || out.terminal || out.truncated;
  account_step(out.r_ext, measured);

  t.reward = measured ? out.r_ext : cfg_.c;
  t.terminal = out.terminal;
  t.truncated = out.truncated;
  t.base_steps = 1;
  t.measured_count = measured ? 1 : 0;
  t.next_obs = make_packet(out, measured);

  packet_ = t.next_obs;
  active_ = !(out.terminal || out.truncated);
  return t;
}

std::vector<double> AcnomdpEnv::osmboa_observe() const {
  require_active();
  return flagged_input(packet_, cfg_.memory_window * descriptor_.obs_dim);
}

std::vector<double> AcnomdpEnv::flagged_input(const ObservationPacket& p, int payload_dim) {
  std::vector<double> v;
  v.reserve(static_cast<size_t>(payload_dim) + 1);
  if (p.payload.has_value()) {
    if (static_cast<int>(p.payload->size()) != payload_dim)
      throw std::invalid_argument("flagged_input: payload length mismatch");
    v.insert(v.end(), p.payload->begin(), p.payload->end());
  } else {
    v.assign(static_cast<size_t>(payload_dim), 0.0);
  }
  v.push_back(p.fresh ? 1.0 : 0.0);
  return v;
}

CostedTransition AcnomdpEnv::dmsoa_schedule(SkipDecision d) {
  require_active();
  if (d.k < 1 || d.k > cfg_.K)
    throw std::invalid_argument("AcnomdpEnv::dmsoa_schedule: k out of range");
  if (!packet_.fresh)
    throw std::logic_error("AcnomdpEnv::dmsoa_schedule: decision from a stale observation");

  CostedTransition t;
  t.obs = packet_;
  t.a_c = d.a_c;
  t.a_m_or_k = d.k;

  double reward = 0.0;
  double disc = 1.0;
  StepOutcome out;
  int executed = 0;
  for (int i = 1; i <= d.k; ++i) {
    out = base_->step(d.a_c);
    ++executed;
    const bool last = i == d.k || out.terminal || out.truncated;
    const double delivered = last ? out.r_ext : cfg_.c;
    account_step(out.r_ext, last);
    reward += disc * delivered;
    disc *= cfg_.gamma;
    if (last) break;
  }

  t.reward = reward;
  t.terminal = out.terminal;
  t.truncated = out.truncated;
  t.base_steps = executed;
  t.measured_count = 1;
  t.next_obs = make_packet(out, true);

  packet_ = t.next_obs;
  active_ = !(out.terminal || out.truncated);
  return t;
}

}  // namespace frugal
