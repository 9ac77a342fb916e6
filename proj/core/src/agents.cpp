#include "frugal/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace frugal {

namespace {

// lowest index wins ties
int argmax(std::span<const double> v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.reserve(hidden.size() + 2);
  sizes.push_back(in);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

void apply_scale(std::vector<double>& x, const std::vector<double>& scale, int obs_dim,
                 int scaled_prefix) {
  if (scale.empty()) return;
  for (int i = 0; i < scaled_prefix; ++i) x[i] *= scale[i % obs_dim];
}

}  // namespace

double EpsilonSchedule::value(long long decisions, long long total_decisions) const {
  const double horizon = decay_frac * static_cast<double>(total_decisions);
  if (horizon <= 0.0) return end;
  const double f = std::min(1.0, static_cast<double>(decisions) / horizon);
  return start + (end - start) * f;
}

// ---------------------------------------------------------------------------
// DMSOA
// ---------------------------------------------------------------------------

DmsoaAgent::DmsoaAgent(const EnvDescriptor& env, const WrapperConfig& wcfg,
                       const AgentConfig& cfg, std::uint64_t init_seed)
    : obs_dim_(env.obs_dim),
      n_actions_(env.n_actions),
      K_(wcfg.K),
      gamma_(wcfg.gamma),
      cfg_(cfg) {
  if (wcfg.memory_window != 1)
    throw std::invalid_argument("DmsoaAgent: decisions start from fresh states; memory_window must be 1");
  if (!cfg_.obs_scale.empty() && static_cast<int>(cfg_.obs_scale.size()) != obs_dim_)
    throw std::invalid_argument("DmsoaAgent: obs_scale length must equal obs_dim");

  const int enc = cfg_.encoding == ActionEncoding::scalar ? 1 : n_actions_;
  MLPSpec qc_spec{net_sizes(obs_dim_, cfg_.hidden, n_actions_), cfg_.activation};
  MLPSpec qm_spec{net_sizes(obs_dim_ + enc, cfg_.hidden, K_), cfg_.activation};

  Rng rc(mix_seed(init_seed, 0));
  Rng rm(mix_seed(init_seed, 1));
  qc_online_ = init_params(qc_spec, rc, ParamRole::online);
  qm_online_ = init_params(qm_spec, rm, ParamRole::online);
  qc_target_ = qc_online_;
  qc_target_.role = ParamRole::target;
  qm_target_ = qm_online_;
  qm_target_.role = ParamRole::target;
}

std::vector<double> DmsoaAgent::control_input(const ObservationPacket& obs) const {
  if (!obs.payload.has_value() || static_cast<int>(obs.payload->size()) != obs_dim_)
    throw std::invalid_argument("DmsoaAgent: observation payload missing or of wrong length");
  std::vector<double> x = *obs.payload;
  apply_scale(x, cfg_.obs_scale, obs_dim_, obs_dim_);
  return x;
}

std::vector<double> DmsoaAgent::measurement_input(const ObservationPacket& obs, int a_c) const {
  std::vector<double> x = control_input(obs);
  if (cfg_.encoding == ActionEncoding::scalar) {
    x.push_back(static_cast<double>(a_c) / static_cast<double>(n_actions_ - 1));
  } else {
    for (int i = 0; i < n_actions_; ++i) x.push_back(i == a_c ? 1.0 : 0.0);
  }
  return x;
}

SkipDecision DmsoaAgent::act(const ObservationPacket& obs, double eps_c, double eps_m,
                             Rng& rng) const {
  if (!obs.fresh)
    throw std::logic_error("DmsoaAgent::act: called with a stale observation");

  int a_c;
  if (eps_c > 0.0 && rng.uniform01() < eps_c) {
    a_c = rng.uniform_int(n_actions_);
  } else {
    a_c = argmax(forward(qc_online_, control_input(obs)));
  }

  int k;
  if (eps_m > 0.0 && rng.uniform01() < eps_m) {
    k = 1 + rng.uniform_int(K_);
  } else {
    k = 1 + argmax(forward(qm_online_, measurement_input(obs, a_c)));
  }
  return {a_c, k};
}

DmsoaAgent::Targets DmsoaAgent::targets(const SampleBatch& batch) const {
  Targets out;
  out.control.reserve(batch.transitions.size());
  out.measurement.reserve(batch.transitions.size());
  for (const auto& t : batch.transitions) {
    if (t.terminal) {
      out.control.push_back(t.reward);
      out.measurement.push_back(t.reward);
      continue;
    }
    const double disc = std::pow(gamma_, t.base_steps);
    const auto xc = control_input(t.next_obs);
    const int a_star = argmax(forward(qc_online_, xc));
    out.control.push_back(t.reward + disc * forward(qc_target_, xc)[a_star]);

    const auto xm = measurement_input(t.next_obs, a_star);
    const int k_star = argmax(forward(qm_online_, xm));
    out.measurement.push_back(t.reward + disc * forward(qm_target_, xm)[k_star]);
  }
  return out;
}

CostedTransition DmsoaAgent::play(AcnomdpEnv& env, double eps_c, double eps_m, Rng& rng,
                                  std::vector<CostedTransition>* replay_out) {
  const SkipDecision d = act(env.current_observation(), eps_c, eps_m, rng);
  CostedTransition t = env.dmsoa_schedule(d);
  if (replay_out) replay_out->push_back(t);
  return t;
}

TrainMetrics DmsoaAgent::train_step(ReplayBuffer& buffer, int batch_size, double beta,
                                    Rng& rng) {
  TrainMetrics metrics;
  if (buffer.size() < static_cast<std::size_t>(batch_size)) return metrics;

  const SampleBatch batch = buffer.sample(batch_size, beta, rng);
  const Targets tg = targets(batch);

  Batch bc, bm;
  const std::size_t n = batch.transitions.size();
  bc.inputs.reserve(n);
  bm.inputs.reserve(n);
  std::vector<double> delta_c(n), delta_m(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = batch.transitions[i];

    auto xc = control_input(t.obs);
    auto yc = forward(qc_online_, xc);
    delta_c[i] = tg.control[i] - yc[t.a_c];
    yc[t.a_c] = tg.control[i];  // error only on the taken action
    bc.inputs.push_back(std::move(xc));
    bc.targets.push_back(std::move(yc));
    bc.weights.push_back(batch.is_weights[i]);

    auto xm = measurement_input(t.obs, t.a_c);
    auto ym = forward(qm_online_, xm);
    const int k_index = t.a_m_or_k - 1;
    delta_m[i] = tg.measurement[i] - ym[k_index];
    ym[k_index] = tg.measurement[i];
    bm.inputs.push_back(std::move(xm));
    bm.targets.push_back(std::move(ym));
    bm.weights.push_back(batch.is_weights[i]);
  }

  GradientSet grad;
  metrics.loss_control = backward(qc_online_, bc, grad, cfg_.loss);
  if (cfg_.use_sgd)
    sgd_step(qc_online_, grad, cfg_.adam.lr);
  else
    adam_step(qc_online_, grad, qc_adam_, cfg_.adam);

  metrics.loss_measurement = backward(qm_online_, bm, grad, cfg_.loss);
  if (cfg_.use_sgd)
    sgd_step(qm_online_, grad, cfg_.adam.lr);
  else
    adam_step(qm_online_, grad, qm_adam_, cfg_.adam);

  std::vector<double> prio(n);
  for (std::size_t i = 0; i < n; ++i)
    prio[i] = cfg_.priority_source == PrioritySource::control
                  ? delta_c[i]
                  : std::max(std::fabs(delta_c[i]), std::fabs(delta_m[i]));
  buffer.update_priorities(batch.indices, prio);

  metrics.trained = true;
  return metrics;
}

void DmsoaAgent::sync_targets() {
  copy_into_target(qc_online_, qc_target_);
  copy_into_target(qm_online_, qm_target_);
}

std::vector<NamedParams> DmsoaAgent::named_params() const {
  return {{"qc", qc_online_}, {"qm", qm_online_}};
}

void DmsoaAgent::load_params(const std::vector<NamedParams>& nets) {
  bool got_c = false, got_m = false;
  for (const auto& net : nets) {
    if (net.name == "qc") {
      if (!(net.params.spec == qc_online_.spec))
        throw std::invalid_argument("DmsoaAgent::load_params: qc spec mismatch");
      qc_online_.values = net.params.values;
      got_c = true;
    } else if (net.name == "qm") {
      if (!(net.params.spec == qm_online_.spec))
        throw std::invalid_argument("DmsoaAgent::load_params: qm spec mismatch");
      qm_online_.values = net.params.values;
      got_m = true;
    }
  }
  if (!got_c || !got_m)
    throw std::invalid_argument("DmsoaAgent::load_params: need nets qc and qm");
  sync_targets();
  qc_adam_ = {};
  qm_adam_ = {};
}

// ---------------------------------------------------------------------------
// OSMBOA
// ---------------------------------------------------------------------------

OsmboaAgent::OsmboaAgent(const EnvDescriptor& env, const WrapperConfig& wcfg,
                         const AgentConfig& cfg, int n_step, std::uint64_t init_seed)
    : obs_dim_(env.obs_dim),
      n_actions_(env.n_actions),
      window_(wcfg.memory_window),
      gamma_(wcfg.gamma),
      cfg_(cfg),
      nstep_(n_step, wcfg.gamma) {
  if (!cfg_.obs_scale.empty() && static_cast<int>(cfg_.obs_scale.size()) != obs_dim_)
    throw std::invalid_argument("OsmboaAgent: obs_scale length must equal obs_dim");
  MLPSpec spec{net_sizes(window_ * obs_dim_ + 1, cfg_.hidden, 2 * n_actions_), cfg_.activation};
  Rng r(mix_seed(init_seed, 0));
  q_online_ = init_params(spec, r, ParamRole::online);
  q_target_ = q_online_;
  q_target_.role = ParamRole::target;
}

std::vector<double> OsmboaAgent::net_input(const ObservationPacket& obs) const {
  std::vector<double> x = AcnomdpEnv::flagged_input(obs, window_ * obs_dim_);
  apply_scale(x, cfg_.obs_scale, obs_dim_, window_ * obs_dim_);
  return x;
}

ActionTuple OsmboaAgent::act(std::span<const double> input, double eps, Rng& rng) const {
  int idx;
  if (eps > 0.0 && rng.uniform01() < eps) {
    idx = rng.uniform_int(2 * n_actions_);
  } else {
    idx = argmax(forward(q_online_, input));
  }
  return {idx / 2, idx % 2};
}

std::vector<double> OsmboaAgent::targets(const SampleBatch& batch) const {
  std::vector<double> out;
  out.reserve(batch.transitions.size());
  for (const auto& t : batch.transitions) {
    if (t.terminal) {
      out.push_back(t.reward);
      continue;
    }
    const double disc = std::pow(gamma_, t.base_steps);
    const auto x = net_input(t.next_obs);
    const int a_star = argmax(forward(q_online_, x));
    out.push_back(t.reward + disc * forward(q_target_, x)[a_star]);
  }
  return out;
}

void OsmboaAgent::begin_episode() {
  nstep_.flush();  // discard any window left over from an interrupted episode
}

CostedTransition OsmboaAgent::play(AcnomdpEnv& env, double eps_c, double /*eps_m*/, Rng& rng,
                                   std::vector<CostedTransition>* replay_out) {
  const auto input = net_input(env.current_observation());
  const ActionTuple a = act(input, eps_c, rng);
  CostedTransition t = env.osmboa_step(a);
  if (replay_out) {
    auto ready = nstep_.push(t);
    replay_out->insert(replay_out->end(), ready.begin(), ready.end());
  }
  return t;
}

TrainMetrics OsmboaAgent::train_step(ReplayBuffer& buffer, int batch_size, double beta,
                                     Rng& rng) {
  TrainMetrics metrics;
  if (buffer.size() < static_cast<std::size_t>(batch_size)) return metrics;

  const SampleBatch batch = buffer.sample(batch_size, beta, rng);
  const std::vector<double> tg = targets(batch);

  Batch b;
  const std::size_t n = batch.transitions.size();
  b.inputs.reserve(n);
  std::vector<double> delta(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = batch.transitions[i];
    auto x = net_input(t.obs);
    auto y = forward(q_online_, x);
    const int idx = t.a_c * 2 + t.a_m_or_k;
    delta[i] = tg[i] - y[idx];
    y[idx] = tg[i];
    b.inputs.push_back(std::move(x));
    b.targets.push_back(std::move(y));
    b.weights.push_back(batch.is_weights[i]);
  }

  GradientSet grad;
  metrics.loss_control = backward(q_online_, b, grad, cfg_.loss);
  if (cfg_.use_sgd)
    sgd_step(q_online_, grad, cfg_.adam.lr);
  else
    adam_step(q_online_, grad, adam_, cfg_.adam);

  buffer.update_priorities(batch.indices, delta);
  metrics.trained = true;
  return metrics;
}

void OsmboaAgent::sync_targets() { copy_into_target(q_online_, q_target_); }

std::vector<NamedParams> OsmboaAgent::named_params() const { return {{"q", q_online_}}; }

void OsmboaAgent::load_params(const std::vector<NamedParams>& nets) {
  for (const auto& net : nets) {
    if (net.name == "q") {
      if (!(net.params.spec == q_online_.spec))
        throw std::invalid_argument("OsmboaAgent::load_params: q spec mismatch");
      q_online_.values = net.params.values;
      sync_targets();
      adam_ = {};
      return;
    }
  }
  throw std::invalid_argument("OsmboaAgent::load_params: net q not found");
}

// ---------------------------------------------------------------------------
// interaction loop
// ---------------------------------------------------------------------------

EpisodeLog run_episode(Agent& agent, AcnomdpEnv& env, std::uint64_t env_seed, TrainContext& ctx,
                       MeasurementTrace* trace) {
  if (ctx.learn && (ctx.buffer == nullptr || ctx.decisions == nullptr || ctx.rng == nullptr))
    throw std::invalid_argument("run_episode: learn mode requires buffer, decisions and rng");

  agent.begin_episode();
  env.reset(env_seed);

  EpisodeLog log;
  Rng greedy_rng(0);  // never drawn from: eval runs with eps = 0
  Rng& rng = ctx.rng ? *ctx.rng : greedy_rng;
  const TrainSchedule& sched = ctx.schedule;

  std::vector<CostedTransition> ready;
  bool terminal = false;
  while (env.episode_active()) {
    double eps_c = 0.0, eps_m = 0.0;
    if (ctx.learn) {
      eps_c = sched.eps_c.value(*ctx.decisions, sched.total_decisions);
      eps_m = sched.eps_m.value(*ctx.decisions, sched.total_decisions);
    }
    ready.clear();
    const CostedTransition t =
        agent.play(env, eps_c, eps_m, rng, ctx.learn ? &ready : nullptr);
    log.decisions += 1;
    terminal = t.terminal;
    if (trace) append_decision(*trace, t);

    if (ctx.learn) {
      for (const auto& r : ready) ctx.buffer->push(r, ctx.buffer->max_priority());
      const long long d = ++*ctx.decisions;
      if (d >= sched.warmup_decisions && sched.train_every > 0 &&
          d % sched.train_every == 0) {
        const double progress =
            std::min(1.0, static_cast<double>(d) / static_cast<double>(sched.total_decisions));
        const double beta = ctx.beta0 + (1.0 - ctx.beta0) * progress;
        agent.train_step(*ctx.buffer, sched.batch_size, beta, rng);
      }
      if (sched.target_sync > 0 && d % sched.target_sync == 0) agent.sync_targets();
    }
  }

  const EpisodeAccounting& acc = env.accounting();
  log.base_steps = acc.base_steps;
  log.measured_steps = acc.measured_steps;
  log.unmeasured_steps = acc.unmeasured_steps;
  log.costed_return = acc.costed_sum;
  log.extrinsic_return = acc.extrinsic_sum;
  log.terminal = terminal;
  return log;
}

}  // namespace frugal
