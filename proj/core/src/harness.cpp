#include "frugal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace frugal {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value \"" + value + "\" for key \"" + key + "\"");
}

long long parse_ll(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

double parse_d(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const std::invalid_argument&) {
    bad_value(key, value);
  } catch (const std::out_of_range&) {
    bad_value(key, value);
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& item : split(value, ','))
    out.push_back(static_cast<int>(parse_ll(key, item)));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split(value, ',')) out.push_back(parse_d(key, item));
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  const auto colon = value.find(':');
  if (colon != std::string::npos) {  // half-open range lo:hi
    const long long lo = parse_ll(key, trim(value.substr(0, colon)));
    const long long hi = parse_ll(key, trim(value.substr(colon + 1)));
    if (lo < 0 || hi <= lo) bad_value(key, value);
    for (long long s = lo; s < hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
    return out;
  }
  for (const auto& item : split(value, ',')) {
    const long long v = parse_ll(key, item);
    if (v < 0) bad_value(key, value);
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

std::string seeds_to_string(const std::vector<std::uint64_t>& seeds) {
  std::string s;
  for (size_t i = 0; i < seeds.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(seeds[i]);
  }
  return s;
}

std::string int_list_to_string(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string double_list_to_string(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += fmt_double(v[i]);
  }
  return s;
}

// Apply one "key = value" override; throws on unknown keys.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "env") {
    cfg.env = value;
  } else if (key == "agent") {
    cfg.agent = value;
  } else if (key == "seeds") {
    cfg.seeds = parse_seeds(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "env.max_steps") {
    cfg.env_max_steps = static_cast<int>(parse_ll(key, value));
  } else if (key == "env.obs_scale") {
    cfg.agent_cfg.obs_scale = value.empty() ? std::vector<double>{} : parse_double_list(key, value);
  } else if (key == "acnomdp.c") {
    cfg.wrapper.c = parse_d(key, value);
  } else if (key == "acnomdp.gamma") {
    cfg.wrapper.gamma = parse_d(key, value);
  } else if (key == "acnomdp.K") {
    cfg.wrapper.K = static_cast<int>(parse_ll(key, value));
  } else if (key == "acnomdp.memory_window") {
    cfg.wrapper.memory_window = static_cast<int>(parse_ll(key, value));
  } else if (key == "acnomdp.stale_mode") {
    if (value == "memory")
      cfg.wrapper.stale_mode = StaleMode::memory;
    else if (value == "zeros")
      cfg.wrapper.stale_mode = StaleMode::zeros;
    else
      bad_value(key, value);
  } else if (key == "neural.hidden") {
    cfg.agent_cfg.hidden = parse_int_list(key, value);
  } else if (key == "neural.activation") {
    if (value == "relu")
      cfg.agent_cfg.activation = Activation::relu;
    else if (value == "tanh")
      cfg.agent_cfg.activation = Activation::tanh;
    else
      bad_value(key, value);
  } else if (key == "neural.loss") {
    if (value == "mse")
      cfg.agent_cfg.loss.kind = LossKind::mse;
    else if (value == "huber")
      cfg.agent_cfg.loss.kind = LossKind::huber;
    else
      bad_value(key, value);
  } else if (key == "neural.huber_delta") {
    cfg.agent_cfg.loss.huber_delta = parse_d(key, value);
  } else if (key == "neural.lr") {
    cfg.agent_cfg.adam.lr = parse_d(key, value);
  } else if (key == "neural.adam_beta1") {
    cfg.agent_cfg.adam.beta1 = parse_d(key, value);
  } else if (key == "neural.adam_beta2") {
    cfg.agent_cfg.adam.beta2 = parse_d(key, value);
  } else if (key == "neural.adam_eps") {
    cfg.agent_cfg.adam.eps = parse_d(key, value);
  } else if (key == "neural.optimizer") {
    if (value == "adam")
      cfg.agent_cfg.use_sgd = false;
    else if (value == "sgd")
      cfg.agent_cfg.use_sgd = true;
    else
      bad_value(key, value);
  } else if (key == "neural.action_encoding") {
    if (value == "scalar")
      cfg.agent_cfg.encoding = ActionEncoding::scalar;
    else if (value == "onehot")
      cfg.agent_cfg.encoding = ActionEncoding::onehot;
    else
      bad_value(key, value);
  } else if (key == "neural.priority_source") {
    if (value == "control")
      cfg.agent_cfg.priority_source = PrioritySource::control;
    else if (value == "combined")
      cfg.agent_cfg.priority_source = PrioritySource::combined;
    else
      bad_value(key, value);
  } else if (key == "replay.capacity") {
    cfg.replay_capacity = static_cast<std::size_t>(parse_ll(key, value));
  } else if (key == "replay.alpha") {
    cfg.replay_alpha = parse_d(key, value);
  } else if (key == "replay.beta0") {
    cfg.replay_beta0 = parse_d(key, value);
  } else if (key == "replay.eps_prio") {
    cfg.replay_eps_prio = parse_d(key, value);
  } else if (key == "replay.n_step") {
    cfg.n_step = static_cast<int>(parse_ll(key, value));
  } else if (key == "schedule.total_decisions") {
    cfg.schedule.total_decisions = parse_ll(key, value);
  } else if (key == "schedule.warmup_decisions") {
    cfg.schedule.warmup_decisions = parse_ll(key, value);
  } else if (key == "schedule.batch_size") {
    cfg.schedule.batch_size = static_cast<int>(parse_ll(key, value));
  } else if (key == "schedule.train_every") {
    cfg.schedule.train_every = static_cast<int>(parse_ll(key, value));
  } else if (key == "schedule.target_sync") {
    cfg.schedule.target_sync = static_cast<int>(parse_ll(key, value));
  } else if (key == "schedule.eps_start") {
    cfg.schedule.eps_c.start = parse_d(key, value);
  } else if (key == "schedule.eps_end") {
    cfg.schedule.eps_c.end = parse_d(key, value);
  } else if (key == "schedule.eps_decay_frac") {
    cfg.schedule.eps_c.decay_frac = parse_d(key, value);
  } else if (key == "schedule.eps_m_start") {
    cfg.schedule.eps_m.start = parse_d(key, value);
  } else if (key == "schedule.eps_m_end") {
    cfg.schedule.eps_m.end = parse_d(key, value);
  } else if (key == "schedule.eps_m_decay_frac") {
    cfg.schedule.eps_m.decay_frac = parse_d(key, value);
  } else if (key == "harness.eval_period") {
    cfg.eval_period = static_cast<int>(parse_ll(key, value));
  } else if (key == "harness.eval_episodes") {
    cfg.eval_episodes = static_cast<int>(parse_ll(key, value));
  } else {
    throw std::invalid_argument("config: unknown key \"" + key + "\"");
  }
}

int worker_count(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("FRUGAL_RL_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(n, jobs));
}

}  // namespace

RunConfig default_config(const std::string& env, const std::string& agent) {
  RunConfig cfg;
  cfg.env = env;
  cfg.agent = agent;
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);

  cfg.wrapper.K = 3;
  cfg.wrapper.memory_window = 1;
  cfg.schedule.eps_c = {1.0, 0.05, 0.6};
  cfg.schedule.eps_m = {1.0, 0.05, 0.6};

  if (env == "cartpole") {
    cfg.wrapper.c = 1.1;  // extrinsic reward is 1 per step
    cfg.wrapper.gamma = 0.99;
    cfg.schedule.total_decisions = 40000;
    cfg.schedule.warmup_decisions = 1000;
    cfg.schedule.batch_size = 64;
    cfg.schedule.train_every = 2;
    cfg.schedule.target_sync = 500;
    cfg.replay_capacity = 65536;
  } else if (env == "acrobot") {
    cfg.wrapper.c = -0.85;  // extrinsic reward is -1 per step
    cfg.wrapper.gamma = 0.99;
    cfg.schedule.total_decisions = 80000;
    cfg.schedule.warmup_decisions = 2000;
    cfg.schedule.batch_size = 64;
    cfg.schedule.train_every = 2;
    cfg.schedule.target_sync = 750;
    cfg.replay_capacity = 131072;
  } else if (env.rfind("chain:", 0) == 0) {
    cfg.wrapper.c = -0.85;
    cfg.wrapper.gamma = 1.0;
    cfg.agent_cfg.hidden = {32, 32};
    cfg.schedule.total_decisions = 12000;
    cfg.schedule.warmup_decisions = 500;
    cfg.schedule.batch_size = 32;
    cfg.schedule.train_every = 1;
    cfg.schedule.target_sync = 250;
    cfg.schedule.eps_c.decay_frac = 0.5;
    cfg.schedule.eps_m.decay_frac = 0.5;
    cfg.replay_capacity = 16384;
    cfg.eval_period = 50;
  }

  if (agent == "osmboa") cfg.n_step = 3;

  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key = value: \"" + line + "\"");
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  std::string env = "cartpole", agent = "dmsoa";
  for (const auto& [k, v] : pairs) {
    if (k == "env") env = v;
    if (k == "agent") agent = v;
  }
  RunConfig cfg = default_config(env, agent);
  for (const auto& [k, v] : pairs) apply_key(cfg, k, v);
  validate_config(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::map<std::string, std::string> config_to_map(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["env"] = cfg.env;
  m["agent"] = cfg.agent;
  m["seeds"] = seeds_to_string(cfg.seeds);
  m["out"] = cfg.out_dir;
  m["env.max_steps"] = std::to_string(cfg.env_max_steps);
  m["env.obs_scale"] = double_list_to_string(cfg.agent_cfg.obs_scale);
  m["acnomdp.c"] = fmt_double(cfg.wrapper.c);
  m["acnomdp.gamma"] = fmt_double(cfg.wrapper.gamma);
  m["acnomdp.K"] = std::to_string(cfg.wrapper.K);
  m["acnomdp.memory_window"] = std::to_string(cfg.wrapper.memory_window);
  m["acnomdp.stale_mode"] = cfg.wrapper.stale_mode == StaleMode::memory ? "memory" : "zeros";
  m["neural.hidden"] = int_list_to_string(cfg.agent_cfg.hidden);
  m["neural.activation"] = cfg.agent_cfg.activation == Activation::relu ? "relu" : "tanh";
  m["neural.loss"] = cfg.agent_cfg.loss.kind == LossKind::mse ? "mse" : "huber";
  m["neural.huber_delta"] = fmt_double(cfg.agent_cfg.loss.huber_delta);
  m["neural.lr"] = fmt_double(cfg.agent_cfg.adam.lr);
  m["neural.adam_beta1"] = fmt_double(cfg.agent_cfg.adam.beta1);
  m["neural.adam_beta2"] = fmt_double(cfg.agent_cfg.adam.beta2);
  m["neural.adam_eps"] = fmt_double(cfg.agent_cfg.adam.eps);
  m["neural.optimizer"] = cfg.agent_cfg.use_sgd ? "sgd" : "adam";
  m["neural.action_encoding"] =
      cfg.agent_cfg.encoding == ActionEncoding::scalar ? "scalar" : "onehot";
  m["neural.priority_source"] =
      cfg.agent_cfg.priority_source == PrioritySource::control ? "control" : "combined";
  m["replay.capacity"] = std::to_string(cfg.replay_capacity);
  m["replay.alpha"] = fmt_double(cfg.replay_alpha);
  m["replay.beta0"] = fmt_double(cfg.replay_beta0);
  m["replay.eps_prio"] = fmt_double(cfg.replay_eps_prio);
  m["replay.n_step"] = std::to_string(cfg.n_step);
  m["schedule.total_decisions"] = std::to_string(cfg.schedule.total_decisions);
  m["schedule.warmup_decisions"] = std::to_string(cfg.schedule.warmup_decisions);
  m["schedule.batch_size"] = std::to_string(cfg.schedule.batch_size);
  m["schedule.train_every"] = std::to_string(cfg.schedule.train_every);
  m["schedule.target_sync"] = std::to_string(cfg.schedule.target_sync);
  m["schedule.eps_start"] = fmt_double(cfg.schedule.eps_c.start);
  m["schedule.eps_end"] = fmt_double(cfg.schedule.eps_c.end);
  m["schedule.eps_decay_frac"] = fmt_double(cfg.schedule.eps_c.decay_frac);
  m["schedule.eps_m_start"] = fmt_double(cfg.schedule.eps_m.start);
  m["schedule.eps_m_end"] = fmt_double(cfg.schedule.eps_m.end);
  m["schedule.eps_m_decay_frac"] = fmt_double(cfg.schedule.eps_m.decay_frac);
  m["harness.eval_period"] = std::to_string(cfg.eval_period);
  m["harness.eval_episodes"] = std::to_string(cfg.eval_episodes);
  return m;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.agent != "dmsoa" && cfg.agent != "osmboa")
    throw std::invalid_argument("config: unknown agent \"" + cfg.agent + "\"");
  if (cfg.seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  for (size_t i = 0; i < cfg.seeds.size(); ++i)
    for (size_t j = i + 1; j < cfg.seeds.size(); ++j)
      if (cfg.seeds[i] == cfg.seeds[j])
        throw std::invalid_argument("config: seeds must be distinct");
  if (cfg.agent == "dmsoa" && cfg.n_step != 1)
    throw std::invalid_argument(
        "config: replay.n_step must be 1 for dmsoa (its decisions already span k steps)");
  if (cfg.agent == "dmsoa" && cfg.wrapper.memory_window != 1)
    throw std::invalid_argument("config: acnomdp.memory_window must be 1 for dmsoa");
  if (cfg.n_step < 1) throw std::invalid_argument("config: replay.n_step must be >= 1");
  if (cfg.schedule.warmup_decisions >= cfg.schedule.total_decisions)
    throw std::invalid_argument("config: warmup_decisions must be below total_decisions");
  if (static_cast<std::size_t>(cfg.schedule.batch_size) > cfg.replay_capacity)
    throw std::invalid_argument("config: batch_size exceeds replay capacity");
  if (cfg.eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  make_env(cfg.env, cfg.env_max_steps);  // validates the env name
}

std::unique_ptr<Agent> make_agent(const RunConfig& cfg, const EnvDescriptor& desc,
                                  std::uint64_t seed) {
  const std::uint64_t init_seed = mix_seed(seed, 7);
  if (cfg.agent == "dmsoa")
    return std::make_unique<DmsoaAgent>(desc, cfg.wrapper, cfg.agent_cfg, init_seed);
  if (cfg.agent == "osmboa")
    return std::make_unique<OsmboaAgent>(desc, cfg.wrapper, cfg.agent_cfg, cfg.n_step,
                                         init_seed);
  throw std::invalid_argument("make_agent: unknown agent \"" + cfg.agent + "\"");
}

namespace {

struct SeedResult {
  std::vector<EpisodeLog> episodes;
  std::vector<EvalRow> evals;
  Checkpoint best;
  double best_eval = -std::numeric_limits<double>::infinity();
};

SeedResult train_one_seed(const RunConfig& cfg, std::uint64_t seed) {
  AcnomdpEnv wrapper(make_env(cfg.env, cfg.env_max_steps), cfg.wrapper);
  auto agent = make_agent(cfg, wrapper.base_descriptor(), seed);
  ReplayBuffer buffer(cfg.replay_capacity, cfg.replay_alpha, cfg.replay_eps_prio);
  Rng rng(mix_seed(seed, 100));

  SeedResult res;
  long long decisions = 0;
  TrainContext ctx;
  ctx.buffer = &buffer;
  ctx.schedule = cfg.schedule;
  ctx.decisions = &decisions;
  ctx.rng = &rng;
  ctx.beta0 = cfg.replay_beta0;
  ctx.learn = true;

  int episode = 0;
  int eval_counter = 0;

  auto evaluate = [&](int after_episode) {
    TrainContext ectx;
    ectx.schedule = cfg.schedule;
    ectx.learn = false;
    EvalRow row;
    row.seed = seed;
    row.after_episode = after_episode;
    row.decisions = decisions;
    for (int e = 0; e < cfg.eval_episodes; ++e) {
      const std::uint64_t env_seed =
          mix_seed(seed, 0x4000000000ull + static_cast<std::uint64_t>(eval_counter) * 4096 + e);
      const EpisodeLog lg = run_episode(*agent, wrapper, env_seed, ectx);
      row.mean_costed_return += lg.costed_return;
      row.mean_extrinsic_return += lg.extrinsic_return;
      row.mean_base_steps += lg.base_steps;
      row.measured_steps += lg.measured_steps;
      row.unmeasured_steps += lg.unmeasured_steps;
    }
    row.mean_costed_return /= cfg.eval_episodes;
    row.mean_extrinsic_return /= cfg.eval_episodes;
    row.mean_base_steps /= cfg.eval_episodes;
    row.ratio = row.measured_steps > 0
                    ? static_cast<double>(row.unmeasured_steps) / row.measured_steps
                    : 0.0;
    ++eval_counter;
    res.evals.push_back(row);
    if (row.mean_costed_return > res.best_eval) {
      res.best_eval = row.mean_costed_return;
      Checkpoint ckpt;
      auto meta = config_to_map(cfg);
      meta.erase("out");  // the output path is not part of the trained agent
      meta["seed"] = std::to_string(seed);
      meta["eval_costed_return"] = fmt_double(row.mean_costed_return);
      ckpt.meta = std::move(meta);
      ckpt.nets = agent->named_params();
      res.best = std::move(ckpt);
    }
  };

  while (decisions < cfg.schedule.total_decisions) {
    EpisodeLog log =
        run_episode(*agent, wrapper, mix_seed(seed, 1000 + static_cast<std::uint64_t>(episode)),
                    ctx);
    log.seed = seed;
    log.episode = episode;
    res.episodes.push_back(log);
    ++episode;
    if (cfg.eval_period > 0 && episode % cfg.eval_period == 0) evaluate(episode);
  }
  evaluate(episode);  // final evaluation so every run saves a checkpoint
  return res;
}

void write_episodes_csv(const std::string& path,
                        const std::vector<std::vector<EpisodeLog>>& per_seed) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "seed,episode,base_steps,decisions,measured_steps,unmeasured_steps,"
       "costed_return,extrinsic_return,end\n";
  for (const auto& episodes : per_seed)
    for (const auto& e : episodes)
      f << e.seed << ',' << e.episode << ',' << e.base_steps << ',' << e.decisions << ','
        << e.measured_steps << ',' << e.unmeasured_steps << ',' << fmt_double(e.costed_return)
        << ',' << fmt_double(e.extrinsic_return) << ','
        << (e.terminal ? "terminal" : "truncated") << '\n';
}

void write_eval_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "seed,after_episode,decisions,mean_costed_return,mean_extrinsic_return,"
       "mean_base_steps,measured_steps,unmeasured_steps,ratio\n";
  for (const auto& r : rows)
    f << r.seed << ',' << r.after_episode << ',' << r.decisions << ','
      << fmt_double(r.mean_costed_return) << ',' << fmt_double(r.mean_extrinsic_return) << ','
      << fmt_double(r.mean_base_steps) << ',' << r.measured_steps << ',' << r.unmeasured_steps
      << ',' << fmt_double(r.ratio) << '\n';
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "scope,episodes,mean_costed,std_costed,mean_length,std_length,"
       "measured_steps,unmeasured_steps,ratio,ratio_label\n";
  for (const auto& r : rows) {
    char label[32];
    std::snprintf(label, sizeof label, "1:%.2f", r.ratio);
    f << r.scope << ',' << r.episodes << ',' << fmt_double(r.mean_costed) << ','
      << fmt_double(r.std_costed) << ',' << fmt_double(r.mean_length) << ','
      << fmt_double(r.std_length) << ',' << r.measured_steps << ',' << r.unmeasured_steps << ','
      << fmt_double(r.ratio) << ',' << label << '\n';
  }
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m.mean) * (x - m.mean);
  m.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return m;
}

SummaryRow stats_over(const std::string& scope, const std::vector<const EpisodeLog*>& rows) {
  SummaryRow out;
  out.scope = scope;
  out.episodes = static_cast<int>(rows.size());
  std::vector<double> costed, length;
  costed.reserve(rows.size());
  length.reserve(rows.size());
  for (const auto* e : rows) {
    costed.push_back(e->costed_return);
    length.push_back(e->base_steps);
    out.measured_steps += e->measured_steps;
    out.unmeasured_steps += e->unmeasured_steps;
  }
  const Moments mc = moments(costed), ml = moments(length);
  out.mean_costed = mc.mean;
  out.std_costed = mc.stddev;
  out.mean_length = ml.mean;
  out.std_length = ml.stddev;
  out.ratio = out.measured_steps > 0
                  ? static_cast<double>(out.unmeasured_steps) / out.measured_steps
                  : 0.0;
  return out;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<SeedResult> results(n_seeds);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_seeds) return;
      try {
        results[i] = train_one_seed(cfg, cfg.seeds[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int n_workers = worker_count(n_seeds);
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult out;
  out.out_dir = cfg.out_dir;
  for (auto& r : results) {
    out.per_seed_episodes.push_back(r.episodes);
    out.eval_rows.insert(out.eval_rows.end(), r.evals.begin(), r.evals.end());
    out.best_eval_per_seed.push_back(r.best_eval);
  }

  write_episodes_csv(cfg.out_dir + "/episodes.csv", out.per_seed_episodes);
  write_eval_csv(cfg.out_dir + "/eval.csv", out.eval_rows);
  for (std::size_t i = 0; i < n_seeds; ++i)
    write_checkpoint(cfg.out_dir + "/best_" + std::to_string(cfg.seeds[i]) + ".ckpt",
                     results[i].best);
  write_summary_csv(cfg.out_dir + "/summary.csv", summarize_episodes(out.per_seed_episodes));

  std::ofstream conf(cfg.out_dir + "/config.txt", std::ios::trunc);
  for (const auto& [k, v] : config_to_map(cfg)) conf << k << " = " << v << '\n';
  return out;
}

std::vector<SummaryRow> summarize_episodes(
    const std::vector<std::vector<EpisodeLog>>& per_seed) {
  std::vector<SummaryRow> rows;
  std::vector<const EpisodeLog*> pooled;
  for (const auto& episodes : per_seed) {
    if (episodes.empty()) throw std::invalid_argument("summarize: a seed has no episodes");
    const std::size_t n = episodes.size();
    const std::size_t window = std::max<std::size_t>(1, n / 10);  // final 10%
    std::vector<const EpisodeLog*> tail;
    for (std::size_t i = n - window; i < n; ++i) tail.push_back(&episodes[i]);
    pooled.insert(pooled.end(), tail.begin(), tail.end());
    rows.push_back(stats_over("seed:" + std::to_string(episodes.front().seed), tail));
  }
  rows.push_back(stats_over("pooled", pooled));
  return rows;
}

std::vector<std::vector<EpisodeLog>> read_episode_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty file");

  std::vector<std::vector<EpisodeLog>> per_seed;
  std::map<std::uint64_t, std::size_t> seed_slot;
  while (std::getline(f, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 9) throw std::runtime_error(path + ": malformed row: " + line);
    EpisodeLog e;
    e.seed = static_cast<std::uint64_t>(std::stoull(cells[0]));
    e.episode = std::stoi(cells[1]);
    e.base_steps = std::stoi(cells[2]);
    e.decisions = std::stoi(cells[3]);
    e.measured_steps = std::stoi(cells[4]);
    e.unmeasured_steps = std::stoi(cells[5]);
    e.costed_return = std::stod(cells[6]);
    e.extrinsic_return = std::stod(cells[7]);
    e.terminal = cells[8] == "terminal";
    auto it = seed_slot.find(e.seed);
    if (it == seed_slot.end()) {
      it = seed_slot.emplace(e.seed, per_seed.size()).first;
      per_seed.emplace_back();
    }
    per_seed[it->second].push_back(e);
  }
  if (per_seed.empty()) throw std::runtime_error(path + ": no episode rows");
  return per_seed;
}

std::vector<SummaryRow> summarize(const std::string& run_dir) {
  const auto per_seed = read_episode_csv(run_dir + "/episodes.csv");
  auto rows = summarize_episodes(per_seed);
  write_summary_csv(run_dir + "/summary.csv", rows);
  return rows;
}

std::vector<CurveRow> emit_curves(const std::string& run_dir, int buckets) {
  if (buckets < 1) throw std::invalid_argument("emit_curves: buckets must be >= 1");
  const auto per_seed = read_episode_csv(run_dir + "/episodes.csv");

  int max_episode = 0;
  for (const auto& episodes : per_seed)
    for (const auto& e : episodes) max_episode = std::max(max_episode, e.episode);
  const int width = std::max(1, (max_episode + buckets) / buckets);  // ceil

  std::vector<std::vector<double>> costed(buckets), length(buckets);
  for (const auto& episodes : per_seed)
    for (const auto& e : episodes) {
      const int b = std::min(buckets - 1, e.episode / width);
      costed[b].push_back(e.costed_return);
      length[b].push_back(e.base_steps);
    }

  std::vector<CurveRow> rows;
  for (int b = 0; b < buckets; ++b) {
    if (costed[b].empty()) continue;
    CurveRow r;
    r.bucket = b;
    r.episode_lo = b * width;
    r.episode_hi = (b + 1) * width - 1;
    r.n = static_cast<int>(costed[b].size());
    const Moments mc = moments(costed[b]), ml = moments(length[b]);
    r.mean_costed = mc.mean;
    r.std_costed = mc.stddev;
    r.mean_length = ml.mean;
    r.std_length = ml.stddev;
    rows.push_back(r);
  }

  std::ofstream f(run_dir + "/curves.csv", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + run_dir + "/curves.csv for writing");
  f << "bucket,episode_lo,episode_hi,n,mean_costed,std_costed,mean_length,std_length\n";
  for (const auto& r : rows)
    f << r.bucket << ',' << r.episode_lo << ',' << r.episode_hi << ',' << r.n << ','
      << fmt_double(r.mean_costed) << ',' << fmt_double(r.std_costed) << ','
      << fmt_double(r.mean_length) << ',' << fmt_double(r.std_length) << '\n';
  return rows;
}

void export_traces(const std::string& checkpoint_path, const std::string& env_name,
                   int episodes, const std::string& out_dir) {
  if (episodes < 1) throw std::invalid_argument("export_traces: episodes must be >= 1");
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);

  const auto env_it = ckpt.meta.find("env");
  if (env_it == ckpt.meta.end())
    throw std::runtime_error("export_traces: checkpoint has no env metadata");
  if (env_it->second != env_name)
    throw std::runtime_error("export_traces: checkpoint was trained on \"" + env_it->second +
                             "\", not \"" + env_name + "\"");

  // Rebuild the run configuration from the stored metadata.
  RunConfig cfg = default_config(env_name, ckpt.meta.at("agent"));
  for (const auto& [k, v] : ckpt.meta) {
    if (k == "seed" || k == "eval_costed_return") continue;
    apply_key(cfg, k, v);
  }

  AcnomdpEnv wrapper(make_env(cfg.env, cfg.env_max_steps), cfg.wrapper);
  auto agent = make_agent(cfg, wrapper.base_descriptor(), 0);
  agent->load_params(ckpt.nets);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  TrainContext ectx;
  ectx.learn = false;
  for (int ep = 0; ep < episodes; ++ep) {
    MeasurementTrace trace;
    run_episode(*agent, wrapper, mix_seed(1234567, static_cast<std::uint64_t>(ep)), ectx,
                &trace);
    std::ofstream f(out_dir + "/trace_ep" + std::to_string(ep) + ".csv", std::ios::trunc);
    if (!f) throw std::runtime_error("export_traces: cannot write trace file");
    f << "decision,step,k_or_am,measured\n";
    int step = 0;
    for (const auto& d : trace.decisions)
      for (std::size_t i = 0; i < d.measured.size(); ++i, ++step)
        f << d.decision_index << ',' << step << ',' << d.k_or_am << ','
          << static_cast<int>(d.measured[i]) << '\n';
  }
}

}  // namespace frugal
