#include "dtx/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "dtx/errors.hpp"

namespace dtx::cfg {

bool known_scheduler(const std::string& name) {
  return name == "rr" || name == "pf" || name == "ummkp" || name == "ddqn" ||
         name == "dt-ddqn";
}

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct Parser {
  const std::string& file;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(file, line, msg); }

  double num(const std::string& v) const {
    try {
      size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) fail("trailing characters in number '" + v + "'");
      return d;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      fail("expected a number, got '" + v + "'");
    }
  }

  long integer(const std::string& v) const {
    const double d = num(v);
    const long l = static_cast<long>(d);
    if (static_cast<double>(l) != d) fail("expected an integer, got '" + v + "'");
    return l;
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("expected a boolean, got '" + v + "'");
  }

  std::vector<double> list(const std::string& v, size_t n) const {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(num(trim(item)));
    if (n != 0 && out.size() != n)
      fail("expected " + std::to_string(n) + " comma-separated values");
    return out;
  }
};

void apply(ExperimentConfig& c, Parser& p, const std::string& section,
           const std::string& key, const std::string& value) {
  if (section == "run") {
    if (key == "seed") c.seed = static_cast<std::uint64_t>(p.integer(value));
    else if (key == "scheduler") {
      if (!known_scheduler(value)) p.fail("unknown scheduler '" + value + "'");
      c.scheduler = value;
    } else if (key == "episodes") c.episodes = p.integer(value);
    else if (key == "slots") c.slots = p.integer(value);
    else if (key == "out") c.out_dir = value;
    else if (key == "trace") c.trace_path = value;
    else if (key == "checkpoint") c.checkpoint_path = value;
    else if (key == "eval_runs") c.eval_runs = p.integer(value);
    else p.fail("unknown key '" + key + "' in [run]");
  } else if (section == "sim") {
    if (key == "slot_length") c.env.d = p.num(value);
    else if (key == "t_cap") c.env.t_cap = p.num(value);
    else if (key == "dbar") c.env.dbar = p.num(value);
    else if (key == "v_weight") c.env.v_weight = p.num(value);
    else if (key == "sync_threshold") c.env.sync_threshold = p.num(value);
    else if (key == "rtt_min") c.env.plant.rtt_lo = p.num(value);
    else if (key == "rtt_max") c.env.plant.rtt_hi = p.num(value);
    else if (key == "noise_sigma") c.env.plant.noise_sigma = p.num(value);
    else if (key == "bias_threshold") c.env.plant.bias_threshold = p.num(value);
    else p.fail("unknown key '" + key + "' in [sim]");
  } else if (section == "queues") {
    if (key == "f_ghz") {
      const auto v = p.list(value, kNumQueues);
      std::copy(v.begin(), v.end(), c.env.params.f_ghz.begin());
    } else if (key == "kappa") {
      const auto v = p.list(value, kNumQueues);
      std::copy(v.begin(), v.end(), c.env.params.kappa.begin());
    } else if (key == "l_max") {
      const auto v = p.list(value, kNumQueues);
      std::copy(v.begin(), v.end(), c.env.params.l_max.begin());
    } else p.fail("unknown key '" + key + "' in [queues]");
  } else if (section == "arrivals") {
    auto& a = c.arrivals;
    if (key == "gops_per_slot") a.gops_per_slot = p.num(value);
    else if (key == "poisson") a.poisson = p.boolean(value);
    else if (key == "bits_min") a.bits_lo = p.num(value);
    else if (key == "bits_max") a.bits_hi = p.num(value);
    else if (key == "requests_mean") a.requests_mean = p.num(value);
    else if (key == "mix") {
      const auto v = p.list(value, 3);
      a.p_high = v[0];
      a.p_medium = v[1];
      a.p_low = v[2];
    } else if (key == "surge_slot") a.surge_slot = p.integer(value);
    else if (key == "surge_len") a.surge_len = p.integer(value);
    else if (key == "surge_p_high") a.surge_p_high = p.num(value);
    else if (key == "surge_rate_factor") a.surge_rate_factor = p.num(value);
    else if (key == "pool_size") a.pool_size = static_cast<int>(p.integer(value));
    else if (key == "frame_width") a.pool_profile.width = static_cast<int>(p.integer(value));
    else if (key == "frame_height") a.pool_profile.height = static_cast<int>(p.integer(value));
    else if (key == "frames_per_gop")
      a.pool_profile.num_frames = static_cast<int>(p.integer(value));
    else if (key == "texture_range") {
      const auto v = p.list(value, 2);
      a.texture_lo = v[0];
      a.texture_hi = v[1];
    } else if (key == "motion_range") {
      const auto v = p.list(value, 2);
      a.motion_lo = v[0];
      a.motion_hi = v[1];
    } else p.fail("unknown key '" + key + "' in [arrivals]");
  } else if (section == "twe") {
    if (key == "samples") c.twe_samples = p.integer(value);
    else if (key == "split") c.twe_split = p.num(value);
    else if (key == "hidden") c.twe_train.hidden = static_cast<int>(p.integer(value));
    else if (key == "epochs") c.twe_train.epochs = static_cast<int>(p.integer(value));
    else if (key == "lr") c.twe_train.lr = p.num(value);
    else if (key == "momentum") c.twe_train.momentum = p.num(value);
    else if (key == "lambda0") c.twe_train.lambda0 = p.num(value);
    else if (key == "fixed_lambda") c.twe_train.fixed_lambda = p.boolean(value);
    else if (key == "lambda_every") c.twe_train.lambda_every = static_cast<int>(p.integer(value));
    else if (key == "model") c.twe_model_path = value;
    else p.fail("unknown key '" + key + "' in [twe]");
  } else if (section == "rl") {
    auto& r = c.agent;
    if (key == "hidden") {
      const auto v = p.list(value, 0);
      r.hidden.clear();
      for (double h : v) r.hidden.push_back(static_cast<int>(h));
      if (r.hidden.empty()) p.fail("rl.hidden needs at least one layer size");
    } else if (key == "lr") r.lr = p.num(value);
    else if (key == "gamma") r.gamma = p.num(value);
    else if (key == "batch_size") r.batch_size = static_cast<size_t>(p.integer(value));
    else if (key == "replay") r.replay_capacity = static_cast<size_t>(p.integer(value));
    else if (key == "warmup") r.warmup = static_cast<size_t>(p.integer(value));
    else if (key == "target_every") r.target_every = p.integer(value);
    else if (key == "soft_target") r.soft_target = p.boolean(value);
    else if (key == "tau") r.tau = p.num(value);
    else if (key == "eps_start") r.eps_start = p.num(value);
    else if (key == "eps_end") r.eps_end = p.num(value);
    else if (key == "eps_fraction") r.eps_fraction = p.num(value);
    else if (key == "split_reward") r.split_reward = p.boolean(value);
    else if (key == "l_scale") r.l_scale = p.num(value);
    else if (key == "z_scale") r.z_scale = p.num(value);
    else if (key == "omega_scale") r.omega_scale = p.num(value);
    else if (key == "bits_scale") r.bits_scale = p.num(value);
    else p.fail("unknown key '" + key + "' in [rl]");
  } else {
    p.fail("unknown section [" + section + "]");
  }
}

ExperimentConfig parse(std::istream& in, const std::string& name) {
  ExperimentConfig c;
  Parser p{name};
  std::string line, section;
  while (std::getline(in, line)) {
    ++p.line;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') p.fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) p.fail("expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (section.empty()) p.fail("key '" + key + "' outside any section");
    if (key.empty()) p.fail("empty key");
    apply(c, p, section, key, value);
  }
  c.validate();
  return c;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse(in, path);
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text,
                                               const std::string& name) {
  std::istringstream in(text);
  return parse(in, name);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("config", 0, msg); };
  if (!known_scheduler(scheduler)) fail("unknown scheduler '" + scheduler + "'");
  if (env.d <= 0.0) fail("slot_length must be > 0");
  if (env.t_cap <= 0.0) fail("t_cap must be > 0");
  if (env.dbar <= 0.0) fail("dbar must be > 0");
  if (env.v_weight < 0.0) fail("v_weight must be >= 0");
  if (env.plant.rtt_lo < 0.0 || env.plant.rtt_hi < env.plant.rtt_lo)
    fail("rtt range is invalid");
  if (env.plant.noise_sigma < 0.0 || env.plant.noise_sigma > 0.2)
    fail("noise_sigma must be in [0, 0.2]");
  for (auto q : all_queues()) {
    if (env.params.f(q) <= 0.0 || env.params.k(q) <= 0.0) fail("queue f/kappa must be > 0");
    if (env.params.lmax(q) <= 0.0) fail("queue l_max must be > 0");
  }
  if (arrivals.bits_lo <= 0.0 || arrivals.bits_hi < arrivals.bits_lo)
    fail("arrival bit range is invalid");
  if (arrivals.p_high < 0 || arrivals.p_medium < 0 || arrivals.p_low < 0 ||
      arrivals.p_high + arrivals.p_medium + arrivals.p_low <= 0.0)
    fail("request mix must be non-negative and sum to a positive value");
  if (arrivals.pool_size <= 0) fail("pool_size must be > 0");
  if (arrivals.pool_profile.width < 3 || arrivals.pool_profile.height < 3)
    fail("synthetic frames must be at least 3x3");
  if (arrivals.pool_profile.num_frames < 2) fail("frames_per_gop must be >= 2");
  if (twe_split <= 0.0 || twe_split >= 1.0) fail("twe split must be in (0,1)");
  if (twe_samples < 63) fail("twe samples too small for a train/test split");
  if (slots <= 0 || episodes <= 0) fail("slots and episodes must be > 0");
  if (eval_runs <= 0) fail("eval_runs must be > 0");
  if (agent.gamma < 0.0 || agent.gamma > 1.0) fail("gamma must be in [0,1]");
  if (agent.batch_size == 0 || agent.replay_capacity < agent.batch_size)
    fail("replay capacity must cover the batch size");
  if (agent.eps_start < 0 || agent.eps_start > 1 || agent.eps_end < 0 || agent.eps_end > 1)
    fail("epsilon bounds must lie in [0,1]");
}

}  // namespace dtx::cfg
