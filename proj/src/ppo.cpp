#include "jssp/ppo.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "jssp/rng.hpp"

namespace jssp {

using nlohmann::json;
namespace nnx = jssp::nn;

// ---- config ------------------------------------------------------------------

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (iterations < 0) bad.push_back("iterations must be >= 0");
  if (trajectories < 1) bad.push_back("trajectories must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) bad.push_back("gamma must be in (0, 1]");
  if (epochs < 1) bad.push_back("epochs must be >= 1");
  if (!(clip > 0.0)) bad.push_back("clip must be positive");
  if (!(lr > 0.0)) bad.push_back("lr must be positive");
  if (!(reward_scale > 0.0)) bad.push_back("reward_scale must be positive");
  if (jobs < 1 || machines < 1) bad.push_back("jobs and machines must be >= 1");
  if (duration_lo < 1 || duration_hi < duration_lo) bad.push_back("need 1 <= duration_lo <= duration_hi");
  if (validation_size < 1) bad.push_back("validation_size must be >= 1");
  if (validate_every < 1) bad.push_back("validate_every must be >= 1");
  if (rolling_window < 1) bad.push_back("rolling_window must be >= 1");
  if (threads < 1) bad.push_back("threads must be >= 1");
  if (!bad.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw std::invalid_argument(msg);
  }
  policy.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_int(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out))
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

using Setter = void (*)(TrainConfig&, const std::string&, const std::string&);

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"iterations", [](TrainConfig& c, const std::string& k, const std::string& v) { c.iterations = parse_int<int>(k, v); }},
      {"trajectories", [](TrainConfig& c, const std::string& k, const std::string& v) { c.trajectories = parse_int<int>(k, v); }},
      {"gamma", [](TrainConfig& c, const std::string& k, const std::string& v) { c.gamma = parse_real(k, v); }},
      {"epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.epochs = parse_int<int>(k, v); }},
      {"clip", [](TrainConfig& c, const std::string& k, const std::string& v) { c.clip = parse_real(k, v); }},
      {"c_policy", [](TrainConfig& c, const std::string& k, const std::string& v) { c.c_policy = parse_real(k, v); }},
      {"c_value", [](TrainConfig& c, const std::string& k, const std::string& v) { c.c_value = parse_real(k, v); }},
      {"c_entropy", [](TrainConfig& c, const std::string& k, const std::string& v) { c.c_entropy = parse_real(k, v); }},
      {"lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.lr = parse_real(k, v); }},
      {"reward_scale", [](TrainConfig& c, const std::string& k, const std::string& v) { c.reward_scale = parse_real(k, v); }},
      {"jobs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.jobs = parse_int<int>(k, v); }},
      {"machines", [](TrainConfig& c, const std::string& k, const std::string& v) { c.machines = parse_int<int>(k, v); }},
      {"duration_lo", [](TrainConfig& c, const std::string& k, const std::string& v) { c.duration_lo = parse_int<Time>(k, v); }},
      {"duration_hi", [](TrainConfig& c, const std::string& k, const std::string& v) { c.duration_hi = parse_int<Time>(k, v); }},
      {"semantics", [](TrainConfig& c, const std::string& k, const std::string& v) {
         try {
           c.semantics = parse_insertion(v);
         } catch (const std::exception& e) {
           throw std::invalid_argument("config key '" + k + "': " + e.what());
         }
       }},
      {"validation_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.validation_size = parse_int<int>(k, v); }},
      {"validate_every", [](TrainConfig& c, const std::string& k, const std::string& v) { c.validate_every = parse_int<int>(k, v); }},
      {"rolling_window", [](TrainConfig& c, const std::string& k, const std::string& v) { c.rolling_window = parse_int<int>(k, v); }},
      {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = parse_int<std::uint64_t>(k, v); }},
      {"init_seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.init_seed = parse_int<std::uint64_t>(k, v); }},
      {"validation_seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.validation_seed = parse_int<std::uint64_t>(k, v); }},
      {"threads", [](TrainConfig& c, const std::string& k, const std::string& v) { c.threads = parse_int<int>(k, v); }},
      {"k_layers", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.k_layers = parse_int<int>(k, v); }},
      {"hidden_gin", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.hidden_gin = parse_int<int>(k, v); }},
      {"embed_dim", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.embed_dim = parse_int<int>(k, v); }},
      {"hidden_head", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.hidden_head = parse_int<int>(k, v); }},
      {"epsilon_gin", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.epsilon_gin = parse_real(k, v); }},
      {"feature_scale", [](TrainConfig& c, const std::string& k, const std::string& v) { c.policy.feature_scale = parse_real(k, v); }},
      {"adjacency", [](TrainConfig& c, const std::string& k, const std::string& v) {
         try {
           c.policy.adjacency = parse_adjacency(v);
         } catch (const std::exception& e) {
           throw std::invalid_argument("config key '" + k + "': " + e.what());
         }
       }},
      {"checkpoint", [](TrainConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; }},
      {"last_checkpoint", [](TrainConfig& c, const std::string&, const std::string& v) { c.last_checkpoint = v; }},
      {"curve", [](TrainConfig& c, const std::string&, const std::string& v) { c.curve = v; }},
      {"resume", [](TrainConfig& c, const std::string&, const std::string& v) { c.resume = v; }},
  };
  return table;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
      throw std::invalid_argument("unknown config key '" + key + "' on line " + std::to_string(lineno));
    it->second(c, key, value);
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) { return parse_train_config(read_text_file(path)); }

// ---- rollouts ----------------------------------------------------------------

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Trajectory rollout(PolicyParams& policy, const Instance& inst, Insertion semantics, double reward_scale,
                   std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  State s = reset(inst, semantics);
  Trajectory traj;
  traj.instance_id = inst.id;
  traj.num_ops = inst.num_ops();
  traj.h0 = s.lower_bound();
  while (!s.done()) {
    Step st;
    st.obs = observe(s, policy.config);
    nnx::Tape tape(&policy.store, false);
    auto f = policy_forward(tape, policy, st.obs, nnx::BnMode::Train, false, true);
    const Tensor& lp = f.log_probs.value();
    std::vector<double> probs(lp.size(), 0.0);
    for (std::size_t k = 0; k < lp.size(); ++k)
      if (st.obs.mask[k]) probs[k] = std::exp(lp[k]);
    st.action = select_action(probs, SelectMode::Sample, &rng);
    st.old_log_prob = lp[st.action];
    st.value = f.value.value()[0];
    const StepOutcome out = s.step(inst.op_at(st.obs.candidates[st.action]));
    st.reward = static_cast<double>(out.reward) * reward_scale;
    traj.steps.push_back(std::move(st));
  }
  traj.makespan = s.makespan();
  return traj;
}

std::vector<Trajectory> collect_trajectories(PolicyParams& policy, const TrainConfig& config,
                                             std::uint64_t iteration_seed) {
  std::vector<Trajectory> out(config.trajectories);
  parallel_for(out.size(), config.threads, [&](std::size_t n) {
    Instance inst = generate_taillard(config.jobs, config.machines, config.duration_lo, config.duration_hi,
                                      derive_seed(iteration_seed, n, 0));
    out[n] = rollout(policy, inst, config.semantics, config.reward_scale, derive_seed(iteration_seed, n, 1));
  });
  return out;
}

std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
  if (traj.num_ops <= 0 || static_cast<int>(traj.steps.size()) != traj.num_ops)
    throw std::invalid_argument("incomplete trajectory: " + std::to_string(traj.steps.size()) + " of " +
                                std::to_string(traj.num_ops) + " steps");
  std::vector<double> g(traj.steps.size());
  double acc = 0.0;
  for (std::size_t t = traj.steps.size(); t-- > 0;) {
    acc = traj.steps[t].reward + gamma * acc;
    g[t] = acc;
  }
  return g;
}

std::vector<double> advantages(const Trajectory& traj, double gamma) {
  auto g = returns_to_go(traj, gamma);
  for (std::size_t t = 0; t < g.size(); ++t) g[t] -= traj.steps[t].value;
  return g;
}

LossReport ppo_losses(const std::vector<Trajectory>& trajs, PolicyParams& theta, const TrainConfig& config,
                      bool accumulate_grad, bool update_stats) {
  LossReport rep;
  for (const auto& traj : trajs) {
    const auto ret = returns_to_go(traj, config.gamma);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Step& st = traj.steps[t];
      const double adv = ret[t] - st.value;
      nnx::Tape tape(&theta.store, accumulate_grad);
      auto f = policy_forward(tape, theta, st.obs, nnx::BnMode::Train, update_stats, true);
      nnx::Var ratio = nnx::exp(nnx::add_scalar(nnx::log_prob(f.log_probs, st.action), -st.old_log_prob));
      nnx::Var surr = nnx::minimum(nnx::scale(ratio, adv),
                                   nnx::scale(nnx::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip), adv));
      nnx::Var verr = nnx::square(nnx::add_scalar(f.value, -ret[t]));
      nnx::Var ent = nnx::entropy_masked(f.scores, st.obs.mask);
      nnx::Var total = nnx::sub(nnx::scale(verr, config.c_value),
                                nnx::add(nnx::scale(surr, config.c_policy), nnx::scale(ent, config.c_entropy)));
      rep.clip += surr.value()[0];
      rep.value += verr.value()[0];
      rep.entropy += ent.value()[0];
      rep.total += total.value()[0];
      rep.max_ratio_dev = std::max(rep.max_ratio_dev, std::abs(ratio.value()[0] - 1.0));
      if (accumulate_grad) tape.backward(total);
    }
  }
  if (!std::isfinite(rep.total)) throw NonFiniteError("non-finite PPO loss");
  return rep;
}

// ---- training ------------------------------------------------------------------

std::string curve_header() {
  return "iteration,instances_seen,avg_makespan_train,avg_makespan_validation,loss_total,loss_clip,loss_value,"
         "loss_entropy";
}

std::string curve_line(const CurveRow& r) {
  char buf[512];
  char val[64] = "";
  if (r.avg_makespan_validation) std::snprintf(val, sizeof val, "%.4f", *r.avg_makespan_validation);
  std::snprintf(buf, sizeof buf, "%d,%lld,%.4f,%s,%.10g,%.10g,%.10g,%.10g", r.iteration,
                static_cast<long long>(r.instances_seen), r.avg_makespan_train, val, r.loss.total, r.loss.clip,
                r.loss.value, r.loss.entropy);
  return buf;
}

std::vector<Instance> validation_instances(const TrainConfig& config) {
  std::vector<Instance> out;
  for (int k = 0; k < config.validation_size; ++k) {
    Instance inst = generate_taillard(config.jobs, config.machines, config.duration_lo, config.duration_hi,
                                      derive_seed(config.validation_seed, static_cast<std::uint64_t>(k)));
    inst.id = "val" + std::to_string(k);
    out.push_back(std::move(inst));
  }
  return out;
}

double average_greedy_makespan(PolicyParams& params, const std::vector<Instance>& instances, Insertion semantics,
                               int threads) {
  if (instances.empty()) return 0.0;
  std::vector<Time> mk(instances.size());
  parallel_for(instances.size(), threads,
               [&](std::size_t i) { mk[i] = run_policy(params, instances[i], semantics).makespan; });
  double sum = 0.0;
  for (Time m : mk) sum += static_cast<double>(m);
  return sum / static_cast<double>(mk.size());
}

std::vector<EvalReport> evaluate(PolicyParams& params, const std::vector<Instance>& instances, const RefTable& refs,
                                 Insertion semantics, const std::string& method, int threads) {
  std::vector<EvalReport> rows(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    auto r = run_policy(params, instances[i], semantics);
    rows[i] = {instances[i].id, method, r.makespan, relative_gap(r.makespan, lookup_ref(refs, instances[i].id)),
               r.wall_ms, semantics};
  });
  return rows;
}

namespace {

json adam_to_json(const nnx::AdamState& opt) {
  json m = json::array(), v = json::array();
  for (const auto& t : opt.m) m.push_back(t.values());
  for (const auto& t : opt.v) v.push_back(t.values());
  return {{"step", opt.step}, {"m", m}, {"v", v}};
}

void adam_from_json(const json& j, nnx::AdamState& opt) {
  opt.step = j.at("step").get<std::int64_t>();
  const json& m = j.at("m");
  const json& v = j.at("v");
  if (m.size() != opt.m.size() || v.size() != opt.v.size())
    throw CheckpointError("optimizer state does not match the network");
  for (std::size_t i = 0; i < opt.m.size(); ++i) {
    auto mv = m[i].get<std::vector<double>>();
    auto vv = v[i].get<std::vector<double>>();
    if (mv.size() != opt.m[i].size() || vv.size() != opt.v[i].size())
      throw CheckpointError("optimizer moment " + std::to_string(i) + " has the wrong size");
    opt.m[i].values() = std::move(mv);
    opt.v[i].values() = std::move(vv);
  }
}

}  // namespace

TrainResult train(const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  const auto val = validation_instances(config);
  TrainResult result;
  PolicyParams theta = init_params(config.policy, config.init_seed);
  nnx::AdamState opt(theta.store, config.lr);
  int first = 1;
  std::int64_t seen = 0;
  std::deque<Time> window;

  if (!config.resume.empty()) {
    json meta;
    theta = load_checkpoint(config.resume, &meta, &config.policy);
    opt = nnx::AdamState(theta.store, config.lr);
    try {
      adam_from_json(meta.at("adam"), opt);
      first = meta.at("iteration").get<int>() + 1;
      seen = meta.at("instances_seen").get<std::int64_t>();
      result.best_validation = meta.at("best_validation").get<double>();
      result.initial_validation = meta.at("initial_validation").get<double>();
      for (Time m : meta.at("window").get<std::vector<Time>>()) window.push_back(m);
    } catch (const json::exception& e) {
      throw CheckpointError(config.resume + ": not a resumable checkpoint (" + e.what() + ")");
    }
    result.best = load_checkpoint(config.checkpoint, nullptr, &config.policy);
  } else {
    result.initial_validation = average_greedy_makespan(theta, val, config.semantics, config.threads);
    result.best_validation = result.initial_validation;
    result.best = theta;
    save_checkpoint(config.checkpoint, theta,
                    {{"iteration", 0}, {"validation", result.initial_validation},
                     {"semantics", insertion_name(config.semantics)}});
  }

  std::ofstream curve(config.curve, config.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!curve) throw std::runtime_error("cannot write curve log " + config.curve);
  if (config.resume.empty()) curve << curve_header() << '\n';

  auto save_last = [&](int it) {
    json meta = {{"iteration", it},
                 {"instances_seen", seen},
                 {"best_validation", result.best_validation},
                 {"initial_validation", result.initial_validation},
                 {"window", std::vector<Time>(window.begin(), window.end())},
                 {"adam", adam_to_json(opt)},
                 {"semantics", insertion_name(config.semantics)}};
    save_checkpoint(config.last_checkpoint, theta, meta);
  };

  for (int it = first; it <= config.iterations; ++it) {
    CurveRow row;
    row.iteration = it;
    try {
      PolicyParams old = theta;  // behaviour policy, synced after every update
      auto trajs = collect_trajectories(old, config, derive_seed(config.seed, static_cast<std::uint64_t>(it)));
      for (int e = 0; e < config.epochs; ++e) {
        theta.store.zero_grad();
        row.loss = ppo_losses(trajs, theta, config, true, true);
        nnx::adam_step(theta.store, opt);
      }
      for (const auto& tr : trajs) {
        window.push_back(tr.makespan);
        if (static_cast<int>(window.size()) > config.rolling_window) window.pop_front();
      }
      seen += static_cast<std::int64_t>(trajs.size());
    } catch (const NonFiniteError& e) {
      const std::string dump = config.last_checkpoint + ".crash.json";
      try {
        save_checkpoint(dump, theta, {{"iteration", it}, {"error", e.what()}});
      } catch (const std::exception&) {
      }
      throw std::runtime_error("training aborted at iteration " + std::to_string(it) + ": " + e.what() +
                               " (parameters dumped to " + dump + ")");
    }
    row.instances_seen = seen;
    double sum = 0.0;
    for (Time m : window) sum += static_cast<double>(m);
    row.avg_makespan_train = sum / static_cast<double>(window.size());

    if (it % config.validate_every == 0 || it == config.iterations) {
      const double v = average_greedy_makespan(theta, val, config.semantics, config.threads);
      row.avg_makespan_validation = v;
      if (v < result.best_validation) {
        result.best_validation = v;
        result.best = theta;
        save_checkpoint(config.checkpoint, theta,
                        {{"iteration", it}, {"validation", v}, {"semantics", insertion_name(config.semantics)}});
      }
      save_last(it);
    }
    curve << curve_line(row) << '\n' << std::flush;
    result.curve.push_back(row);
    if (progress) progress(row);
  }
  return result;
}

}  // namespace jssp
