#include "jssp/policy.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace jssp {

using nlohmann::json;
namespace nnx = jssp::nn;

namespace {

constexpr int kCheckpointVersion = 1;

std::string gin(int k, const char* part) { return "gin" + std::to_string(k) + "." + part; }

struct Layout {
  std::string name;
  std::size_t rows, cols;
  enum Init { Xavier, Zero, One } init;
};

std::vector<Layout> layout(const PolicyConfig& c) {
  const std::size_t h = c.hidden_gin, p = c.embed_dim, hh = c.hidden_head;
  std::vector<Layout> out;
  for (int k = 0; k < c.k_layers; ++k) {
    const std::size_t in = k == 0 ? 2 : p;
    out.push_back({gin(k, "lin1.w"), in, h, Layout::Xavier});
    out.push_back({gin(k, "lin1.b"), 1, h, Layout::Zero});
    out.push_back({gin(k, "bn1.gamma"), 1, h, Layout::One});
    out.push_back({gin(k, "bn1.beta"), 1, h, Layout::Zero});
    out.push_back({gin(k, "lin2.w"), h, p, Layout::Xavier});
    out.push_back({gin(k, "lin2.b"), 1, p, Layout::Zero});
    out.push_back({gin(k, "bn2.gamma"), 1, p, Layout::One});
    out.push_back({gin(k, "bn2.beta"), 1, p, Layout::Zero});
  }
  for (const char* head : {"actor", "critic"}) {
    const std::string s(head);
    const std::size_t in = s == "actor" ? 2 * p : p;
    out.push_back({s + ".lin1.w", in, hh, Layout::Xavier});
    out.push_back({s + ".lin1.b", 1, hh, Layout::Zero});
    out.push_back({s + ".lin2.w", hh, hh, Layout::Xavier});
    out.push_back({s + ".lin2.b", 1, hh, Layout::Zero});
    out.push_back({s + ".lin3.w", hh, 1, Layout::Xavier});
    out.push_back({s + ".lin3.b", 1, 1, Layout::Zero});
  }
  return out;
}

std::vector<nnx::BatchNormStats> fresh_stats(const PolicyConfig& c) {
  std::vector<nnx::BatchNormStats> bn;
  for (int k = 0; k < c.k_layers; ++k) {
    bn.emplace_back(static_cast<std::size_t>(c.hidden_gin));
    bn.emplace_back(static_cast<std::size_t>(c.embed_dim));
  }
  return bn;
}

nnx::Var linear(nnx::Tape& t, nnx::Var x, const std::string& prefix) {
  return nnx::dense(x, t.param(prefix + ".w"), t.param(prefix + ".b"));
}

nnx::Var head(nnx::Tape& t, nnx::Var x, const std::string& name) {
  x = nnx::relu(linear(t, x, name + ".lin1"));
  x = nnx::relu(linear(t, x, name + ".lin2"));
  return linear(t, x, name + ".lin3");
}

}  // namespace

void PolicyConfig::validate() const {
  std::vector<std::string> bad;
  if (k_layers < 1) bad.push_back("k_layers must be >= 1");
  if (hidden_gin < 1) bad.push_back("hidden_gin must be >= 1");
  if (embed_dim < 1) bad.push_back("embed_dim must be >= 1");
  if (hidden_head < 1) bad.push_back("hidden_head must be >= 1");
  if (!(feature_scale > 0.0)) bad.push_back("feature_scale must be positive");
  if (!std::isfinite(epsilon_gin)) bad.push_back("epsilon_gin must be finite");
  if (bad.empty()) return;
  std::string msg = "invalid policy config:";
  for (const auto& b : bad) msg += " " + b + ";";
  throw std::invalid_argument(msg);
}

bool operator==(const PolicyParams& a, const PolicyParams& b) {
  if (!(a.config == b.config) || a.bn != b.bn || a.store.size() != b.store.size()) return false;
  for (std::size_t i = 0; i < a.store.size(); ++i)
    if (a.store.name(i) != b.store.name(i) || !(a.store.value(i) == b.store.value(i))) return false;
  return true;
}

PolicyParams init_params(const PolicyConfig& config, std::uint64_t seed) {
  config.validate();
  PolicyParams out;
  out.config = config;
  Rng rng(seed);
  for (const auto& l : layout(config)) {
    Tensor t(l.rows, l.cols, l.init == Layout::One ? 1.0 : 0.0);
    if (l.init == Layout::Xavier) {
      const double a = std::sqrt(6.0 / static_cast<double>(l.rows + l.cols));
      for (double& v : t.values()) v = a * (2.0 * rng.uniform01() - 1.0);
    }
    out.store.add(l.name, std::move(t));
  }
  out.bn = fresh_stats(config);
  return out;
}

void zero_params(PolicyParams& params, const std::string& prefix) {
  for (std::size_t i = 0; i < params.store.size(); ++i)
    if (params.store.name(i).rfind(prefix, 0) == 0) params.store.value(i).fill(0.0);
}

Observation observe(const State& s, const PolicyConfig& config) {
  const Instance& inst = s.instance();
  Observation o;
  o.features = node_features(s, config.feature_scale);
  o.adj = adjacency(s, config.adjacency);
  o.candidates.resize(inst.num_jobs);
  o.mask.assign(inst.num_jobs, 0);
  for (int j = 0; j < inst.num_jobs; ++j) o.candidates[j] = inst.flat(j, inst.ops_in_job(j) - 1);
  for (OpId op : s.eligible()) {
    o.candidates[op.job] = inst.flat(op);
    o.mask[op.job] = 1;
  }
  return o;
}

PolicyForward policy_forward(nnx::Tape& t, PolicyParams& params, const Observation& obs,
                             nnx::BnMode mode, bool update_stats, bool with_value) {
  const PolicyConfig& c = params.config;
  nnx::Var h = t.constant(obs.features);
  for (int k = 0; k < c.k_layers; ++k) {
    nnx::Var self = c.epsilon_gin == 0.0 ? h : nnx::scale(h, 1.0 + c.epsilon_gin);
    nnx::Var x = nnx::add(self, nnx::neighbor_sum(h, obs.adj));
    x = linear(t, x, gin(k, "lin1"));
    x = nnx::batch_norm(x, t.param(gin(k, "bn1.gamma")), t.param(gin(k, "bn1.beta")),
                        params.bn[2 * k], mode, update_stats);
    x = nnx::relu(x);
    x = linear(t, x, gin(k, "lin2"));
    x = nnx::batch_norm(x, t.param(gin(k, "bn2.gamma")), t.param(gin(k, "bn2.beta")),
                        params.bn[2 * k + 1], mode, update_stats);
    h = nnx::relu(x);
  }
  PolicyForward f;
  f.node_emb = h;
  f.graph_emb = nnx::mean_rows(h);
  nnx::Var cand = nnx::gather_rows(h, obs.candidates);
  nnx::Var pair = nnx::concat_cols(cand, nnx::repeat_rows(f.graph_emb, obs.candidates.size()));
  f.scores = head(t, pair, "actor");
  f.log_probs = nnx::log_softmax_masked(f.scores, obs.mask);
  if (with_value) f.value = head(t, f.graph_emb, "critic");
  return f;
}

Embedding embed(PolicyParams& params, const Tensor& features, const Adjacency& adj, nnx::BnMode mode) {
  Observation obs;
  obs.features = features;
  obs.adj = adj;
  obs.candidates = {0};
  obs.mask = {1};
  nnx::Tape t(&params.store, false);
  auto f = policy_forward(t, params, obs, mode, false, false);
  return {f.node_emb.value(), f.graph_emb.value()};
}

ActionDistribution actor_distribution(PolicyParams& params, const State& s, nnx::BnMode mode) {
  if (s.done()) throw std::invalid_argument("no eligible operation in a terminal state");
  Observation obs = observe(s, params.config);
  nnx::Tape t(&params.store, false);
  auto f = policy_forward(t, params, obs, mode, false, false);
  ActionDistribution d;
  d.mask = obs.mask;
  for (int flat : obs.candidates) d.ops.push_back(s.instance().op_at(flat));
  const Tensor& lp = f.log_probs.value();
  d.probs.assign(lp.size(), 0.0);
  for (std::size_t k = 0; k < lp.size(); ++k)
    if (d.mask[k]) d.probs[k] = std::exp(lp[k]);
  return d;
}

double critic_value(PolicyParams& params, const State& s, nnx::BnMode mode) {
  Observation obs = observe(s, params.config);
  if (s.done()) obs.mask.assign(obs.mask.size(), 1);  // the actor half is unused here
  nnx::Tape t(&params.store, false);
  return policy_forward(t, params, obs, mode, false, true).value.value()[0];
}

int select_action(const std::vector<double>& probs, SelectMode mode, Rng* rng) {
  int best = -1;
  if (mode == SelectMode::Greedy) {
    for (std::size_t k = 0; k < probs.size(); ++k)
      if (probs[k] > 0.0 && (best < 0 || probs[k] > probs[best])) best = static_cast<int>(k);
  } else {
    if (!rng) throw std::invalid_argument("sampling needs a random stream");
    const double u = rng->uniform01();
    double cum = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (probs[k] <= 0.0) continue;
      cum += probs[k];
      best = static_cast<int>(k);
      if (u < cum) break;
    }
  }
  if (best < 0) throw std::invalid_argument("distribution has no positive entry");
  return best;
}

PolicyRollout run_policy(PolicyParams& params, const Instance& inst, Insertion mode) {
  auto t0 = std::chrono::steady_clock::now();
  State s = reset(inst, mode);
  while (!s.done()) {
    auto d = actor_distribution(params, s, nnx::BnMode::Eval);
    s.step(d.ops[select_action(d.probs, SelectMode::Greedy)]);
  }
  Time mk = s.makespan();
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(s), mk, ms};
}

// ---- checkpoints -----------------------------------------------------------

json config_to_json(const PolicyConfig& c) {
  return {{"k_layers", c.k_layers},         {"hidden_gin", c.hidden_gin},
          {"embed_dim", c.embed_dim},       {"hidden_head", c.hidden_head},
          {"epsilon_gin", c.epsilon_gin},   {"feature_scale", c.feature_scale},
          {"adjacency", adjacency_name(c.adjacency)}};
}

PolicyConfig config_from_json(const json& j) {
  PolicyConfig c;
  c.k_layers = j.at("k_layers").get<int>();
  c.hidden_gin = j.at("hidden_gin").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_head = j.at("hidden_head").get<int>();
  c.epsilon_gin = j.at("epsilon_gin").get<double>();
  c.feature_scale = j.at("feature_scale").get<double>();
  c.adjacency = parse_adjacency(j.at("adjacency").get<std::string>());
  c.validate();
  return c;
}

namespace {

json tensor_to_json(const Tensor& t) { return {{"shape", t.shape()}, {"values", t.values()}}; }

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(), j.at("values").get<std::vector<double>>());
}

}  // namespace

json params_to_json(const PolicyParams& p) {
  json tensors = json::object();
  for (std::size_t i = 0; i < p.store.size(); ++i) tensors[p.store.name(i)] = tensor_to_json(p.store.value(i));
  json bn = json::array();
  for (const auto& s : p.bn) bn.push_back({{"mean", tensor_to_json(s.running_mean)}, {"var", tensor_to_json(s.running_var)}});
  return {{"version", kCheckpointVersion}, {"config", config_to_json(p.config)}, {"tensors", tensors}, {"bn", bn}};
}

PolicyParams params_from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    PolicyParams out;
    out.config = config_from_json(j.at("config"));
    const json& tensors = j.at("tensors");
    const auto lay = layout(out.config);
    if (tensors.size() != lay.size())
      throw CheckpointError("checkpoint has " + std::to_string(tensors.size()) + " tensors, config needs " +
                            std::to_string(lay.size()));
    for (const auto& l : lay) {
      if (!tensors.contains(l.name)) throw CheckpointError("checkpoint is missing tensor " + l.name);
      Tensor t = tensor_from_json(tensors.at(l.name));
      if (t.shape() != std::vector<std::size_t>{l.rows, l.cols})
        throw CheckpointError("tensor " + l.name + " has shape " + t.shape_string() + ", config needs [" +
                              std::to_string(l.rows) + "," + std::to_string(l.cols) + "]");
      if (!t.all_finite()) throw CheckpointError("tensor " + l.name + " holds non-finite values");
      out.store.add(l.name, std::move(t));
    }
    out.bn = fresh_stats(out.config);
    const json& bn = j.at("bn");
    if (bn.size() != out.bn.size()) throw CheckpointError("checkpoint has wrong number of batch-norm layers");
    for (std::size_t i = 0; i < bn.size(); ++i) {
      Tensor m = tensor_from_json(bn[i].at("mean")), v = tensor_from_json(bn[i].at("var"));
      if (!m.same_shape(out.bn[i].running_mean) || !v.same_shape(out.bn[i].running_var))
        throw CheckpointError("batch-norm statistics " + std::to_string(i) + " have the wrong width");
      out.bn[i].running_mean = std::move(m);
      out.bn[i].running_var = std::move(v);
    }
    return out;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const PolicyParams& params, const json& meta) {
  json j = params_to_json(params);
  j["meta"] = meta;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << j.dump() << '\n';
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

PolicyParams load_checkpoint(const std::string& path, json* meta, const PolicyConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  PolicyParams p = params_from_json(j);
  if (expected && !(p.config == *expected))
    throw CheckpointError(path + ": config mismatch, stored " + config_to_json(p.config).dump() +
                          ", expected " + config_to_json(*expected).dump());
  if (meta) *meta = j.value("meta", json::object());
  return p;
}

}  // namespace jssp
