// jssp: command-line front end for generation, dispatching, training,
// evaluation, the exact oracle and Gantt charts.
//
// Exit codes: 0 success, 1 infeasible schedule, 2 usage or IO error.

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "jssp/calibrate.hpp"
#include "jssp/gantt.hpp"
#include "jssp/oracle.hpp"
#include "jssp/policy.hpp"
#include "jssp/ppo.hpp"
#include "jssp/report.hpp"
#include "jssp/rules.hpp"

namespace fs = std::filesystem;
using namespace jssp;

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 1;
constexpr int kUsage = 2;

// Thrown for anything that should end the process with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string format = "standard";
  std::string semantics;  // empty: per-command default
};

Insertion semantics_or(const std::string& name, Insertion fallback) {
  return name.empty() ? fallback : parse_insertion(name);
}

Instance load(const std::string& path, const std::string& format) {
  return load_instance_file(path, parse_format_name(format));
}

// ---- gen ---------------------------------------------------------------------

struct GenArgs {
  int jobs = 6, machines = 6;
  Time lo = 1, hi = 99;
  int count = 100;
  std::uint64_t seed = 1;
  std::string out;
  std::string prefix = "inst";
};

int cmd_gen(const GenArgs& a) {
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw UsageError("cannot create " + a.out + ": " + ec.message());
  std::vector<std::string> names;
  for (int k = 0; k < a.count; ++k) {
    Instance inst = generate_taillard(a.jobs, a.machines, a.lo, a.hi, derive_seed(a.seed, static_cast<std::uint64_t>(k)));
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.txt", a.prefix.c_str(), k);
    write_text_file((fs::path(a.out) / name).string(), write_instance(inst, InstanceFormat::Standard));
    names.push_back(name);
  }
  write_manifest((fs::path(a.out) / "manifest.txt").string(), names);
  std::cout << "wrote " << a.count << " instances and manifest.txt to " << a.out << '\n';
  return kOk;
}

// ---- solve -------------------------------------------------------------------

struct SolveArgs {
  Common common;
  std::string instance;
  std::string rule;
  std::uint64_t seed = 0;
  std::string checkpoint;
  std::string schedule_out;
  Time ref = 0;
};

int cmd_solve(const SolveArgs& a) {
  if (a.rule.empty() == a.checkpoint.empty()) throw UsageError("give exactly one of --rule or --checkpoint");
  Instance inst = load(a.instance, a.common.format);
  EvalReport row;
  row.instance_id = inst.id;
  std::optional<State> final_state;
  if (!a.rule.empty()) {
    Rule rule = parse_rule(a.rule, a.seed);
    row.semantics = semantics_or(a.common.semantics, Insertion::NoPush);
    auto r = run_pdr(inst, rule, row.semantics);
    row.method = rule_name(rule);
    row.makespan = r.makespan;
    row.time_ms = r.wall_ms;
    final_state = std::move(r.state);
  } else {
    if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
    nlohmann::json meta;
    PolicyParams params = load_checkpoint(a.checkpoint, &meta);
    const std::string stored = meta.value("semantics", std::string("no-push"));
    row.semantics = semantics_or(a.common.semantics, parse_insertion(stored));
    auto r = run_policy(params, inst, row.semantics);
    row.method = "policy";
    row.makespan = r.makespan;
    row.time_ms = r.wall_ms;
    final_state = std::move(r.state);
  }
  if (a.ref > 0) row.gap = relative_gap(row.makespan, a.ref);

  Schedule sched = extract_schedule(*final_state);
  const auto problems = verify_schedule(inst, sched);
  const std::string json = schedule_to_json(sched).dump(2) + "\n";
  if (a.schedule_out.empty()) {
    std::cout << json;
  } else {
    write_text_file(a.schedule_out, json);
  }
  std::cerr << reports_csv({row});
  for (const auto& p : problems) std::cerr << "infeasible: " << p << '\n';
  return problems.empty() ? kOk : kInfeasible;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  TrainConfig cfg;
  try {
    cfg = load_train_config(a.config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(a.config + ": " + e.what());
  }
  auto res = train(cfg, [&](const CurveRow& r) {
    if (a.quiet) return;
    std::cerr << "iter " << r.iteration << " train " << r.avg_makespan_train;
    if (r.avg_makespan_validation) std::cerr << " val " << *r.avg_makespan_validation;
    std::cerr << " loss " << r.loss.total << '\n';
  });
  std::cout << "initial validation " << res.initial_validation << ", best " << res.best_validation << '\n'
            << "checkpoint " << cfg.checkpoint << ", curve " << cfg.curve << '\n';
  return kOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string manifest;
  std::vector<std::string> methods{"spt", "mwkr", "fdd-mwkr", "mopnr"};
  std::string checkpoint;
  std::string refs;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
  bool no_time = false;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<Instance> instances;
  for (const auto& p : read_manifest(a.manifest)) instances.push_back(load(p, a.common.format));
  RefTable refs = a.refs.empty() ? RefTable{} : read_refs(a.refs);
  const Insertion sem = semantics_or(a.common.semantics, Insertion::NoPush);

  std::unique_ptr<PolicyParams> params;
  std::vector<EvalReport> rows;
  int bad = 0;
  for (const auto& m : a.methods) {
    if (m == "policy") {
      if (a.checkpoint.empty()) throw UsageError("method 'policy' needs --checkpoint");
      if (!fs::exists(a.checkpoint)) throw UsageError("checkpoint not found: " + a.checkpoint);
      if (!params) params = std::make_unique<PolicyParams>(load_checkpoint(a.checkpoint));
      auto r = evaluate(*params, instances, refs, sem, "policy", a.threads);
      rows.insert(rows.end(), r.begin(), r.end());
      continue;
    }
    const Rule rule = parse_rule(m, a.seed);
    std::vector<EvalReport> part(instances.size());
    std::vector<int> infeasible(instances.size(), 0);
    parallel_for(instances.size(), a.threads, [&](std::size_t i) {
      auto r = run_pdr(instances[i], rule, sem);
      infeasible[i] = !verify_schedule(r.state).empty();
      part[i] = {instances[i].id, rule_name(rule), r.makespan,
                 relative_gap(r.makespan, lookup_ref(refs, instances[i].id)), r.wall_ms, sem};
    });
    for (int f : infeasible) bad += f;
    rows.insert(rows.end(), part.begin(), part.end());
  }
  for (const auto& r : rows)
    if (!a.refs.empty() && !r.gap) std::cerr << "warning: no reference for " << r.instance_id << ", gap omitted\n";
  const std::string csv = reports_csv(rows, !a.no_time);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(a.out, csv);
  }
  return bad ? kInfeasible : kOk;
}

// ---- oracle ------------------------------------------------------------------

struct OracleArgs {
  Common common;
  std::string instance;
  std::int64_t node_limit = 10'000'000;
  int max_ops = 25;
};

int cmd_oracle(const OracleArgs& a) {
  Instance inst = load(a.instance, a.common.format);
  if (inst.num_ops() > a.max_ops)
    throw UsageError("instance " + inst.id + " has " + std::to_string(inst.num_ops()) +
                     " operations; the exact oracle only takes up to " + std::to_string(a.max_ops) +
                     " (raise --max-ops to insist)");
  if (a.node_limit <= 0) throw UsageError("--node-limit must be positive");
  auto r = optimal_makespan(inst, a.node_limit);
  std::cout << inst.id << ' ' << r.makespan << ' ' << proof_name(r.proof) << " nodes=" << r.nodes << '\n';
  return kOk;
}

// ---- gantt -------------------------------------------------------------------

struct GanttArgs {
  std::string schedule;
  std::string out;
  int machines = -1;
};

int cmd_gantt(const GanttArgs& a) {
  Schedule s;
  try {
    s = schedule_from_json(nlohmann::json::parse(read_text_file(a.schedule)));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(a.schedule + ": malformed schedule JSON: " + e.what());
  } catch (const ScheduleFormatError& e) {
    throw UsageError(a.schedule + ": " + e.what());
  }
  write_text_file(a.out, render_gantt_svg(s, a.machines));
  std::cout << "wrote " << s.ops.size() << " operations to " << a.out << '\n';
  return kOk;
}

// ---- calibrate ---------------------------------------------------------------

struct CalibrateArgs {
  std::string manifest;
  std::string table;
  std::string format = "taillard";
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a) {
  std::vector<Instance> instances;
  for (const auto& p : read_manifest(a.manifest)) instances.push_back(load(p, a.format));
  const std::string csv = calibration_csv(calibrate(instances, read_pdr_table(a.table)));
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(a.out, csv);
  }
  return kOk;
}

void add_common(CLI::App* cmd, Common& c, const char* semantics_help) {
  cmd->add_option("--format", c.format, "instance file format: standard or taillard")
      ->check(CLI::IsMember({"standard", "taillard"}));
  cmd->add_option("--semantics", c.semantics, semantics_help)->check(CLI::IsMember({"push", "no-push", "nopush"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Job-shop scheduling: dispatching rules, a learned GIN policy, an exact oracle for tiny instances."};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "write random Taillard-style instances and a manifest");
  g->add_option("--jobs", gen.jobs)->check(CLI::PositiveNumber);
  g->add_option("--machines", gen.machines)->check(CLI::PositiveNumber);
  g->add_option("--lo", gen.lo, "smallest duration")->check(CLI::PositiveNumber);
  g->add_option("--hi", gen.hi, "largest duration")->check(CLI::PositiveNumber);
  g->add_option("--count", gen.count)->check(CLI::NonNegativeNumber);
  g->add_option("--seed", gen.seed);
  g->add_option("--prefix", gen.prefix, "file name prefix");
  g->add_option("--out", gen.out, "output directory")->required();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "dispatch one instance; schedule JSON to stdout or --schedule-out");
  s->add_option("instance", solve.instance)->required();
  s->add_option("--rule", solve.rule, "spt, mwkr, fdd-mwkr, mopnr or random");
  s->add_option("--seed", solve.seed, "seed for the random rule");
  s->add_option("--checkpoint", solve.checkpoint, "policy checkpoint instead of a rule");
  s->add_option("--schedule-out", solve.schedule_out);
  s->add_option("--ref", solve.ref, "reference makespan for the gap");
  add_common(s, solve.common, "insertion semantics (default no-push, or the checkpoint's)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "PPO training from a key=value config file");
  t->add_option("--config", tr.config)->required();
  t->add_flag("--quiet", tr.quiet);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate methods on every instance of a manifest, CSV out");
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--methods", ev.methods, "rules and/or 'policy'")->delimiter(',');
  e->add_option("--checkpoint", ev.checkpoint);
  e->add_option("--refs", ev.refs, "file of 'instance_id makespan' references for gaps");
  e->add_option("--out", ev.out, "CSV path (default stdout)");
  e->add_option("--seed", ev.seed, "seed for the random rule");
  e->add_option("--threads", ev.threads)->check(CLI::PositiveNumber);
  e->add_flag("--no-time", ev.no_time, "leave timing columns empty");
  add_common(e, ev.common, "insertion semantics (default no-push)");

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "exact optimum of a tiny instance");
  o->add_option("instance", orc.instance)->required();
  o->add_option("--node-limit", orc.node_limit);
  o->add_option("--max-ops", orc.max_ops, "refuse larger instances");
  add_common(o, orc.common, "unused");

  GanttArgs ga;
  auto* gc = app.add_subcommand("gantt", "render a schedule JSON as an SVG Gantt chart");
  gc->add_option("schedule", ga.schedule)->required();
  gc->add_option("--out", ga.out)->required();
  gc->add_option("--machines", ga.machines, "row count (default: from the schedule)");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "compare both insertion semantics with published rule makespans");
  c->add_option("--manifest", cal.manifest)->required();
  c->add_option("--table", cal.table, "'id spt mwkr fdd-mwkr mopnr' per line")->required();
  c->add_option("--format", cal.format)->check(CLI::IsMember({"standard", "taillard"}));
  c->add_option("--out", cal.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (s->parsed()) return cmd_solve(solve);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(ev);
    if (o->parsed()) return cmd_oracle(orc);
    if (gc->parsed()) return cmd_gantt(ga);
    if (c->parsed()) return cmd_calibrate(cal);
  } catch (const UsageError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
