#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "jssp/nn/gradcheck.hpp"
#include "jssp/ppo.hpp"

using namespace jssp;

namespace {

std::string scratch(const std::string& name) {
  std::filesystem::create_directories(JSSP_SCRATCH);
  return std::string(JSSP_SCRATCH) + "/" + name;
}

TrainConfig small_config() {
  TrainConfig c;
  c.jobs = 3;
  c.machines = 3;
  c.trajectories = 2;
  c.validation_size = 5;
  c.policy.hidden_gin = 8;
  c.policy.embed_dim = 8;
  c.policy.hidden_head = 6;
  return c;
}

Trajectory with_rewards(std::vector<double> r) {
  Trajectory t;
  t.num_ops = static_cast<int>(r.size());
  for (double x : r) {
    Step s;
    s.reward = x;
    t.steps.push_back(s);
  }
  return t;
}

}  // namespace

TEST_CASE("config parsing") {
  TrainConfig c = parse_train_config("# smoke\niterations = 10\ntrajectories=4\n\nlr = 1e-4\nsemantics = push\n"
                                     "adjacency = removing-arc\ncheckpoint = a.json\n");
  CHECK(c.iterations == 10);
  CHECK(c.lr == 1e-4);
  CHECK(c.semantics == Insertion::Push);
  CHECK(c.policy.adjacency == AdjacencyMode::RemovingArc);
  CHECK(c.checkpoint == "a.json");
  CHECK(c.gamma == 1.0);
  CHECK(c.clip == 0.2);
  CHECK(c.c_policy == 2.0);
  CHECK(c.c_value == 1.0);
  CHECK(c.c_entropy == 0.01);

  CHECK_THROWS_WITH(parse_train_config("iterations = 3\nlearning_rate = 1\n"),
                    doctest::Contains("unknown config key 'learning_rate'"));
  CHECK_THROWS_WITH(parse_train_config("iterations = ten\n"), doctest::Contains("'iterations'"));
  CHECK_THROWS_WITH(parse_train_config("gamma = 1.5\n"), doctest::Contains("gamma"));
  CHECK_THROWS_WITH(parse_train_config("clip = 0\n"), doctest::Contains("clip"));
  CHECK_THROWS_WITH(parse_train_config("trajectories = 0\n"), doctest::Contains("trajectories"));
  CHECK_THROWS(parse_train_config("just words\n"));
}

TEST_CASE("returns and advantages") {
  auto t = with_rewards({-1, 0, -2});
  CHECK(returns_to_go(t, 1.0) == std::vector<double>{-3, -2, -2});
  CHECK(advantages(t, 1.0) == std::vector<double>{-3, -2, -2});
  t.steps[1].value = -1.5;
  CHECK(advantages(t, 1.0)[1] == -0.5);
  CHECK(returns_to_go(t, 0.5)[0] == doctest::Approx(-1.5));
  t.num_ops = 4;
  CHECK_THROWS_AS(advantages(t, 1.0), std::invalid_argument);

  // Tiny rollout with a zero critic: the first advantage is H(s0) - makespan.
  PolicyParams p = init_params(PolicyConfig{}, 1);
  zero_params(p, "critic.");
  Trajectory tr = rollout(p, fixtures::tiny(), Insertion::Push, 1.0, 3);
  CHECK(advantages(tr, 1.0)[0] == static_cast<double>(tr.h0 - tr.makespan));
  if (tr.makespan == 7) CHECK(advantages(tr, 1.0)[0] == -1.0);
}

TEST_CASE("trajectory collection") {
  TrainConfig c;
  c.trajectories = 4;
  PolicyParams p = init_params(c.policy, 2);
  PolicyParams before = p;
  auto a = collect_trajectories(p, c, 11);
  REQUIRE(a.size() == 4);
  for (const auto& t : a) {
    CHECK(t.steps.size() == 36);
    double sum = 0.0;
    for (const auto& s : t.steps) sum += s.reward;
    CHECK(sum == static_cast<double>(t.h0 - t.makespan));
  }
  CHECK(p == before);  // behaviour policy untouched, statistics included

  c.threads = 3;
  auto b = collect_trajectories(p, c, 11);
  for (std::size_t n = 0; n < 4; ++n) {
    CHECK(a[n].makespan == b[n].makespan);
    REQUIRE(a[n].steps.size() == b[n].steps.size());
    for (std::size_t t = 0; t < a[n].steps.size(); ++t) {
      CHECK(a[n].steps[t].action == b[n].steps[t].action);
      CHECK(a[n].steps[t].old_log_prob == b[n].steps[t].old_log_prob);
    }
  }
}

TEST_CASE("ratios are exactly one when theta equals theta_old") {
  TrainConfig c = small_config();
  PolicyParams p = init_params(c.policy, 3);
  auto trajs = collect_trajectories(p, c, 5);
  PolicyParams theta = p;
  LossReport r = ppo_losses(trajs, theta, c, false, false);
  CHECK(r.max_ratio_dev == 0.0);
  double adv_sum = 0.0;
  for (const auto& t : trajs)
    for (double a : advantages(t, c.gamma)) adv_sum += a;
  CHECK(r.clip == doctest::Approx(adv_sum).epsilon(1e-12));
}

TEST_CASE("clipping uses 1 + eps for positive advantages") {
  nn::Tape t;
  nn::Var ratio = t.constant(Tensor::scalar(2.0));
  const double adv = 3.0;
  nn::Var surr = nn::minimum(nn::scale(ratio, adv), nn::scale(nn::clamp(ratio, 0.8, 1.2), adv));
  CHECK(surr.value()[0] == doctest::Approx(1.2 * adv));
}

TEST_CASE("PPO loss gradient matches finite differences") {
  TrainConfig c = small_config();
  c.reward_scale = 0.01;
  PolicyParams old = init_params(c.policy, 4);
  auto trajs = collect_trajectories(old, c, 9);
  trajs.resize(1);
  PolicyParams theta = init_params(c.policy, 5);  // off-policy so ratios differ from one
  auto make_loss = [&](std::size_t stride) {
    return [&, stride](nn::Tape& tape) {
      // The summed loss over every stride-th state, on one tape.
      nn::Var total = tape.constant(Tensor::scalar(0.0));
      const auto ret = returns_to_go(trajs[0], c.gamma);
      for (std::size_t k = 0; k < trajs[0].steps.size(); k += stride) {
        const Step& st = trajs[0].steps[k];
        auto f = policy_forward(tape, theta, st.obs, nn::BnMode::Train, false, true);
        nn::Var ratio = nn::exp(nn::add_scalar(nn::log_prob(f.log_probs, st.action), -st.old_log_prob));
        const double adv = ret[k] - st.value;
        nn::Var surr = nn::minimum(nn::scale(ratio, adv), nn::scale(nn::clamp(ratio, 0.8, 1.2), adv));
        nn::Var verr = nn::square(nn::add_scalar(f.value, -ret[k]));
        nn::Var ent = nn::entropy_masked(f.scores, st.obs.mask);
        total = nn::add(total, nn::sub(verr, nn::add(nn::scale(surr, 2.0), nn::scale(ent, 0.01))));
      }
      return total;
    };
  };
  auto r = nn::grad_check(theta.store, make_loss(2), 1e-5, 6);
  CAPTURE(r.worst);
  CHECK(r.max_rel_error < 1e-3);

  // Per-state accumulation in the library equals one tape over all states.
  theta.store.zero_grad();
  {
    nn::Tape tape(&theta.store);
    tape.backward(make_loss(1)(tape));
  }
  std::vector<Tensor> whole;
  for (std::size_t i = 0; i < theta.store.size(); ++i) whole.push_back(theta.store.grad(i));
  theta.store.zero_grad();
  LossReport rep = ppo_losses(trajs, theta, c, true, false);
  CHECK(std::isfinite(rep.total));
  for (std::size_t i = 0; i < theta.store.size(); ++i)
    for (std::size_t k = 0; k < whole[i].size(); ++k)
      CHECK(theta.store.grad(i)[k] == doctest::Approx(whole[i][k]).epsilon(1e-9).scale(1.0));
  theta.store.zero_grad();
}

TEST_CASE("one update raises the surrogate objective of its batch") {
  TrainConfig c = small_config();
  c.lr = 1e-3;
  PolicyParams theta = init_params(c.policy, 6);
  auto trajs = collect_trajectories(theta, c, 21);
  nn::AdamState opt(theta.store, c.lr);
  theta.store.zero_grad();
  LossReport before = ppo_losses(trajs, theta, c, true, false);
  nn::adam_step(theta.store, opt);
  LossReport after = ppo_losses(trajs, theta, c, false, false);
  CHECK(after.total < before.total);
}

TEST_CASE("smoke training run, checkpoint and resume") {
  TrainConfig c = small_config();
  c.iterations = 10;
  c.validate_every = 5;
  c.checkpoint = scratch("smoke.best.json");
  c.last_checkpoint = scratch("smoke.last.json");
  c.curve = scratch("smoke.curve.csv");
  auto res = train(c);
  CHECK(res.curve.size() == 10);
  CHECK(res.curve.back().instances_seen == 20);
  CHECK(res.curve[4].avg_makespan_validation.has_value());
  CHECK_FALSE(res.curve[3].avg_makespan_validation.has_value());
  PolicyParams best = load_checkpoint(c.checkpoint, nullptr, &c.policy);
  auto val = validation_instances(c);
  CHECK(average_greedy_makespan(best, val, c.semantics) == doctest::Approx(res.best_validation));

  std::ifstream in(c.curve);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 11);

  // Same seeds, same curve.
  TrainConfig again = c;
  again.checkpoint = scratch("smoke2.best.json");
  again.last_checkpoint = scratch("smoke2.last.json");
  again.curve = scratch("smoke2.curve.csv");
  auto res2 = train(again);
  for (std::size_t k = 0; k < res.curve.size(); ++k) CHECK(curve_line(res.curve[k]) == curve_line(res2.curve[k]));

  // Resume continues the curve where it stopped and matches an uninterrupted run.
  TrainConfig more = c;
  more.iterations = 14;
  more.resume = c.last_checkpoint;
  auto cont = train(more);
  REQUIRE(cont.curve.size() == 4);
  CHECK(cont.curve.front().iteration == 11);
  CHECK(cont.curve.front().instances_seen == 22);

  TrainConfig straight = again;
  straight.iterations = 14;
  auto full = train(straight);
  CHECK(curve_line(full.curve.back()) == curve_line(cont.curve.back()));

  std::ifstream in2(c.curve);
  rows = 0;
  while (std::getline(in2, line)) ++rows;
  CHECK(rows == 15);
}

TEST_CASE("evaluation rows and gaps") {
  TrainConfig c = small_config();
  PolicyParams p = init_params(c.policy, 7);
  auto insts = validation_instances(c);
  RefTable refs{{insts[0].id, 100}};
  auto rows = evaluate(p, insts, refs, Insertion::NoPush);
  CHECK(rows.size() == insts.size());
  REQUIRE(rows[0].gap.has_value());
  CHECK(*rows[0].gap == doctest::Approx((rows[0].makespan - 100) / 100.0));
  CHECK_FALSE(rows[1].gap.has_value());
}
