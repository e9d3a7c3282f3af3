#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "liberum/agents.hpp"
#include "liberum/io.hpp"

using namespace liberum;

namespace {

Trajectory one_step(StateId s, ActionId a, double r, StateId next) {
  Trajectory t;
  t.push({{s}, a, r, {next}});
  return t;
}

}  // namespace

TEST(SelectAction, Greedy) {
  EXPECT_EQ(select_action(ActionValues({1, 3, 2}), PolicySpec::greedy(), 0), 1u);
  EXPECT_EQ(select_action(ActionValues({2, 2}), PolicySpec::greedy(), 0), 0u);
}

TEST(SelectAction, InvalidParameters) {
  EXPECT_THROW(select_action(ActionValues({0, 1}), PolicySpec::epsilon_greedy(1.5), 0), InvalidInput);
  EXPECT_THROW(select_action(ActionValues({0, 1}), PolicySpec::softmax(0.0), 0), InvalidInput);
}

TEST(SelectAction, SoftmaxEvenSplit) {
  int zeros = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed)
    zeros += select_action(ActionValues({0, 0}), PolicySpec::softmax(1.0), seed) == 0;
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.02);
}

TEST(SelectAction, SoftmaxChiSquare) {
  // 10^4 draws against normalize(q, T); the 0.999 quantile of chi-square
  // with 3 degrees of freedom is 16.266.
  const ActionValues q({0.0, 1.0, -0.5, 2.0});
  const double T = 1.3;
  const auto p = normalize(q, T);
  Rng rng(77);
  std::vector<int> counts(4, 0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[select_action(q, PolicySpec::softmax(T), rng)];
  double chi2 = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    const double expected = n * p[a];
    chi2 += (counts[a] - expected) * (counts[a] - expected) / expected;
  }
  EXPECT_LT(chi2, 16.266);
}

TEST(SelectAction, EpsilonGreedyRate) {
  Rng rng(5);
  int greedy = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) greedy += select_action(ActionValues({0, 1, 0, 0}), PolicySpec::epsilon_greedy(0.2), rng) == 1;
  // P(action 1) = 0.8 + 0.2 / 4.
  EXPECT_NEAR(greedy / double(n), 0.85, 0.01);
}

TEST(SelectAction, GreedyInvariantUnderPositiveAffineMaps) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> q(5), t(5);
    const double a = 0.01 + 10 * uniform01(rng), b = 20 * uniform01(rng) - 10;
    for (std::size_t k = 0; k < 5; ++k) q[k] = std::round(4 * uniform01(rng)), t[k] = a * q[k] + b;
    // Rounded values produce ties, which must break the same way.
    ASSERT_EQ(select_action(ActionValues(q), PolicySpec::greedy(), 0),
              select_action(ActionValues(t), PolicySpec::greedy(), 0));
  }
}

TEST(EpisodicUpdate, Examples) {
  QTable q(2, 2);
  episodic_update(q, one_step(0, 1, 5, 1), {{5.0}, "x", 0}, 1.0);
  EXPECT_DOUBLE_EQ(q.at(0, 1), 5.0);
  episodic_update(q, one_step(0, 1, 5, 1), {{5.0}, "x", 0}, 0.3);
  EXPECT_DOUBLE_EQ(q.at(0, 1), 5.0);

  QTable h(1, 1);
  episodic_update(h, one_step(0, 0, 1, 0), {{1.0}, "x", 0}, 0.5);
  episodic_update(h, one_step(0, 0, 1, 0), {{1.0}, "x", 0}, 0.5);
  EXPECT_DOUBLE_EQ(h.at(0, 0), 0.75);

  EXPECT_THROW(episodic_update(h, one_step(0, 0, 1, 0), {{1.0, 2.0}, "x", 0}, 0.5), InvalidInput);
  EXPECT_THROW(episodic_update(h, one_step(0, 0, 1, 0), {{1.0}, "x", 0}, 0.0), InvalidInput);
}

TEST(Teach, Examples) {
  const Teacher zero(1, 2, {0.0, 5.0}, 0.0);
  EXPECT_EQ(teach(ActionValues({1, 2}), zero, 0).values(), (std::vector<double>{1, 2}));

  const Teacher t(1, 2, {0.0, 5.0}, 1.0);
  const auto taught = teach(ActionValues({0, 0}), t, 0);
  EXPECT_EQ(taught.values(), (std::vector<double>{0, 5}));
  EXPECT_EQ(select_action(taught, PolicySpec::greedy(), 0), 1u);
  EXPECT_DOUBLE_EQ(value_freedom(ActionValues({0, 0})), 1.0);
  EXPECT_NEAR(value_freedom(taught), 0.05796691415246621, 1e-12);
  EXPECT_THROW(teach(ActionValues({0, 0}), t, 3), InvalidInput);
  EXPECT_THROW(Teacher(1, 2, {0.0}, 1.0), InvalidInput);
}

TEST(Teach, FromOptimalMarksOptimalActions) {
  KeyDoorGridworld g(3, 3);
  const auto opt = value_iteration(g.true_dynamics());
  const auto teacher = Teacher::from_optimal(opt, 2.0);
  const auto pi = greedy_policy(opt);
  for (StateId s = 0; s < g.num_states(); ++s) EXPECT_DOUBLE_EQ(teacher.at(s, pi[s]), 1.0);
  EXPECT_DOUBLE_EQ(teacher.at(g.start_state(), KeyDoorGridworld::Up), 0.0);
}

TEST(FreedomBonus, Examples) {
  QTable q(2, 3);
  WorldModel m(2, 3);
  m.observe({0}, 0, 0.0, {1});
  EXPECT_DOUBLE_EQ(freedom_bonus(m, q, 0, 0, 0.0, 1.0), 0.0);
  EXPECT_NEAR(freedom_bonus(m, q, 0, 0, 0.5, 1.0), 0.5 * std::log2(3.0), 1e-12);

  QTable sharp(2, 2);
  sharp.at(1, 0) = 10.0, sharp.at(1, 1) = -10.0;
  WorldModel m2(2, 2);
  m2.observe({0}, 1, 0.0, {1});
  EXPECT_NEAR(freedom_bonus(m2, sharp, 0, 1, 2.0, 1.0), 2.0 * 6.2446e-8, 1e-11);

  EXPECT_THROW(freedom_bonus(m2, sharp, 0, 0, 1.0, 1.0), UnknownTransition);
  EXPECT_NO_THROW(freedom_bonus(m2, sharp, 0, 0, 1.0, 1.0, true));
  EXPECT_THROW(freedom_bonus(m2, sharp, 0, 1, -1.0, 1.0), InvalidInput);
}

TEST(FreedomBonus, SelectionOnlyNeverStored) {
  KArmedBandit env({0.0, 0.0, 0.0});
  QTable q(1, 3);
  WorldModel m(1, 3);
  m.observe({0}, 0, 0.0, {0});
  const BonusConfig bonus{&m, 1.0, 1.0, true};
  const auto row = selection_row(q, 0, nullptr, &bonus);
  EXPECT_NEAR(row[0], std::log2(3.0), 1e-12);
  EXPECT_EQ(q.row(0), (std::vector<double>{0, 0, 0}));
}

TEST(RunEpisode, BanditLogsFullFreedom) {
  KArmedBandit env(std::vector<double>(8, 0.0));
  QTable q(1, 8);
  EpisodeOptions opt;
  opt.policy = PolicySpec::greedy();
  const auto res = run_episode(env, q, opt, 3);
  ASSERT_EQ(res.trajectory.size(), 1u);
  EXPECT_DOUBLE_EQ(res.freedom[0].momentary_bits, 3.0);
  EXPECT_TRUE(res.freedom[0].consistent());
}

TEST(RunEpisode, SeededRepeat) {
  KeyDoorGridworld g(3, 3, 30);
  QTable q(g.num_states(), g.num_actions());
  q.at(0, 1) = 0.3;
  EpisodeOptions opt;
  opt.policy = PolicySpec::softmax(0.5);
  opt.historic_decay = 0.9;
  const auto opt_values = value_iteration(g.true_dynamics());
  const auto d = g.true_dynamics();
  opt.oracle = &opt_values;
  opt.outcomes = &d;
  const auto a = run_episode(g, q, opt, 21), b = run_episode(g, q, opt, 21);
  ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) {
    EXPECT_EQ(a.trajectory.steps[i].action, b.trajectory.steps[i].action);
    EXPECT_EQ(a.freedom[i].momentary_bits, b.freedom[i].momentary_bits);
    EXPECT_EQ(a.freedom[i].historic_bits, b.freedom[i].historic_bits);
    EXPECT_TRUE(a.freedom[i].consistent());
  }
  EXPECT_TRUE(a.trajectory.well_formed());
}

TEST(RunEpisode, DimensionMismatch) {
  KArmedBandit env({0.0, 1.0});
  QTable q(1, 3);
  EXPECT_THROW(run_episode(env, q, {}, 0), InvalidInput);
}

TEST(Teaching, TransparentToStoredValues) {
  // Same seeded episode with and without the teacher's bias: once the
  // actions are fixed by the taught run, updating with the same credits
  // gives the same Q, whether or not teaching was involved.
  KeyDoorGridworld g(3, 3, 40);
  const auto opt = value_iteration(g.true_dynamics());
  const Teacher teacher = Teacher::from_optimal(opt, 3.0);
  QTable q(g.num_states(), g.num_actions());
  q.at(0, 0) = 0.2, q.at(3, 4) = -0.1;
  EpisodeOptions taught;
  taught.policy = PolicySpec::softmax(0.5);
  taught.teacher = &teacher;
  const auto res = run_episode(g, q, taught, 5);
  const auto credit = temporal_discount_credit(res.trajectory, 0.95);

  QTable with_teaching = q;
  episodic_update(with_teaching, res.trajectory, credit, 0.2);

  // Subtract the bias from the selection rows before the update: the
  // stored table is what the agent had plus credit, never the bias.
  QTable bias_removed = q;
  for (std::size_t t = 0; t < res.trajectory.size(); ++t) {
    const auto& st = res.trajectory.steps[t];
    const double taught_value = teach(q.row_values(st.obs.state_id), teacher, st.obs.state_id)[st.action];
    EXPECT_DOUBLE_EQ(taught_value - teacher.strength * teacher.at(st.obs.state_id, st.action),
                     q.at(st.obs.state_id, st.action));
  }
  episodic_update(bias_removed, res.trajectory, credit, 0.2);
  EXPECT_TRUE(with_teaching == bias_removed);
  EXPECT_EQ(q.at(0, 0), 0.2);
}

TEST(Learning, OracleCreditReachesOptimumOn3x3) {
  // Greedy policy w.r.t. Q learned from oracle credits under a perfect model.
  KeyDoorGridworld g(3, 3, 50);
  const Dynamics truth = g.true_dynamics();
  const double optimal = optimal_episode_return(truth, g.start_state(), 50);
  QTable q(g.num_states(), g.num_actions());
  EpisodeOptions explore;
  explore.policy = PolicySpec::softmax(0.1);
  EpisodeOptions exploit;
  exploit.policy = PolicySpec::greedy();
  std::size_t streak = 0, converged_at = 0;
  for (std::size_t ep = 0; ep < 5000 && streak < 50; ++ep) {
    const auto res = run_episode(g, q, explore, derive_seed(1, ep));
    episodic_update(q, res.trajectory, causal_necessity_credit(truth, res.trajectory, 0.95), 0.2);
    const auto check = run_episode(g, q, exploit, derive_seed(2, ep));
    streak = check.trajectory.episode_return == optimal ? streak + 1 : 0;
    if (streak == 1) converged_at = ep;
  }
  EXPECT_EQ(streak, 50u) << "greedy policy did not settle on the optimal return";
  EXPECT_LT(converged_at, 5000u);
}

TEST(QTable, JsonRoundTrip) {
  QTable q(3, 2, 0.5);
  q.at(2, 1) = -4.25;
  EXPECT_TRUE(io::q_table_from_json(io::to_json(q)) == q);
  auto bad = io::to_json(q);
  bad["values"][0] = {1.0};
  EXPECT_THROW(io::q_table_from_json(bad), InvalidInput);
}
