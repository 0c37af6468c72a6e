#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "retro/error.hpp"
#include "retro/learn.hpp"
#include "synthetic.hpp"

namespace retro {
namespace {

const std::vector<Reaction>& desk_corpus() {
  static const std::vector<Reaction> corpus = read_corpus(std::string(RETRO_DATA_DIR) + "/desk_corpus.tsv");
  return corpus;
}

const TemplateAssignment& desk_r1() {
  static const TemplateAssignment a = assign_corpus_templates(desk_corpus(), 1);
  return a;
}

Reaction chain_reaction(const std::string& id, int size) {
  Reaction r;
  r.id = id;
  r.product = parse_smiles(std::string(static_cast<std::size_t>(size), 'C'));
  return r;
}

// ---- environments ----------------------------------------------------------------------

TEST(Bins, QuantilesOfOneToEight) {
  const std::vector<double> sizes = {5, 1, 8, 2, 7, 3, 6, 4};
  const std::vector<std::string> ids = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const std::vector<int> bin = quantile_bins(sizes, ids, 4);
  EXPECT_EQ(bin, (std::vector<int>{2, 0, 3, 0, 3, 1, 2, 1}));
}

TEST(Bins, TiesFollowIdOrder) {
  const std::vector<double> sizes(6, 3.0);
  const std::vector<std::string> ids = {"r5", "r1", "r4", "r0", "r3", "r2"};
  EXPECT_EQ(quantile_bins(sizes, ids, 3), (std::vector<int>{2, 0, 2, 0, 1, 1}));
}

TEST(Bins, Errors) {
  const std::vector<double> sizes = {1, 2};
  const std::vector<std::string> ids = {"a", "b"};
  EXPECT_THROW(quantile_bins(sizes, ids, 3), TooFewSamples);
  EXPECT_THROW(quantile_bins(sizes, ids, 1), ShapeError);
  const std::vector<Reaction> two = {chain_reaction("a", 2), chain_reaction("b", 3)};
  EXPECT_THROW(bin_environments(two, BinCriterion::kSize, 4), TooFewSamples);
  // two acyclic products share the empty scaffold
  EXPECT_THROW(bin_environments(two, BinCriterion::kScaffold, 2), TooFewSamples);
}

TEST(Bins, ReactionSizes) {
  std::vector<Reaction> train;
  for (int s = 1; s <= 8; ++s) train.push_back(chain_reaction("R" + std::to_string(s), s));
  const std::map<std::string, int> env = bin_environments(train, BinCriterion::kSize, 4);
  EXPECT_EQ(env.at("R1"), 0);
  EXPECT_EQ(env.at("R2"), 0);
  EXPECT_EQ(env.at("R3"), 1);
  EXPECT_EQ(env.at("R6"), 2);
  EXPECT_EQ(env.at("R8"), 3);
}

TEST(Bins, ScaffoldGroupsRoundRobin) {
  std::vector<Reaction> train;
  auto add = [&](const std::string& id, const std::string& smiles) {
    Reaction r;
    r.id = id;
    r.product = parse_smiles(smiles);
    train.push_back(r);
  };
  add("a", "c1ccccc1C");
  add("b", "c1ccccc1CC");
  add("c", "c1ccccc1O");
  add("d", "C1CCCCC1C");
  add("e", "C1CCCCC1N");
  add("f", "CCO");
  const std::map<std::string, int> env = bin_environments(train, BinCriterion::kScaffold, 2);
  // benzene group (3) first, then cyclohexane (2), then acyclic (1)
  EXPECT_EQ(env.at("a"), env.at("b"));
  EXPECT_EQ(env.at("a"), env.at("c"));
  EXPECT_EQ(env.at("d"), env.at("e"));
  EXPECT_NE(env.at("a"), env.at("d"));
  EXPECT_EQ(env.at("f"), env.at("a"));
}

// ---- penalty -------------------------------------------------------------------------------

double logistic_penalty(double z) {
  Tape tape;
  const Var logits = tape.constant(Tensor::from(1, 2, {0.0, z}));
  const int y[] = {1};
  const Var g[] = {unit_scale_risk_gradient(logits, y)};
  return irm_penalty(g).value().item();
}

TEST(Irm, LogisticExamples) {
  EXPECT_EQ(logistic_penalty(0.0), 0.0);
  const double sigma = 1.0 / (1.0 + std::exp(2.0));
  EXPECT_NEAR(logistic_penalty(2.0), 4.0 * sigma * sigma, 1e-15);
  EXPECT_NEAR(logistic_penalty(2.0), 0.05684, 5e-6);
  EXPECT_LT(logistic_penalty(20.0), 1e-12);
}

TEST(Irm, GradientMatchesFiniteDifferenceInW) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.5);
  Tensor z(5, 4);
  for (double& v : z.values) v = g(rng);
  const std::vector<int> y = {0, 3, 1, 1, 2};
  auto risk = [&](double w) {
    double total = 0.0;
    for (int r = 0; r < 5; ++r) {
      double norm = 0.0;
      for (int c = 0; c < 4; ++c) norm += std::exp(w * z.at(r, c));
      total += std::log(norm) - w * z.at(r, y[r]);
    }
    return total / 5.0;
  };
  const double numeric = (risk(1.0 + 1e-6) - risk(1.0 - 1e-6)) / 2e-6;
  EXPECT_NEAR(unit_scale_risk_gradient_value(z, y), numeric, 1e-8);
  Tape tape;
  EXPECT_NEAR(unit_scale_risk_gradient(tape.constant(z), y).value().item(), numeric, 1e-8);
}

TEST(Irm, PenaltyNonNegativeAndSums) {
  Tape tape;
  const Var g[] = {tape.constant(Tensor::scalar(-0.5)), tape.constant(Tensor::scalar(0.25))};
  EXPECT_DOUBLE_EQ(irm_penalty(g).value().item(), 0.3125);
  const Var zero[] = {tape.constant(Tensor::scalar(0.0)), tape.constant(Tensor::scalar(0.0))};
  EXPECT_EQ(irm_penalty(zero).value().item(), 0.0);
  EXPECT_THROW(irm_penalty(std::span<const Var>()), ShapeError);
}

TEST(Irm, ClassifierLossFiniteDifference) {
  ClassifierConfig c;
  c.hidden = {6};
  c.dropout = 0.0;
  c.seed = 5;
  TemplateClassifier model(c, 4, {"a", "b", "c"});
  const ClassifierData d = synthetic::spurious_task({0.9, 0.7}, 5, 0.9, 2, 8);
  const std::vector<int> e0 = {0, 1, 2, 3, 4}, e1 = {5, 6, 7, 8, 9};
  auto loss = [&](Tape& tape) {
    const Var z = model.logits(tape, tape.constant(d.features));
    std::vector<int> y0, y1;
    for (int i : e0) y0.push_back(d.labels[i]);
    for (int i : e1) y1.push_back(d.labels[i] + 1);
    const Var g[] = {unit_scale_risk_gradient(gather_rows(z, e0), y0), unit_scale_risk_gradient(gather_rows(z, e1), y1)};
    const Var risk = scale(sum_all(pick(log_softmax_rows(z), d.labels)), -0.1);
    return add(risk, scale(irm_penalty(g), 10.0));
  };
  const FiniteDiffReport r = finite_diff_check(loss, model.parameters());
  EXPECT_TRUE(r.passed) << r.worst << " " << r.max_relative_error;
}

// ---- training ----------------------------------------------------------------------------------

ClassifierConfig linear_config(std::uint64_t seed) {
  ClassifierConfig c;
  c.hidden = {};
  c.dropout = 0.0;
  c.epochs = 500;
  c.batch_size = 2000;
  c.lr = 0.02;
  c.seed = seed;
  return c;
}

TEST(Train, LambdaZeroIsErmBitExact) {
  const ClassifierData d = synthetic::spurious_task({0.95, 0.85}, 100, 0.9, 3, 1);
  ClassifierConfig c;
  c.hidden = {8};
  c.dropout = 0.2;
  c.epochs = 6;
  c.batch_size = 32;
  c.seed = 4;
  IrmConfig irm;
  irm.lambda = 0.0;
  irm.warmup_epochs = 0;
  TrainedClassifier erm = train_classifier(TemplateClassifier(c, 5, {"0", "1"}), d, TrainMode::kErm, irm);
  TrainedClassifier zero = train_classifier(TemplateClassifier(c, 5, {"0", "1"}), d, TrainMode::kIrm, irm);
  EXPECT_EQ(checkpoint_text(erm.model.parameters()), checkpoint_text(zero.model.parameters()));
  irm.lambda = 5.0;
  TrainedClassifier five = train_classifier(TemplateClassifier(c, 5, {"0", "1"}), d, TrainMode::kIrm, irm);
  EXPECT_NE(checkpoint_text(erm.model.parameters()), checkpoint_text(five.model.parameters()));
  TrainedClassifier again = train_classifier(TemplateClassifier(c, 5, {"0", "1"}), d, TrainMode::kIrm, irm);
  EXPECT_EQ(checkpoint_text(five.model.parameters()), checkpoint_text(again.model.parameters()));
  ASSERT_EQ(five.log.size(), 6u);
  EXPECT_EQ(five.log[0].lambda, 5.0);
  EXPECT_EQ(five.log[0].environment_risks.size(), 2u);
}

TEST(Train, WarmupDelaysPenalty) {
  const ClassifierData d = synthetic::spurious_task({0.95, 0.85}, 50, 0.9, 0, 2);
  ClassifierConfig c = linear_config(1);
  c.epochs = 4;
  IrmConfig irm;
  irm.lambda = 3.0;
  irm.warmup_epochs = 2;
  const TrainedClassifier r = train_classifier(TemplateClassifier(c, 2, {"0", "1"}), d, TrainMode::kIrm, irm);
  EXPECT_EQ(r.log[1].lambda, 0.0);
  EXPECT_EQ(r.log[2].lambda, 3.0);
  EXPECT_GT(r.log[0].penalty, 0.0);
}

TEST(Train, IrmBeatsErmOnSpuriousTask) {
  const ClassifierData train = synthetic::spurious_task({0.95, 0.85}, 1000, 0.9, 0, 101);
  const ClassifierData test = synthetic::spurious_task({0.10}, 2000, 0.9, 0, 901);
  IrmConfig irm;
  irm.warmup_epochs = 100;
  irm.lambda = 100.0;
  TrainedClassifier erm = train_classifier(TemplateClassifier(linear_config(1), 2, {"0", "1"}), train, TrainMode::kErm, irm);
  TrainedClassifier inv = train_classifier(TemplateClassifier(linear_config(1), 2, {"0", "1"}), train, TrainMode::kIrm, irm);
  EXPECT_LT(synthetic::accuracy(erm.model, test), 0.7);
  EXPECT_GT(synthetic::accuracy(inv.model, test), 0.8);
}

TEST(Train, Errors) {
  ClassifierData d = synthetic::spurious_task({0.9}, 10, 0.9, 0, 1);
  TemplateClassifier m(linear_config(0), 2, {"0", "1"});
  IrmConfig irm;
  ClassifierData no_env = d;
  no_env.environments.clear();
  EXPECT_THROW(train_classifier(m, no_env, TrainMode::kIrm, irm), ShapeError);
  irm.lambda = -1.0;
  EXPECT_THROW(train_classifier(m, d, TrainMode::kIrm, irm), ShapeError);
  ClassifierData unlabeled = d;
  std::fill(unlabeled.labels.begin(), unlabeled.labels.end(), -1);
  EXPECT_THROW(train_classifier(m, unlabeled, TrainMode::kErm, IrmConfig{}), TooFewSamples);
  EXPECT_THROW(TemplateClassifier(linear_config(0), 2, {}), ShapeError);
}

TEST(Train, CenterHeadPenalty) {
  ClassifierData d = synthetic::spurious_task({0.95, 0.85}, 40, 0.9, 0, 3);
  for (int y : d.labels) d.center_labels.push_back(y == 1 ? 0 : -1);
  ClassifierConfig c = linear_config(2);
  c.epochs = 3;
  c.center_head = true;
  IrmConfig irm;
  irm.warmup_epochs = 0;
  irm.target = PenaltyTarget::kCenterHead;
  TrainedClassifier r =
      train_classifier(TemplateClassifier(c, 2, {"0", "1"}, {"c0"}), d, TrainMode::kIrm, irm);
  // one centre class: softmax is constant, so that head carries no penalty
  for (const ClassifierEpoch& e : r.log) EXPECT_EQ(e.penalty, 0.0);
  EXPECT_EQ(r.model.parameters().size(), 4u);
}

// ---- ranking and metrics --------------------------------------------------------------------------

TEST(Rank, TiesByTemplateId) {
  const std::vector<double> s = {0.0, 0.0, 0.0};
  const std::vector<std::string> v = {"t2", "t0", "t1"};
  const std::vector<RankedTemplate> r = rank_scores(s, v);
  EXPECT_EQ(r[0].template_id, "t0");
  EXPECT_EQ(r[1].template_id, "t1");
  EXPECT_EQ(r[2].template_id, "t2");
  const std::vector<double> s2 = {0.5, 2.0, 0.5};
  EXPECT_EQ(rank_scores(s2, v)[0].template_id, "t0");
  EXPECT_EQ(rank_scores(s2, v)[1].template_id, "t1");
}

TEST(Rank, PositiveScalingKeepsOrder) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::vector<double> s(30);
  std::vector<std::string> v;
  for (int i = 0; i < 30; ++i) {
    s[i] = std::round(g(rng) * 4) / 4;
    v.push_back("t" + std::to_string(100 + i));
  }
  std::vector<double> scaled = s;
  for (double& x : scaled) x *= 3.7;
  const auto a = rank_scores(s, v), b = rank_scores(scaled, v);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].template_id, b[i].template_id);
}

TEST(Metrics, TopkFromRanks) {
  const std::vector<std::optional<int>> ranks = {1, 4, std::nullopt};
  const std::map<int, double> t = topk_from_ranks(ranks);
  EXPECT_DOUBLE_EQ(t.at(1), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.at(3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.at(5), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(t.at(10), 2.0 / 3.0);
  const std::vector<std::optional<int>> third = {3};
  const std::map<int, double> u = topk_from_ranks(third);
  EXPECT_EQ(u.at(1), 0.0);
  EXPECT_EQ(u.at(3), 1.0);
  EXPECT_EQ(u.at(5), 1.0);
  EXPECT_EQ(topk_from_ranks(std::vector<std::optional<int>>{}).at(1), 0.0);
}

TEST(Metrics, OracleRankingOnDesk) {
  const TemplateAssignment& a = desk_r1();
  std::map<std::string, const Template*> table;
  for (const Template& t : a.table) table[t.template_id] = &t;
  std::vector<std::optional<int>> ranks;
  const Template* unrelated = nullptr;
  for (const Reaction& r : desk_corpus()) {
    const auto it = a.template_of.find(r.id);
    if (it == a.template_of.end()) continue;
    MolecularGraph product = r.product;
    clear_maps(product);
    if (!unrelated) {
      for (const Template& t : a.table) {
        if (!template_matches(t, product)) {
          unrelated = &t;
          break;
        }
      }
    }
    // a template that does not apply consumes no slot
    std::vector<RankedTemplate> ranking = {{unrelated->template_id, 2.0}, {it->second, 1.0}};
    if (template_matches(*unrelated, product)) ranking.erase(ranking.begin());
    ranks.push_back(match_rank(ranking, table, product, precursor_set_key(r), 10));
  }
  const std::map<int, double> t = topk_from_ranks(ranks);
  EXPECT_GE(t.at(10), 0.95);
  EXPECT_GE(t.at(1), 0.9);
  for (int k : {3, 5, 10}) EXPECT_GE(t.at(k), t.at(1));
}

TEST(Classifier, FitsToyOneHotTask) {
  ClassifierData d;
  d.features = Tensor(4, 4);
  for (int i = 0; i < 4; ++i) d.features.at(i, i) = 1.0;
  d.labels = {2, 0, 3, 1};
  ClassifierConfig c;
  c.hidden = {8};
  c.dropout = 0.0;
  c.epochs = 200;
  c.batch_size = 4;
  c.lr = 0.05;
  TrainedClassifier r = train_classifier(TemplateClassifier(c, 4, {"a", "b", "c", "d"}), d, TrainMode::kErm, {});
  const Tensor s = r.model.scores(d.features);
  for (int i = 0; i < 4; ++i) {
    const std::span<const double> row(&s.values[static_cast<std::size_t>(i) * 4], 4);
    EXPECT_EQ(rank_scores(row, r.model.vocabulary())[0].template_id, r.model.vocabulary()[d.labels[i]]);
  }
  EXPECT_LT(r.log.back().loss, r.log.front().loss);
}

TEST(Classifier, SaveLoadAndAtomOrder) {
  std::vector<Reaction> some(desk_corpus().begin(), desk_corpus().begin() + 40);
  const std::vector<std::string> vocab = template_vocabulary(some, desk_r1().template_of);
  ClassifierConfig c;
  c.fingerprint_bits = 256;
  c.hidden = {16};
  c.epochs = 2;
  c.seed = 12;
  c.center_head = true;
  ClassifierData d = classifier_data(some, desk_r1().template_of, vocab, c);
  d.center_labels.assign(d.labels.size(), 0);
  TrainedClassifier r = train_classifier(TemplateClassifier(c, 256, vocab, {"x"}), d, TrainMode::kErm, {});
  const auto path = std::filesystem::temp_directory_path() / "retro_classifier_test.ckpt";
  save_classifier(path, r.model, "unit");
  TemplateClassifier back = load_classifier(path);
  EXPECT_EQ(back.vocabulary(), vocab);
  EXPECT_EQ(back.scores(d.features), r.model.scores(d.features));
  std::filesystem::remove(path);
  EXPECT_THROW(load_classifier(path), IoError);

  MolecularGraph product = some[3].product;
  clear_maps(product);
  std::vector<int> order(product.atom_count());
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  const auto a = rank_templates(r.model, product);
  const auto b = rank_templates(r.model, permute_atoms(product, order));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].template_id, b[i].template_id);
    EXPECT_EQ(a[i].score, b[i].score);
  }
}

TEST(Classifier, LabelIndices) {
  std::vector<Reaction> rs = {chain_reaction("x", 2), chain_reaction("y", 3), chain_reaction("z", 4)};
  rs[2].template_id = "t_b";
  const std::map<std::string, std::string> template_of = {{"x", "t_a"}, {"y", "t_zzz"}};
  const std::vector<std::string> vocab = {"t_a", "t_b"};
  EXPECT_EQ(label_indices(rs, template_of, vocab), (std::vector<int>{0, -1, 1}));
  EXPECT_EQ(template_vocabulary(rs, template_of), (std::vector<std::string>{"t_a", "t_b", "t_zzz"}));
}

TEST(Train, ObjectiveComposition) {
  ClassifierConfig c;
  c.hidden = {4};
  c.dropout = 0.0;
  c.seed = 2;
  const ClassifierData d = synthetic::spurious_task({0.9, 0.6}, 8, 0.9, 2, 5);
  TemplateClassifier model(c, static_cast<int>(d.features.cols), {"0", "1"});
  Tape tape;
  const BatchObjective plain = classifier_objective(tape, model, d.features, d.labels, {}, {}, 3.0,
                                                    PenaltyTarget::kTemplateHead);
  EXPECT_DOUBLE_EQ(plain.loss.value().item(), plain.risk);
  EXPECT_EQ(plain.penalty, 0.0);
  const BatchObjective off = classifier_objective(tape, model, d.features, d.labels, d.environments, {}, 0.0,
                                                  PenaltyTarget::kTemplateHead);
  EXPECT_DOUBLE_EQ(off.loss.value().item(), off.risk);
  EXPECT_GT(off.penalty, 0.0);
  const BatchObjective on = classifier_objective(tape, model, d.features, d.labels, d.environments, {}, 3.0,
                                                 PenaltyTarget::kTemplateHead);
  EXPECT_NEAR(on.loss.value().item(), on.risk + 3.0 * on.penalty, 1e-12);
  EXPECT_NEAR(on.penalty, off.penalty, 1e-12);
}

}  // namespace
}  // namespace retro
