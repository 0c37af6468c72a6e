#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "retro/enhance.hpp"
#include "retro/error.hpp"

namespace retro {
namespace {

BipartiteGraph graph_of(int molecules, int templates, const std::vector<std::pair<EdgeRef, EdgeLabel>>& edges) {
  BipartiteGraph g;
  for (int m = 0; m < molecules; ++m) g.add_molecule("m" + std::to_string(m + 1));
  for (int t = 0; t < templates; ++t) g.add_template("t" + std::to_string(t + 1));
  for (const auto& [e, label] : edges) g.add_edge(e, label);
  return g;
}

// The four-edge example graph, 0-based: (m1,t1) (m2,t1) (m1,t2) (m3,t2).
BipartiteGraph example_graph() {
  return graph_of(3, 2,
                  {{{0, 0}, EdgeLabel::kGt},
                   {{1, 0}, EdgeLabel::kCandidate},
                   {{0, 1}, EdgeLabel::kCandidate},
                   {{2, 1}, EdgeLabel::kGt}});
}

std::set<EdgeRef> edge_set(const SubgraphSample& s) {
  std::set<EdgeRef> out(s.positives.begin(), s.positives.end());
  out.insert(s.negatives.begin(), s.negatives.end());
  return out;
}

// Independent trace of the expansion over an edge list: no adjacency index,
// every round scans all edges.
std::set<EdgeRef> brute_khop(const std::vector<EdgeRef>& edges, EdgeRef seed, int hops) {
  std::set<int> ms = {seed.m}, ts = {seed.t};
  for (int k = 0; k < hops; ++k) {
    std::set<int> next_m, next_t;
    for (const EdgeRef& e : edges) {
      if (ts.count(e.t)) next_m.insert(e.m);
      if (ms.count(e.m)) next_t.insert(e.t);
    }
    ms = next_m;
    ts = next_t;
  }
  std::set<EdgeRef> out;
  for (const EdgeRef& e : edges) {
    if (ms.count(e.m) && ts.count(e.t)) out.insert(e);
  }
  return out;
}

TEST(Bipartite, CompleteGraphThreeByTwo) {
  BipartiteGraph g = graph_of(3, 2, {});
  for (int m = 0; m < 3; ++m) {
    for (int t = 0; t < 2; ++t) g.add_edge({m, t}, EdgeLabel::kCandidate);
  }
  g.add_edge({1, 1}, EdgeLabel::kGt);
  EXPECT_EQ(g.edge_count(), 6u);
  EXPECT_EQ(g.gt_edges(), (std::vector<EdgeRef>{{1, 1}}));
  // a later candidate label does not downgrade gt
  g.add_edge({1, 1}, EdgeLabel::kCandidate);
  EXPECT_EQ(g.label({1, 1}), EdgeLabel::kGt);
  EXPECT_THROW(g.add_edge({3, 0}, EdgeLabel::kGt), MissingEdge);
}

TEST(Khop, OneHopExample) {
  const SubgraphSample s = khop_subgraph(example_graph(), {0, 0}, 1);
  EXPECT_EQ(s.molecules, (std::vector<int>{0, 1}));
  EXPECT_EQ(s.templates, (std::vector<int>{0, 1}));
  EXPECT_EQ(edge_set(s), (std::set<EdgeRef>{{0, 0}, {1, 0}, {0, 1}}));
  EXPECT_EQ(s.positives, (std::vector<EdgeRef>{{0, 0}}));
}

TEST(Khop, TwoHopExample) {
  const SubgraphSample s = khop_subgraph(example_graph(), {0, 0}, 2);
  EXPECT_EQ(edge_set(s), (std::set<EdgeRef>{{0, 0}, {1, 0}, {0, 1}, {2, 1}}));
  EXPECT_EQ(s.positives, (std::vector<EdgeRef>{{0, 0}, {2, 1}}));
}

TEST(Khop, IsolatedEdgeIsFixedPoint) {
  BipartiteGraph g = example_graph();
  g.add_molecule("m4");
  g.add_template("t3");
  g.add_edge({3, 2}, EdgeLabel::kGt);
  for (int k = 1; k <= 4; ++k) {
    const SubgraphSample s = khop_subgraph(g, {3, 2}, k);
    EXPECT_EQ(edge_set(s), (std::set<EdgeRef>{{3, 2}}));
  }
}

TEST(Khop, MissingSeed) {
  EXPECT_THROW(khop_subgraph(example_graph(), {2, 0}, 1), MissingEdge);
  EXPECT_THROW(khop_subgraph(example_graph(), {0, 0}, 0), MissingEdge);
}

TEST(Khop, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int nm = 1 + static_cast<int>(rng() % 40), nt = 1 + static_cast<int>(rng() % 20);
    const double density = 0.1 + 0.3 * std::uniform_real_distribution<double>()(rng);
    BipartiteGraph g = graph_of(nm, nt, {});
    std::vector<EdgeRef> edges;
    for (int m = 0; m < nm; ++m) {
      for (int t = 0; t < nt; ++t) {
        if (std::uniform_real_distribution<double>()(rng) < density) {
          edges.push_back({m, t});
          g.add_edge({m, t}, rng() % 3 == 0 ? EdgeLabel::kGt : EdgeLabel::kCandidate);
        }
      }
    }
    if (edges.empty()) continue;
    const EdgeRef seed = edges[rng() % edges.size()];
    for (int k = 1; k <= 3; ++k) {
      const SubgraphSample s = khop_subgraph(g, seed, k);
      ASSERT_EQ(edge_set(s), brute_khop(edges, seed, k)) << "trial " << trial << " k " << k;
      EXPECT_TRUE(edge_set(s).count(seed));
      for (const EdgeRef& e : s.positives) EXPECT_EQ(g.label(e), EdgeLabel::kGt);
      for (const EdgeRef& e : s.negatives) EXPECT_EQ(g.label(e), EdgeLabel::kCandidate);
    }
  }
}

TEST(Khop, TruncationPrefersSeedMolecule) {
  // seed (0,0); molecule 0 has candidates to t1, t2; molecule 1 to t0 and t1
  BipartiteGraph g = graph_of(2, 3,
                              {{{0, 0}, EdgeLabel::kGt},
                               {{0, 1}, EdgeLabel::kCandidate},
                               {{0, 2}, EdgeLabel::kCandidate},
                               {{1, 0}, EdgeLabel::kCandidate},
                               {{1, 1}, EdgeLabel::kCandidate}});
  SubgraphSample s = khop_subgraph(g, {0, 0}, 2);
  ASSERT_EQ(s.negatives.size(), 4u);
  const std::vector<int> frequency = {5, 1, 9};
  SubgraphSample a = s;
  truncate_negatives(a, 2, g, frequency);
  EXPECT_EQ(a.negatives, (std::vector<EdgeRef>{{0, 1}, {0, 2}}));
  SubgraphSample b = s;
  truncate_negatives(b, 3, g, frequency);
  // third slot: the more frequent template t0 over t1
  EXPECT_EQ(b.negatives, (std::vector<EdgeRef>{{0, 1}, {0, 2}, {1, 0}}));
  SubgraphSample c = s;
  truncate_negatives(c, 10, g, frequency);
  EXPECT_EQ(c.negatives, s.negatives);
}

// ---- loss -------------------------------------------------------------------------

double loss_of(const std::vector<double>& f, std::vector<int> pos, std::vector<int> neg, double tau,
               bool include_positive = false) {
  Tape tape;
  const Var e = tape.constant(Tensor::from(static_cast<int>(f.size()), 1, f));
  return ebm_loss(e, pos, neg, tau, include_positive).value().item();
}

TEST(EbmLoss, HandExamples) {
  EXPECT_NEAR(loss_of({0.3, 0.3}, {0}, {1}, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(loss_of({0.0, 0.0, 0.0}, {0}, {1, 2}, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(loss_of({0.0, 1.0}, {0}, {1}, 0.5), -2.0, 1e-15);
}

TEST(EbmLoss, IncludePositiveIsBoundedBelow) {
  // with the positive in its own denominator the loss is a cross-entropy
  EXPECT_NEAR(loss_of({0.0, 1.0}, {0}, {1}, 0.5, true), std::log(1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_GE(loss_of({-50.0, 3.0, 4.0}, {0}, {1, 2}, 1.0, true), 0.0);
}

TEST(EbmLoss, AveragesOverPositives) {
  // two positives share one denominator
  const double lse = std::log(std::exp(-1.0) + std::exp(-2.0));
  EXPECT_NEAR(loss_of({0.5, 1.5, 1.0, 2.0}, {0, 1}, {2, 3}, 1.0), 1.0 + lse, 1e-14);
}

TEST(EbmLoss, StableForLargeEnergies) {
  EXPECT_NEAR(loss_of({1000.0, 1000.0}, {0}, {1}, 1.0), 0.0, 1e-9);
  EXPECT_TRUE(std::isfinite(loss_of({-800.0, -900.0, 900.0}, {0}, {1, 2}, 1.0)));
}

TEST(EbmLoss, Errors) {
  EXPECT_THROW(loss_of({0.0}, {0}, {}, 1.0), EmptyNegatives);
  EXPECT_THROW(loss_of({0.0}, {}, {0}, 1.0), ShapeError);
  EXPECT_THROW(loss_of({0.0, 1.0}, {0}, {1}, 0.0), ShapeError);
}

// ---- energy model on synthetic features ---------------------------------------------

NodeFeatures random_nodes(int molecules, int templates, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.3);
  NodeFeatures f;
  f.molecules = Tensor(molecules, width);
  for (double& v : f.molecules.values) v = bit(rng) ? 1.0 : 0.0;
  std::vector<double> rows;
  f.patterns_of.resize(static_cast<std::size_t>(templates));
  for (int t = 0; t < templates; ++t) {
    const int count = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < count; ++k) {
      f.patterns_of[t].push_back(static_cast<int>(f.pattern_owner.size()));
      f.pattern_owner.push_back(t);
      for (int c = 0; c < width; ++c) rows.push_back(bit(rng) ? 1.0 : 0.0);
    }
  }
  f.patterns = Tensor::from(static_cast<int>(f.pattern_owner.size()), width, rows);
  return f;
}

EnergyConfig small_config() {
  EnergyConfig c;
  c.hidden = 8;
  c.dropout = 0.0;
  return c;
}

TEST(EnergyModel, FiniteDifferenceOnSubgraphLoss) {
  const NodeFeatures nodes = random_nodes(3, 2, 12, 5);
  const std::vector<EdgeRef> edges = {{0, 0}, {1, 0}, {2, 1}};
  for (bool include_positive : {false, true}) {
    EnergyModel model(small_config(), 12, 12, 11);
    const int pos[] = {0}, neg[] = {1, 2};
    auto loss = [&](Tape& tape) {
      return ebm_loss(model.energies(tape, nodes, edges), pos, neg, 0.7, include_positive);
    };
    const FiniteDiffReport r = finite_diff_check(loss, model.parameters());
    EXPECT_TRUE(r.passed) << r.worst << " " << r.max_relative_error;
  }
}

TEST(EnergyModel, TemplateEncodingIgnoresPatternOrder) {
  std::uint64_t seed = 8;
  NodeFeatures nodes = random_nodes(4, 3, 10, seed);
  while (nodes.patterns_of[1].size() < 2) nodes = random_nodes(4, 3, 10, ++seed);
  EnergyModel model(small_config(), 10, 10, 3);
  const std::vector<EdgeRef> edges = {{0, 1}, {1, 1}, {2, 0}, {3, 2}};
  const std::vector<double> before = model.evaluate(nodes, edges);
  std::reverse(nodes.patterns_of[1].begin(), nodes.patterns_of[1].end());
  const std::vector<double> after = model.evaluate(nodes, edges);
  for (std::size_t i = 0; i < edges.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
}

TEST(EnergyModel, EvaluateIsBatchIndependent) {
  const NodeFeatures nodes = random_nodes(5, 4, 10, 2);
  EnergyModel model(small_config(), 10, 10, 4);
  std::vector<EdgeRef> edges;
  for (int m = 0; m < 5; ++m) {
    for (int t = 0; t < 4; ++t) edges.push_back({m, t});
  }
  const std::vector<double> whole = model.evaluate(nodes, edges);
  const std::vector<double> pieces = model.evaluate(nodes, edges, 3);
  for (std::size_t i = 0; i < edges.size(); ++i) EXPECT_NEAR(whole[i], pieces[i], 1e-12);
}

// Planted graph: gt edges join molecules and templates that share a hidden type.
struct Planted {
  BipartiteGraph graph;
  NodeFeatures nodes;
  std::vector<int> frequency;
};

Planted planted(int molecules, int templates, int types, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int width = 16;
  Planted p;
  p.graph = graph_of(molecules, templates, {});
  p.nodes.molecules = Tensor(molecules, width);
  p.nodes.patterns = Tensor(templates, width);
  std::vector<int> mtype(static_cast<std::size_t>(molecules)), ttype(static_cast<std::size_t>(templates));
  std::bernoulli_distribution noise(0.2);
  for (int m = 0; m < molecules; ++m) {
    mtype[m] = static_cast<int>(rng() % types);
    p.nodes.molecules.at(m, mtype[m]) = 1.0;
    for (int c = types; c < width; ++c) p.nodes.molecules.at(m, c) = noise(rng) ? 1.0 : 0.0;
  }
  p.nodes.patterns_of.resize(static_cast<std::size_t>(templates));
  for (int t = 0; t < templates; ++t) {
    ttype[t] = t % types;
    p.nodes.patterns.at(t, ttype[t]) = 1.0;
    for (int c = types; c < width; ++c) p.nodes.patterns.at(t, c) = noise(rng) ? 1.0 : 0.0;
    p.nodes.patterns_of[t] = {t};
    p.nodes.pattern_owner.push_back(t);
  }
  for (int m = 0; m < molecules; ++m) {
    for (int t = 0; t < templates; ++t) {
      if (mtype[m] == ttype[t] && rng() % 2 == 0) {
        p.graph.add_edge({m, t}, EdgeLabel::kGt);
      } else if (rng() % 4 == 0) {
        p.graph.add_edge({m, t}, EdgeLabel::kCandidate);
      }
    }
  }
  p.frequency.assign(static_cast<std::size_t>(templates), 1);
  return p;
}

TEST(TrainEbm, SeparatesPlantedEdgesAndIsDeterministic) {
  const Planted p = planted(30, 8, 4, 1);
  EnhanceConfig cfg;
  cfg.energy = small_config();
  cfg.energy.hidden = 16;
  cfg.epochs = 30;
  cfg.lr = 0.01;
  cfg.seed = 9;
  TrainResult a = train_ebm(p.graph, p.nodes, p.frequency, cfg);
  TrainResult b = train_ebm(p.graph, p.nodes, p.frequency, cfg);
  EXPECT_EQ(checkpoint_text(a.model.parameters(), ""), checkpoint_text(b.model.parameters(), ""));
  ASSERT_FALSE(a.log.empty());
  const EpochLog& last = a.log.back();
  EXPECT_LT(last.mean_positive_energy, last.mean_negative_energy);
  EXPECT_LT(last.mean_loss, a.log.front().mean_loss);

  cfg.max_steps = 3;
  EXPECT_EQ(train_ebm(p.graph, p.nodes, p.frequency, cfg).steps, 3);
}

// ---- Stage C --------------------------------------------------------------------------

TEST(StageC, PicksLowestEnergies) {
  const std::vector<EdgeRef> c = {{0, 1}, {0, 2}, {0, 3}};
  const std::map<EdgeRef, double> energy = {{{0, 1}, 0.9}, {{0, 2}, 0.1}, {{0, 3}, 0.5}};
  EXPECT_EQ(pick_top_n(c, energy, 2), (std::vector<EdgeRef>{{0, 2}, {0, 3}}));
  EXPECT_EQ(pick_top_n(c, energy, 2, true), (std::vector<EdgeRef>{{0, 1}, {0, 3}}));
  EXPECT_TRUE(pick_top_n(c, energy, 0).empty());
  EXPECT_EQ(pick_top_n(c, energy, 7).size(), 3u);
  const std::map<EdgeRef, double> flat = {{{0, 1}, 0.5}, {{0, 2}, 0.5}, {{0, 3}, 0.5}};
  EXPECT_EQ(pick_top_n(c, flat, 1), (std::vector<EdgeRef>{{0, 1}}));
}

TEST(StageC, SandwichAndBoundOnPlantedGraph) {
  const Planted p = planted(20, 6, 3, 4);
  EnergyModel model(small_config(), 16, 16, 1);
  const std::size_t gt = p.graph.gt_edges().size();
  for (int n : {0, 2, 5, 10}) {
    const StageCResult r = denoise_top_n(p.graph, model, p.nodes, n, 1);
    EXPECT_LE(r.enhanced.size(), static_cast<std::size_t>(n + 1) * gt);
    const SandwichReport s = check_sandwich(p.graph, p.graph, r.enhanced, n);
    EXPECT_TRUE(s.ok()) << s.detail;
    if (n == 0) {
      EXPECT_EQ(r.enhanced, p.graph.gt_edges());
      EXPECT_TRUE(r.selected.empty());
    }
    for (const EdgeRef& e : r.selected) EXPECT_EQ(p.graph.label(e), EdgeLabel::kCandidate);
  }
}

TEST(StageC, SandwichDetectsViolations) {
  const BipartiteGraph full = example_graph();
  BipartiteGraph filtered = full.empty_copy();
  filtered.add_edge({0, 0}, EdgeLabel::kGt);
  filtered.add_edge({2, 1}, EdgeLabel::kGt);
  filtered.add_edge({1, 0}, EdgeLabel::kCandidate);
  EXPECT_TRUE(check_sandwich(full, filtered, std::vector<EdgeRef>{{0, 0}, {2, 1}, {1, 0}}, 1).ok());
  // missing gt edge
  EXPECT_FALSE(check_sandwich(full, filtered, std::vector<EdgeRef>{{0, 0}}, 1).gt_in_enhanced);
  // enhanced edge outside the filtered graph
  EXPECT_FALSE(check_sandwich(full, filtered, std::vector<EdgeRef>{{0, 0}, {2, 1}, {0, 1}}, 1).enhanced_in_filtered);
  // bound: 3 edges with n = 0 and 2 gt
  EXPECT_FALSE(check_sandwich(full, filtered, std::vector<EdgeRef>{{0, 0}, {2, 1}, {1, 0}}, 0).within_bound);
}

// ---- desk corpus --------------------------------------------------------------------------

const std::vector<Reaction>& desk_corpus() {
  static const std::vector<Reaction> corpus = read_corpus(std::string(RETRO_DATA_DIR) + "/desk_corpus.tsv");
  return corpus;
}

TEST(Bipartite, RadiusZeroRejected) {
  const std::vector<Reaction> few(desk_corpus().begin(), desk_corpus().begin() + 5);
  EXPECT_THROW(build_bipartite_graph(few, assign_corpus_templates(few, 0)), FormatError);
}

TEST(Bipartite, DeskSubsetStageA) {
  const std::vector<Reaction> part(desk_corpus().begin(), desk_corpus().begin() + 120);
  const TemplateAssignment a = assign_corpus_templates(part, 1);
  const EnhanceData data = build_bipartite_graph(part, a);
  const BipartiteGraph& g = data.graph;
  EXPECT_EQ(g.edge_count(), g.molecule_count() * g.template_count());
  std::set<std::pair<std::string, std::string>> distinct;
  for (const Reaction& r : part) {
    const auto it = a.template_of.find(r.id);
    if (it != a.template_of.end()) distinct.emplace(product_key(r), it->second);
  }
  EXPECT_EQ(g.gt_edges().size(), distinct.size());
  EXPECT_EQ(data.products.size(), g.molecule_count());
  EXPECT_EQ(data.templates.size(), g.template_count());

  const StageAResult s = stage_a_filter(data);
  EXPECT_EQ(s.filtered.edge_count() + s.failed.size(), g.edge_count());
  EXPECT_LT(s.filtered.edge_count(), g.edge_count());
  EXPECT_TRUE(s.gt_failures.empty());
  for (const EdgeRef& e : g.gt_edges()) EXPECT_EQ(s.filtered.label(e), EdgeLabel::kGt);
  for (const EdgeRef& e : s.failed) EXPECT_TRUE(apply_template(data.templates[e.t], data.products[e.m]).empty());
  EXPECT_TRUE(check_sandwich(g, s.filtered, g.gt_edges(), 0).ok());

  // the gt edge reproduces the recorded precursors
  for (const Reaction& r : part) {
    const auto it = a.template_of.find(r.id);
    if (it == a.template_of.end()) continue;
    const EdgeRef e{*g.find_molecule(product_key(r)), *g.find_template(it->second)};
    const std::vector<std::string> out = apply_template(data.templates[e.t], data.products[e.m]);
    EXPECT_NE(std::find(out.begin(), out.end(), precursor_set_key(r)), out.end()) << r.id;
    break;
  }

  // materialized records carry provenance and parse back
  std::vector<EdgeRef> some;
  for (const auto& [e, outcome] : s.first_outcome) {
    if (g.label(e) == EdgeLabel::kCandidate) some.push_back(e);
    if (some.size() == 5) break;
  }
  const std::vector<Reaction> enhanced = materialize_enhanced(data, s, some);
  ASSERT_EQ(enhanced.size(), some.size());
  for (std::size_t i = 0; i < some.size(); ++i) {
    EXPECT_EQ(enhanced[i].provenance, Provenance::kEnhanced);
    EXPECT_EQ(enhanced[i].template_id, data.templates[some[i].t].template_id);
    EXPECT_EQ(molecule_key(enhanced[i].product), g.molecule_id(some[i].m));
    EXPECT_EQ(precursor_set_key(enhanced[i]), s.first_outcome.at(some[i]));
  }
}

TEST(Bipartite, EdgeListFile) {
  const BipartiteGraph g = example_graph();
  const auto path = std::filesystem::temp_directory_path() / "retro_edges_test.tsv";
  const std::map<EdgeRef, double> energy = {{{1, 0}, 0.25}};
  const std::vector<EdgeRef> edges = {{0, 0}, {1, 0}};
  write_edge_list(path, g, edges, EdgeLabel::kEnhanced, &energy);
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), "m_id\tt_id\tlabel\tenergy\nm1\tt1\tgt\t\nm2\tt1\tenhanced\t0.25\n");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace retro
