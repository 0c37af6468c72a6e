// Acceptance runner: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "retro/cli.hpp"
#include "retro/enhance.hpp"
#include "retro/error.hpp"
#include "retro/learn.hpp"
#include "retro/splits.hpp"
#include "retro/templates.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace retro;

namespace {

const std::string kCorpus = std::string(RETRO_DATA_DIR) + "/desk_corpus.tsv";
// Full USPTO50K in corpus TSV form enables criterion 9.
constexpr const char* kUsptoEnv = "RETRO_USPTO50K";

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kFail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Status::kPass : Status::kFail, std::move(detail)}; }

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "retro_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "retro");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const std::vector<Reaction>& desk() {
  static const std::vector<Reaction> corpus = read_corpus(kCorpus);
  return corpus;
}

const TemplateAssignment& desk_assignment(int radius) {
  static std::map<int, TemplateAssignment> cache;
  auto it = cache.find(radius);
  if (it == cache.end()) it = cache.emplace(radius, assign_corpus_templates(desk(), radius)).first;
  return it->second;
}

// ---- 1 ----------------------------------------------------------------------------------------

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome khop_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  int cases = 0, matches = 0;
  std::string first_mismatch;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nm = 1 + static_cast<int>(rng() % 40), nt = 1 + static_cast<int>(rng() % 20);
    const double density = std::uniform_real_distribution<double>(0.1, 0.4)(rng);
    std::bernoulli_distribution edge(density), gt(0.3);
    BipartiteGraph g;
    for (int m = 0; m < nm; ++m) g.add_molecule("m" + std::to_string(m));
    for (int t = 0; t < nt; ++t) g.add_template("t" + std::to_string(t));
    std::vector<std::vector<char>> adj(nm, std::vector<char>(nt, 0));
    for (int m = 0; m < nm; ++m) {
      for (int t = 0; t < nt; ++t) {
        if (!edge(rng)) continue;
        adj[m][t] = 1;
        g.add_edge({m, t}, gt(rng) ? EdgeLabel::kGt : EdgeLabel::kCandidate);
      }
    }
    std::vector<EdgeRef> all = g.edges();
    if (all.empty()) {
      adj[0][0] = 1;
      g.add_edge({0, 0}, EdgeLabel::kGt);
      all = g.edges();
    }
    const EdgeRef seed = all[rng() % all.size()];
    for (int hops = 1; hops <= 3; ++hops) {
      // brute force: replace the molecule and template sets K times from the
      // adjacency matrix, then take every edge inside both sets
      std::vector<char> ms(nm, 0), ts(nt, 0);
      ms[seed.m] = 1;
      ts[seed.t] = 1;
      for (int k = 0; k < hops; ++k) {
        std::vector<char> next_m(nm, 0), next_t(nt, 0);
        for (int m = 0; m < nm; ++m) {
          for (int t = 0; t < nt; ++t) {
            if (!adj[m][t]) continue;
            if (ts[t]) next_m[m] = 1;
            if (ms[m]) next_t[t] = 1;
          }
        }
        ms = next_m;
        ts = next_t;
      }
      std::set<EdgeRef> expected_pos, expected_neg;
      std::vector<int> expected_m, expected_t;
      for (int m = 0; m < nm; ++m) {
        if (ms[m]) expected_m.push_back(m);
      }
      for (int t = 0; t < nt; ++t) {
        if (ts[t]) expected_t.push_back(t);
      }
      for (int m : expected_m) {
        for (int t : expected_t) {
          if (!adj[m][t]) continue;
          (g.label({m, t}) == EdgeLabel::kGt ? expected_pos : expected_neg).insert({m, t});
        }
      }
      const SubgraphSample s = khop_subgraph(g, seed, hops);
      const bool same = s.molecules == expected_m && s.templates == expected_t &&
                        std::set<EdgeRef>(s.positives.begin(), s.positives.end()) == expected_pos &&
                        std::set<EdgeRef>(s.negatives.begin(), s.negatives.end()) == expected_neg &&
                        s.positives.size() == expected_pos.size() && s.negatives.size() == expected_neg.size();
      ++cases;
      matches += same;
      if (!same && first_mismatch.empty()) first_mismatch = " first mismatch: trial " + std::to_string(trial);
    }
  }
  const double seconds = seconds_since(start);
  return pass_if(matches == cases && seconds < 10.0, std::to_string(matches) + "/" + std::to_string(cases) +
                                                         " cases match in " + num(seconds, 2) + " s" + first_mismatch);
}

// ---- 2 ----------------------------------------------------------------------------------------

NodeFeatures random_nodes(int molecules, int templates, int width, std::mt19937_64& rng) {
  std::bernoulli_distribution bit(0.35);
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

// A random parameter draw: every weight and bias from N(0, 0.5^2). Zero
// biases would put ReLU inputs of all-zero rows exactly on the kink.
void draw_parameters(const ParameterList& params, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.5);
  for (Parameter* p : params) {
    for (double& v : p->value.values) v = g(rng);
  }
}

double loss_at(const LossFn& loss) {
  Tape tape;
  return loss(tape).value().item();
}

// A slope jump (ReLU kink) within +-h along the reported coordinate makes the
// one-sided differences disagree far beyond the curvature term h * f''.
// Such a draw has no derivative to check.
bool kink_near(const LossFn& loss, const ParameterList& params, const std::string& coordinate, double h) {
  const std::size_t open = coordinate.find('[');
  const std::string name = coordinate.substr(0, open);
  const std::size_t index = std::stoul(coordinate.substr(open + 1));
  for (Parameter* p : params) {
    if (p->name != name) continue;
    double& v = p->value.values.at(index);
    const double original = v;
    const double mid = loss_at(loss);
    v = original + h;
    const double up = loss_at(loss);
    v = original - h;
    const double down = loss_at(loss);
    v = original;
    return std::fabs((up - mid) / h - (mid - down) / h) > 1e-3;
  }
  return false;
}

Outcome gradient_exactness() {
  constexpr double h = 1e-5, tol = 1e-4;
  std::mt19937_64 rng(77);
  double worst[2] = {0.0, 0.0};
  int accepted[2] = {0, 0}, failed = 0, kinks = 0;
  std::string where;
  auto record = [&](int family, const LossFn& loss, const ParameterList& params, const std::string& label) {
    const FiniteDiffReport r = finite_diff_check(loss, params, h, tol);
    if (!r.passed && kink_near(loss, params, r.worst, h)) {
      ++kinks;
      return;
    }
    ++accepted[family];
    worst[family] = std::max(worst[family], r.max_relative_error);
    if (!r.passed) {
      ++failed;
      if (where.empty()) where = ", first failure " + label + " at " + r.worst;
    }
  };
  // energy model on a random subgraph
  for (int d = 0; accepted[0] < 60 && d < 200; ++d) {
    const int nm = 2 + static_cast<int>(rng() % 4), nt = 2 + static_cast<int>(rng() % 3), width = 6 + static_cast<int>(rng() % 6);
    const NodeFeatures nodes = random_nodes(nm, nt, width, rng);
    std::vector<EdgeRef> edges;
    for (int m = 0; m < nm; ++m) {
      for (int t = 0; t < nt; ++t) {
        if (rng() % 2 || edges.size() < 2) edges.push_back({m, t});
      }
    }
    std::vector<int> idx(edges.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t npos = 1 + rng() % (edges.size() - 1);
    const std::vector<int> pos(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(npos));
    const std::vector<int> neg(idx.begin() + static_cast<std::ptrdiff_t>(npos), idx.end());
    EnergyConfig cfg;
    cfg.hidden = 4 + static_cast<int>(rng() % 6);
    cfg.dropout = 0.0;
    cfg.tau = std::uniform_real_distribution<double>(0.3, 2.0)(rng);
    cfg.include_positive = d % 2 == 1;
    EnergyModel model(cfg, width, width, rng());
    draw_parameters(model.parameters(), rng);
    auto loss = [&](Tape& tape) {
      return ebm_loss(model.energies(tape, nodes, edges), pos, neg, cfg.tau, cfg.include_positive);
    };
    record(0, loss, model.parameters(), "ebm draw " + std::to_string(d));
  }
  // classifier training objective, with and without the IRM penalty and centre head
  for (int d = 0; accepted[1] < 60 && d < 200; ++d) {
    const int width = 3 + static_cast<int>(rng() % 5), rows = 6 + static_cast<int>(rng() % 10);
    const int classes = 2 + static_cast<int>(rng() % 3), centers = 2;
    ClassifierConfig c;
    c.hidden = {3 + static_cast<int>(rng() % 5)};
    c.dropout = 0.0;
    c.center_head = d % 3 == 0;
    c.seed = rng();
    std::vector<std::string> vocab, center_vocab;
    for (int k = 0; k < classes; ++k) vocab.push_back("t" + std::to_string(k));
    if (c.center_head) center_vocab = {"c0", "c1"};
    TemplateClassifier model(c, width, vocab, center_vocab);
    draw_parameters(model.parameters(), rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Tensor x(rows, width);
    for (double& v : x.values) v = gauss(rng);
    std::vector<int> labels, envs, center_labels;
    for (int r = 0; r < rows; ++r) {
      labels.push_back(static_cast<int>(rng() % classes));
      envs.push_back(static_cast<int>(rng() % 3));
      if (c.center_head) center_labels.push_back(static_cast<int>(rng() % (centers + 1)) - 1);
    }
    const double lambda = d % 4 == 0 ? 0.0 : std::uniform_real_distribution<double>(0.1, 100.0)(rng);
    const PenaltyTarget target = c.center_head && d % 2 ? PenaltyTarget::kCenterHead : PenaltyTarget::kTemplateHead;
    if (target == PenaltyTarget::kCenterHead) center_labels[0] = 0;
    const std::vector<int> no_env;
    auto loss = [&](Tape& tape) {
      return classifier_objective(tape, model, x, labels, d % 5 == 4 ? no_env : envs, center_labels, lambda, target).loss;
    };
    record(1, loss, model.parameters(), "classifier draw " + std::to_string(d));
  }
  const int draws = accepted[0] + accepted[1];
  return pass_if(failed == 0 && draws >= 100,
                 std::to_string(draws) + " draws, max rel err ebm " + num(worst[0] * 1e6, 3) + "e-6, classifier " +
                     num(worst[1] * 1e6, 3) + "e-6, " + std::to_string(failed) + " failed, " + std::to_string(kinks) +
                     " draws resampled at a ReLU kink" + where);
}

// ---- 3 ----------------------------------------------------------------------------------------

Outcome ebm_separation() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> aucs;
  int max_steps = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const synthetic::PlantedGraph p = synthetic::planted_graph(200, 40, 8, 0.1, 12, 50 + s);
    EnhanceConfig cfg;
    cfg.energy.hidden = 32;
    cfg.energy.dropout = 0.0;
    cfg.lr = 0.001;
    cfg.batch_size = 16;
    cfg.epochs = 1000;
    cfg.max_steps = 500;
    cfg.seed = s;
    TrainResult r = train_ebm(p.graph, p.nodes, p.frequency, cfg);
    max_steps = std::max(max_steps, r.steps);
    const std::vector<EdgeRef> edges = p.graph.edges();
    aucs.push_back(synthetic::gt_auc(p.graph, edges, r.model.evaluate(p.nodes, edges)));
  }
  std::string all;
  for (double a : aucs) all += " " + num(a, 3);
  const double med = median(aucs);
  const double seconds = seconds_since(start);
  return pass_if(med >= 0.95 && max_steps <= 500 && seconds < 120.0,
                 "median AUC " + num(med) + " (seeds" + all + "), " + std::to_string(max_steps) + " steps max, " +
                     num(seconds, 1) + " s");
}

// ---- 4 ----------------------------------------------------------------------------------------

Outcome irm_benefit() {
  ClassifierConfig c;
  c.hidden = {};
  c.dropout = 0.0;
  c.epochs = 500;
  c.batch_size = 2000;
  c.lr = 0.02;
  std::vector<double> erm_acc;
  std::map<double, std::vector<double>> irm_acc;
  bool bit_exact = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ClassifierData train = synthetic::spurious_task({0.95, 0.85}, 1000, 0.9, 0, 100 + s);
    const ClassifierData test = synthetic::spurious_task({0.10}, 2000, 0.9, 0, 900 + s);
    c.seed = s;
    IrmConfig irm;
    irm.warmup_epochs = 100;
    TrainedClassifier erm = train_classifier(TemplateClassifier(c, 2, {"0", "1"}), train, TrainMode::kErm, irm);
    erm_acc.push_back(synthetic::accuracy(erm.model, test));
    irm.lambda = 0.0;
    TrainedClassifier zero = train_classifier(TemplateClassifier(c, 2, {"0", "1"}), train, TrainMode::kIrm, irm);
    bit_exact = bit_exact && checkpoint_text(erm.model.parameters()) == checkpoint_text(zero.model.parameters());
    for (double lambda : {1.0, 10.0, 100.0}) {
      irm.lambda = lambda;
      TrainedClassifier inv = train_classifier(TemplateClassifier(c, 2, {"0", "1"}), train, TrainMode::kIrm, irm);
      irm_acc[lambda].push_back(synthetic::accuracy(inv.model, test));
    }
  }
  double best = 0.0, best_lambda = 0.0;
  std::string per_lambda;
  for (const auto& [lambda, acc] : irm_acc) {
    const double m = median(acc);
    per_lambda += " l=" + num(lambda, 0) + ":" + num(m, 3);
    if (m > best) {
      best = m;
      best_lambda = lambda;
    }
  }
  const double erm = median(erm_acc);
  return pass_if(erm <= 0.70 && best >= 0.80 && bit_exact,
                 "ERM " + num(erm, 3) + ", IRM best " + num(best, 3) + " at lambda " + num(best_lambda, 0) + " (" +
                     per_lambda.substr(1) + "), lambda=0 bit-exact " + (bit_exact ? "yes" : "no"));
}

// ---- 5 ----------------------------------------------------------------------------------------

bool within_one(std::size_t got, double target) { return std::fabs(static_cast<double>(got) - target) <= 1.0; }

Outcome split_invariants() {
  const std::vector<Reaction>& corpus = desk();
  std::vector<std::string> problems;
  int manifests = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (int radius : {0, 1}) {
      const TemplateAssignment& a = desk_assignment(radius);
      const SplitManifest m = make_label_split(corpus, a.template_of, radius, 0.1, seed);
      ++manifests;
      const std::string tag = "label r" + std::to_string(radius) + " seed " + std::to_string(seed);
      if (!validate_manifest(m, corpus, a.template_of).ok()) problems.push_back(tag + ": validation");
      std::set<std::string> id_side, ood_side;
      for (const auto* part : {&m.train, &m.val, &m.test_id}) {
        for (const std::string& id : *part) id_side.insert(a.template_of.at(id));
      }
      for (const std::string& id : m.test_ood) ood_side.insert(a.template_of.at(id));
      for (const std::string& t : ood_side) {
        if (id_side.count(t)) problems.push_back(tag + ": shared template " + t);
      }
      const double pool = static_cast<double>(m.train.size() + m.val.size() + m.test_id.size());
      if (!within_one(m.train.size(), pool * 7 / 9) || !within_one(m.val.size(), pool / 9) ||
          !within_one(m.test_id.size(), pool / 9)) {
        problems.push_back(tag + ": ID partitions off 7:1:1");
      }
      const double assigned = static_cast<double>(a.template_of.size());
      const double target = std::ceil(0.1 * assigned);
      const double overshoot = 2.0 * assigned / static_cast<double>(a.table.size());
      const double ood = static_cast<double>(m.test_ood.size());
      if (ood < target || ood > target + overshoot) problems.push_back(tag + ": test_ood size " + num(ood, 0));
    }
    const TemplateAssignment& a0 = desk_assignment(0);
    std::map<std::string, std::size_t> class_size;
    for (const auto& [id, t] : a0.template_of) ++class_size[t];
    for (CovariateCriterion c : {CovariateCriterion::kSize, CovariateCriterion::kScaffold}) {
      const SplitManifest m = make_covariate_split(corpus, a0.template_of, c, 10, 0.1, seed);
      ++manifests;
      const std::string tag = std::string(split_kind_name(m.kind)) + " seed " + std::to_string(seed);
      if (!validate_manifest(m, corpus, a0.template_of).ok()) problems.push_back(tag + ": validation");
      std::map<std::string, std::array<std::size_t, 4>> per_class;
      const std::vector<std::string>* parts[] = {&m.train, &m.val, &m.test_id, &m.test_ood};
      for (int p = 0; p < 4; ++p) {
        for (const std::string& id : *parts[p]) ++per_class[a0.template_of.at(id)][p];
      }
      for (const auto& [t, n] : class_size) {
        const bool kept = per_class.count(t) > 0;
        if (n < 10 && kept) problems.push_back(tag + ": small class " + t + " kept");
        if (n >= 10 && !kept) problems.push_back(tag + ": class " + t + " dropped");
      }
      for (const auto& [t, counts] : per_class) {
        const std::size_t n = class_size.at(t);
        if (counts[0] == 0 || counts[3] == 0) problems.push_back(tag + ": class " + t + " missing a side");
        const std::size_t rounded = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n))));
        if (counts[3] != std::min(rounded, n - 1)) problems.push_back(tag + ": class " + t + " OOD count");
        const double rest = static_cast<double>(n - counts[3]);
        if (!within_one(counts[0], rest * 7 / 9) || !within_one(counts[1], rest / 9) || !within_one(counts[2], rest / 9)) {
          problems.push_back(tag + ": class " + t + " ID partitions off 7:1:1");
        }
      }
      for (const std::string& id : m.discarded) {
        if (class_size.at(a0.template_of.at(id)) >= 10) problems.push_back(tag + ": discarded member of a kept class");
      }
    }
  }
  std::string detail = std::to_string(manifests) + " manifests checked, " + std::to_string(problems.size()) + " problems";
  if (!problems.empty()) detail += " (" + problems.front() + ")";
  return pass_if(problems.empty(), detail);
}

// ---- 6 ----------------------------------------------------------------------------------------

Reaction scrambled(const Reaction& r, std::mt19937& rng) {
  Reaction out = r;
  std::shuffle(out.precursors.begin(), out.precursors.end(), rng);
  std::vector<int> fresh(500);
  std::iota(fresh.begin(), fresh.end(), 1);
  std::shuffle(fresh.begin(), fresh.end(), rng);
  std::map<int, int> remap;
  auto renumber = [&](MolecularGraph& g) {
    std::vector<int> order(g.atom_count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    g = permute_atoms(g, order);
    for (std::size_t i = 0; i < g.atom_count(); ++i) {
      Atom& a = g.mutable_atom(static_cast<int>(i));
      if (a.atom_map == 0) continue;
      if (!remap.count(a.atom_map)) remap[a.atom_map] = fresh[remap.size()];
      a.atom_map = remap[a.atom_map];
    }
  };
  renumber(out.product);
  for (MolecularGraph& p : out.precursors) renumber(p);
  return out;
}

Outcome template_round_trip() {
  const std::vector<Reaction>& corpus = desk();
  std::mt19937 rng(6);
  int hits = 0, stable = 0, extracted = 0;
  for (const Reaction& r : corpus) {
    Template t;
    try {
      t = extract_template(r, 1);
    } catch (const Error&) {
      continue;
    }
    ++extracted;
    MolecularGraph product = r.product;
    clear_maps(product);
    const std::vector<std::string> out = apply_template(t, product);
    hits += std::find(out.begin(), out.end(), precursor_set_key(r)) != out.end();
    const Template again = extract_template(scrambled(r, rng), 1);
    stable += again.canonical_string == t.canonical_string && again.template_id == t.template_id;
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(corpus.size());
  return pass_if(rate >= 0.95 && stable == extracted,
                 "round trip " + std::to_string(hits) + "/" + std::to_string(corpus.size()) + " = " + num(rate) +
                     ", reorder-stable " + std::to_string(stable) + "/" + std::to_string(extracted));
}

// ---- 7 ----------------------------------------------------------------------------------------

struct EdgeFile {
  std::set<std::pair<std::string, std::string>> all, gt;
};

EdgeFile read_edges(const fs::path& path) {
  EdgeFile f;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream s(line);
    std::string m, t, label;
    std::getline(s, m, '\t');
    std::getline(s, t, '\t');
    std::getline(s, label, '\t');
    if (m.empty() || label == "label") continue;
    f.all.insert({m, t});
    if (label == "gt") f.gt.insert({m, t});
  }
  return f;
}

bool subset(const std::set<std::pair<std::string, std::string>>& a, const std::set<std::pair<std::string, std::string>>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::string split_manifest(const std::string& kind, std::uint64_t seed) {
  const fs::path dir = work_dir() / ("split_" + kind + "_" + std::to_string(seed));
  const std::string path = (dir / ("split_" + kind + ".json")).string();
  if (!fs::exists(path)) {
    cli({"split", "--corpus", kCorpus, "--kind", kind, "--seed", std::to_string(seed), "--out", dir.string(),
         "--deterministic"});
  }
  return path;
}

std::vector<std::string> enhance_args(const std::string& manifest, const std::string& out, int n) {
  return {"enhance", "--corpus", kCorpus, "--split", manifest, "--out", out, "--top-n", std::to_string(n),
          "--epochs", "2", "--hidden", "64", "--bits", "1024", "--seed", "11", "--deterministic"};
}

Outcome sandwich() {
  const std::string manifest = split_manifest("label_retro", 1);
  std::string detail;
  bool ok = true;
  for (int n : {0, 2, 5, 10}) {
    const fs::path out = work_dir() / ("enhance_n" + std::to_string(n));
    std::string err;
    const int code = cli(enhance_args(manifest, out.string(), n), &err);
    if (code != 0) {
      ok = false;
      detail += " n=" + std::to_string(n) + ": exit " + std::to_string(code) + " " + err;
      continue;
    }
    // recheck from the written edge lists, independent of the in-process check
    const EdgeFile full = read_edges(out / "graph_full.tsv");
    const EdgeFile filtered = read_edges(out / "graph_filtered.tsv");
    const EdgeFile enhanced = read_edges(out / "graph_enhanced.tsv");
    const bool chain = subset(full.gt, enhanced.all) && subset(enhanced.all, filtered.all) && subset(filtered.all, full.all);
    const bool bound = enhanced.all.size() <= static_cast<std::size_t>(n + 1) * full.gt.size();
    const auto report = nlohmann::json::parse(slurp(out / "enhance_report.json"));
    const bool reported = report["sandwich"]["within_bound"].get<bool>() && report["sandwich"]["gt_in_enhanced"].get<bool>();
    ok = ok && chain && bound && reported;
    detail += " n=" + std::to_string(n) + ": " + std::to_string(full.gt.size()) + "<=" +
              std::to_string(enhanced.all.size()) + "<=" + std::to_string(filtered.all.size()) + "<=" +
              std::to_string(full.all.size()) + (chain && bound ? "" : " VIOLATED");
  }
  return pass_if(ok, detail.substr(1));
}

// ---- 8 ----------------------------------------------------------------------------------------

struct TopOne {
  double id = 0.0, ood = 0.0;
  bool ok = false;
};

TopOne reference_run(const std::string& kind, std::uint64_t seed) {
  const std::string manifest = split_manifest(kind, seed);
  const std::string tag = kind + "_" + std::to_string(seed);
  const fs::path model = work_dir() / ("model_" + tag);
  const fs::path eval = work_dir() / ("eval_" + tag);
  TopOne r;
  if (cli({"train", "--corpus", kCorpus, "--split", manifest, "--out", model.string(), "--seed", "1",
           "--deterministic"}) != 0) {
    return r;
  }
  if (cli({"eval", "--corpus", kCorpus, "--split", manifest, "--model", model.string(), "--out", eval.string(),
           "--deterministic"}) != 0) {
    return r;
  }
  const auto report = nlohmann::json::parse(slurp(eval / "eval_report.json"));
  r.id = report["metrics"]["test_id"]["1"].get<double>();
  r.ood = report["metrics"]["test_ood"]["1"].get<double>();
  r.ok = true;
  return r;
}

// Test partitions hold ~42-50 reactions, so one reaction moves top-1 by ~2%;
// the comparison uses the mean over five split seeds.
Outcome degradation() {
  bool ok = true;
  std::string detail;
  for (const std::string kind : {"covariate_size", "covariate_scaffold", "label_retro", "label_minimal"}) {
    double id = 0.0, ood = 0.0;
    int runs = 0;
    std::string per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TopOne r = reference_run(kind, seed);
      if (!r.ok) continue;
      ++runs;
      id += r.id;
      ood += r.ood;
      per_seed += " " + num(r.id, 2) + "/" + num(r.ood, 2);
    }
    if (runs < 5) {
      ok = false;
      detail += "; " + kind + " only " + std::to_string(runs) + " of 5 runs completed";
      continue;
    }
    id /= runs;
    ood /= runs;
    bool good = ood <= id;
    if (kind == "label_minimal") good = good && ood < 0.05;
    ok = ok && good;
    detail += "; " + kind + " ID " + num(id, 3) + " OOD " + num(ood, 3) + " (per seed ID/OOD" + per_seed + ")";
  }
  return pass_if(ok, "mean top-1 over split seeds 1-5" + detail);
}

// ---- 9 ----------------------------------------------------------------------------------------

bool within(double got, double reference, double tol) { return std::fabs(got - reference) <= tol * reference; }

Outcome full_scale() {
  const char* path = std::getenv(kUsptoEnv);
  if (!path || !*path || !fs::exists(path)) {
    return {Status::kSkip, std::string("set ") + kUsptoEnv + " to a USPTO50K corpus TSV to run"};
  }
  const std::vector<Reaction> corpus = read_corpus(path);
  const TemplateAssignment minimal = assign_corpus_templates(corpus, 0);
  const SplitManifest cov = make_covariate_split(corpus, minimal.template_of, CovariateCriterion::kSize, 10, 0.1, 0);
  const TemplateAssignment retro = assign_corpus_templates(corpus, 1);
  const SplitManifest label = make_label_split(corpus, retro.template_of, 1, 0.1, 0);
  std::map<std::string, const Reaction*> by_id;
  for (const Reaction& r : corpus) by_id[r.id] = &r;
  std::vector<Reaction> train;
  for (const std::string& id : label.train) train.push_back(*by_id.at(id));
  const EnhanceData data = build_bipartite_graph(train, assign_corpus_templates(train, 1));
  const StageAResult a = stage_a_filter(data);
  const double mols = static_cast<double>(data.graph.molecule_count());
  const double tmpl = static_cast<double>(data.graph.template_count());
  const double edges = static_cast<double>(a.filtered.edge_count());
  const double discards = static_cast<double>(cov.discarded.size());
  const bool ok = within(mols, 34750, 0.15) && within(tmpl, 6788, 0.15) && within(edges, 2018153, 0.15) &&
                  within(discards, 4472, 0.15);
  return pass_if(ok, "molecules " + num(mols, 0) + ", templates " + num(tmpl, 0) + ", edges " + num(edges, 0) +
                         ", covariate discards " + num(discards, 0));
}

// ---- 10 ---------------------------------------------------------------------------------------

std::map<std::string, std::string> dir_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

Outcome determinism() {
  const std::string manifest = split_manifest("label_retro", 1);
  const std::string enhanced = (work_dir() / "enhance_n5" / "enhanced_corpus.tsv").string();
  const std::string model = (work_dir() / "model_label_retro_1").string();
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"extract-templates r0", {"extract-templates", "--corpus", kCorpus, "--radius", "0"}},
      {"extract-templates r1", {"extract-templates", "--corpus", kCorpus, "--radius", "1"}},
      {"split label_minimal", {"split", "--corpus", kCorpus, "--kind", "label_minimal", "--seed", "4"}},
      {"split label_retro", {"split", "--corpus", kCorpus, "--kind", "label_retro", "--seed", "4"}},
      {"split covariate_size", {"split", "--corpus", kCorpus, "--kind", "covariate_size", "--seed", "4"}},
      {"split covariate_scaffold", {"split", "--corpus", kCorpus, "--kind", "covariate_scaffold", "--seed", "4"}},
      {"enhance", {"enhance", "--corpus", kCorpus, "--split", manifest, "--epochs", "2", "--hidden", "64", "--bits",
                   "1024", "--seed", "3"}},
      {"train erm", {"train", "--corpus", kCorpus, "--split", manifest, "--epochs", "5", "--seed", "3"}},
      {"train irm", {"train", "--corpus", kCorpus, "--split", manifest, "--epochs", "5", "--mode", "irm", "--lambda",
                     "10", "--warmup", "2", "--bin", "scaffold", "--center-head", "--seed", "3", "--enhanced",
                     enhanced}},
      {"eval", {"eval", "--corpus", kCorpus, "--split", manifest, "--model", model, "--include-train"}},
  };
  int identical = 0;
  std::string bad;
  for (const auto& [name, args] : commands) {
    std::map<std::string, std::string> runs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = work_dir() / "determinism" / (std::to_string(identical) + "_" + std::to_string(k));
      fs::remove_all(out);
      std::vector<std::string> full = args;
      full.insert(full.end(), {"--out", out.string(), "--deterministic"});
      ran = ran && cli(full) == 0;
      if (ran) runs[k] = dir_bytes(out);
    }
    if (ran && !runs[0].empty() && runs[0] == runs[1]) {
      ++identical;
    } else if (bad.empty()) {
      bad = " first difference: " + name + (ran ? "" : " (command failed)");
    }
  }
  return pass_if(identical == static_cast<int>(commands.size()),
                 std::to_string(identical) + "/" + std::to_string(commands.size()) + " commands byte-identical" + bad);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"k-hop oracle equivalence", khop_oracle},
      {"gradient exactness", gradient_exactness},
      {"EBM separation", ebm_separation},
      {"IRM benefit", irm_benefit},
      {"split invariants", split_invariants},
      {"template round trip", template_round_trip},
      {"sandwich invariant", sandwich},
      {"degradation direction", degradation},
      {"USPTO50K scale (data-gated)", full_scale},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double seconds = seconds_since(start);
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kSkip ? "SKIP" : "FAIL";
    failures += o.status == Status::kFail;
    std::cout << "criterion " << std::setw(2) << i + 1 << " " << tag << "  " << criteria[i].first << ": " << o.detail
              << " [" << num(seconds, 1) << " s]" << std::endl;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed or skipped"))
            << std::endl;
  return failures ? 1 : 0;
}
