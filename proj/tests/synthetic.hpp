#pragma once

// Synthetic generators shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "retro/enhance.hpp"
#include "retro/learn.hpp"

namespace retro::synthetic {

// Two-class task. A latent sign a gives the label (kept with probability
// `invariant`); the spurious sign agrees with the label with probability
// p_env. Feature magnitudes are jittered so signs carry all the information.
// Columns: invariant, spurious, then `noise_dims` pure noise.
inline ClassifierData spurious_task(const std::vector<double>& p_env, int per_env, double invariant, int noise_dims,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), jitter(0.5, 1.5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int width = 2 + noise_dims;
  ClassifierData d;
  std::vector<double> rows;
  for (std::size_t e = 0; e < p_env.size(); ++e) {
    for (int i = 0; i < per_env; ++i) {
      const double a = unit(rng) < 0.5 ? 1.0 : -1.0;
      const double y = unit(rng) < invariant ? a : -a;
      const double s = unit(rng) < p_env[e] ? y : -y;
      rows.push_back(a * jitter(rng));
      rows.push_back(s * jitter(rng));
      for (int k = 0; k < noise_dims; ++k) rows.push_back(gauss(rng));
      d.labels.push_back(y > 0 ? 1 : 0);
      d.environments.push_back(static_cast<int>(e));
    }
  }
  d.features = Tensor::from(static_cast<int>(d.labels.size()), width, rows);
  return d;
}

// Bipartite graph whose gt edges are exactly the (molecule, template) pairs
// sharing a hidden type. Non-matching pairs become candidates with
// probability `candidate_rate`. Features: type one-hot, then noise bits.
struct PlantedGraph {
  BipartiteGraph graph;
  NodeFeatures nodes;
  std::vector<int> frequency;
};

inline PlantedGraph planted_graph(int molecules, int templates, int types, double candidate_rate, int width,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution noise(0.2), candidate(candidate_rate);
  PlantedGraph p;
  for (int m = 0; m < molecules; ++m) p.graph.add_molecule("m" + std::to_string(m));
  for (int t = 0; t < templates; ++t) p.graph.add_template("t" + std::to_string(t));
  p.nodes.molecules = Tensor(molecules, width);
  p.nodes.patterns = Tensor(templates, width);
  std::vector<int> mtype(static_cast<std::size_t>(molecules));
  for (int m = 0; m < molecules; ++m) {
    mtype[m] = static_cast<int>(rng() % static_cast<unsigned>(types));
    p.nodes.molecules.at(m, mtype[m]) = 1.0;
    for (int c = types; c < width; ++c) p.nodes.molecules.at(m, c) = noise(rng) ? 1.0 : 0.0;
  }
  p.nodes.patterns_of.resize(static_cast<std::size_t>(templates));
  for (int t = 0; t < templates; ++t) {
    p.nodes.patterns.at(t, t % types) = 1.0;
    for (int c = types; c < width; ++c) p.nodes.patterns.at(t, c) = noise(rng) ? 1.0 : 0.0;
    p.nodes.patterns_of[t] = {t};
    p.nodes.pattern_owner.push_back(t);
  }
  for (int m = 0; m < molecules; ++m) {
    for (int t = 0; t < templates; ++t) {
      if (mtype[m] == t % types) {
        p.graph.add_edge({m, t}, EdgeLabel::kGt);
      } else if (candidate(rng)) {
        p.graph.add_edge({m, t}, EdgeLabel::kCandidate);
      }
    }
  }
  p.frequency.assign(static_cast<std::size_t>(templates), 1);
  return p;
}

// Probability that a random gt edge has lower energy than a random candidate
// edge (ties count half).
inline double gt_auc(const BipartiteGraph& g, const std::vector<EdgeRef>& edges, const std::vector<double>& energy) {
  std::vector<std::pair<double, bool>> scored;
  for (std::size_t i = 0; i < edges.size(); ++i) scored.emplace_back(energy[i], g.label(edges[i]) == EdgeLabel::kGt);
  std::sort(scored.begin(), scored.end());
  double wins = 0.0, gt_below = 0.0, gt = 0.0, cand = 0.0;
  for (std::size_t i = 0; i < scored.size();) {
    double tie_gt = 0.0, tie_cand = 0.0;
    std::size_t j = i;
    for (; j < scored.size() && scored[j].first == scored[i].first; ++j) (scored[j].second ? tie_gt : tie_cand) += 1.0;
    wins += gt_below * tie_cand + 0.5 * tie_gt * tie_cand;
    gt_below += tie_gt;
    gt += tie_gt;
    cand += tie_cand;
    i = j;
  }
  return gt * cand > 0.0 ? wins / (gt * cand) : 0.0;
}

inline double accuracy(TemplateClassifier& model, const ClassifierData& d) {
  const Tensor s = model.scores(d.features);
  int hits = 0;
  for (int r = 0; r < s.rows; ++r) {
    int best = 0;
    for (int c = 1; c < s.cols; ++c) {
      if (s.at(r, c) > s.at(r, best)) best = c;
    }
    hits += best == d.labels[r];
  }
  return static_cast<double>(hits) / s.rows;
}

}  // namespace retro::synthetic
