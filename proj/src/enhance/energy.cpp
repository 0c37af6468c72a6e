#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "retro/encoders.hpp"
#include "retro/enhance.hpp"
#include "retro/error.hpp"

namespace retro {

namespace {

std::uint64_t salted(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ (0xd1b54a32d192ed03ULL * (salt + 1));
  z = (z ^ (z >> 29)) * 0xbf58476d1ce4e5b9ULL;
  return z ^ (z >> 32);
}

Tensor select_rows(const Tensor& src, std::span<const int> rows) {
  Tensor out(static_cast<int>(rows.size()), src.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(&src.values[static_cast<std::size_t>(rows[r]) * src.cols], src.cols, &out.values[r * src.cols]);
  }
  return out;
}

// Distinct sorted node ids plus, per edge, the position of its node in that list.
template <typename Get>
std::vector<int> distinct(std::span<const EdgeRef> edges, Get get, std::vector<int>& position) {
  std::vector<int> ids;
  for (const EdgeRef& e : edges) ids.push_back(get(e));
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  position.clear();
  for (const EdgeRef& e : edges) {
    position.push_back(static_cast<int>(std::lower_bound(ids.begin(), ids.end(), get(e)) - ids.begin()));
  }
  return ids;
}

}  // namespace

NodeFeatures node_features(const EnhanceData& data, const EnergyConfig& config) {
  NodeFeatures f;
  const bool mpnn = config.encoder == EncoderKind::kMpnn;
  std::vector<Fingerprint> mol_fps, pattern_fps;
  for (const MolecularGraph& p : data.products) {
    if (mpnn) {
      const MolecularGraph* one[] = {&p};
      f.molecule_graphs.push_back(graph_batch(one));
    } else {
      mol_fps.push_back(circular_fingerprint(p, config.fingerprint_radius, config.fingerprint_bits));
    }
  }
  f.patterns_of.resize(data.templates.size());
  for (std::size_t t = 0; t < data.templates.size(); ++t) {
    for (const PatternGraph& pattern : data.templates[t].precursor_patterns) {
      f.patterns_of[t].push_back(static_cast<int>(f.pattern_owner.size()));
      f.pattern_owner.push_back(static_cast<int>(t));
      if (mpnn) {
        const MolecularGraph* one[] = {&pattern.graph};
        f.pattern_graphs.push_back(graph_batch(one));
      } else {
        pattern_fps.push_back(circular_fingerprint(pattern.graph, config.fingerprint_radius, config.fingerprint_bits));
      }
    }
  }
  if (!mpnn) {
    std::vector<const Fingerprint*> ptrs;
    for (const Fingerprint& fp : mol_fps) ptrs.push_back(&fp);
    f.molecules = fingerprint_rows(ptrs);
    ptrs.clear();
    for (const Fingerprint& fp : pattern_fps) ptrs.push_back(&fp);
    f.patterns = fingerprint_rows(ptrs);
  }
  return f;
}

EnergyModel::EnergyModel(const EnergyConfig& config, int molecule_width, int pattern_width, std::uint64_t seed)
    : config_(config) {
  if (config.tau <= 0.0) throw ShapeError("temperature must be positive");
  const int h = config.hidden;
  if (config.encoder == EncoderKind::kFingerprint) {
    molecule_mlp_ = Mlp(MlpConfig{{molecule_width, h, h}, config.dropout}, salted(seed, 1), "mol");
    template_mlp_ = Mlp(MlpConfig{{pattern_width, h, h}, config.dropout}, salted(seed, 2), "tmpl");
  } else {
    const MpnnConfig mc{kAtomFeatureSize, kBondFeatureSize, h, config.mpnn_depth, config.dropout};
    molecule_mpnn_ = Mpnn(mc, salted(seed, 1), "mol");
    template_mpnn_ = Mpnn(mc, salted(seed, 2), "tmpl");
  }
  head_ = Mlp(MlpConfig{{3 * h, h, 1}, config.dropout}, salted(seed, 3), "head");
}

ParameterList EnergyModel::parameters() {
  ParameterList out;
  auto append = [&](ParameterList p) { out.insert(out.end(), p.begin(), p.end()); };
  if (config_.encoder == EncoderKind::kFingerprint) {
    append(molecule_mlp_.parameters());
    append(template_mlp_.parameters());
  } else {
    append(molecule_mpnn_.parameters());
    append(template_mpnn_.parameters());
  }
  append(head_.parameters());
  return out;
}

Var EnergyModel::encode_molecules(Tape& tape, const NodeFeatures& nodes, std::span<const int> ids, bool training,
                                  std::uint64_t rng_seed) {
  if (config_.encoder == EncoderKind::kFingerprint) {
    return molecule_mlp_.forward(tape, tape.constant(select_rows(nodes.molecules, ids)), training, rng_seed);
  }
  std::vector<const GraphBatch*> parts;
  for (int m : ids) parts.push_back(&nodes.molecule_graphs.at(m));
  return molecule_mpnn_.encode(tape, merge_batches(parts), training, rng_seed);
}

Var EnergyModel::encode_templates(Tape& tape, const NodeFeatures& nodes, std::span<const int> ids, bool training,
                                  std::uint64_t rng_seed) {
  std::vector<int> rows, segment;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const std::vector<int>& own = nodes.patterns_of.at(ids[k]);
    if (own.empty()) throw ShapeError("template node without precursor patterns");
    for (int r : own) {
      rows.push_back(r);
      segment.push_back(static_cast<int>(k));
    }
  }
  Var per_pattern;
  if (config_.encoder == EncoderKind::kFingerprint) {
    per_pattern = template_mlp_.forward(tape, tape.constant(select_rows(nodes.patterns, rows)), training, rng_seed);
  } else {
    std::vector<const GraphBatch*> parts;
    for (int r : rows) parts.push_back(&nodes.pattern_graphs.at(r));
    per_pattern = template_mpnn_.encode(tape, merge_batches(parts), training, rng_seed);
  }
  return segment_mean(per_pattern, segment, static_cast<int>(ids.size()));
}

Var EnergyModel::energies(Tape& tape, const NodeFeatures& nodes, std::span<const EdgeRef> edges, bool training,
                          std::uint64_t rng_seed) {
  if (edges.empty()) throw ShapeError("no edges to score");
  std::vector<int> m_pos, t_pos;
  const std::vector<int> m_ids = distinct(edges, [](const EdgeRef& e) { return e.m; }, m_pos);
  const std::vector<int> t_ids = distinct(edges, [](const EdgeRef& e) { return e.t; }, t_pos);
  const Var hm = gather_rows(encode_molecules(tape, nodes, m_ids, training, salted(rng_seed, 1)), m_pos);
  const Var ht = gather_rows(encode_templates(tape, nodes, t_ids, training, salted(rng_seed, 2)), t_pos);
  const Var parts[] = {hm, ht, mul(hm, ht)};
  return head_.forward(tape, concat_cols(parts), training, salted(rng_seed, 3));
}

std::vector<double> EnergyModel::evaluate(const NodeFeatures& nodes, std::span<const EdgeRef> edges, int batch) {
  std::vector<double> out;
  out.reserve(edges.size());
  for (std::size_t start = 0; start < edges.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(batch), edges.size() - start);
    Tape tape;
    const Tensor& e = energies(tape, nodes, edges.subspan(start, len)).value();
    out.insert(out.end(), e.values.begin(), e.values.end());
  }
  return out;
}

Var ebm_loss(Var energies, std::span<const int> positives, std::span<const int> negatives, double tau,
             bool include_positive) {
  if (negatives.empty()) throw EmptyNegatives("subgraph sample has no negative edges");
  if (positives.empty()) throw ShapeError("subgraph sample has no positive edges");
  if (tau <= 0.0) throw ShapeError("temperature must be positive");
  if (!include_positive) {
    // the denominator is shared, so the mean over positives separates
    const Var pos = scale(mean_all(gather_rows(energies, positives)), 1.0 / tau);
    return add(pos, logsumexp_all(scale(gather_rows(energies, negatives), -1.0 / tau)));
  }
  std::vector<int> rows(negatives.begin(), negatives.end());
  rows.push_back(0);
  Var total;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    rows.back() = positives[i];
    const int p[] = {positives[i]};
    const Var term = add(scale(gather_rows(energies, p), 1.0 / tau),
                         logsumexp_all(scale(gather_rows(energies, rows), -1.0 / tau)));
    total = i == 0 ? term : add(total, term);
  }
  return scale(total, 1.0 / static_cast<double>(positives.size()));
}

TrainResult train_ebm(const BipartiteGraph& g, const NodeFeatures& nodes, std::span<const int> template_frequency,
                      const EnhanceConfig& config) {
  if (config.hops < 1 || config.negative_cutoff < 1 || config.batch_size < 1) {
    throw ShapeError("hops, negative cutoff and batch size must be positive");
  }
  TrainResult result;
  const int mol_width = nodes.molecules.cols, pattern_width = nodes.patterns.cols;
  result.model = EnergyModel(config.energy, mol_width, pattern_width, config.seed);
  const ParameterList params = result.model.parameters();
  AdamState adam = adam_init(params, AdamConfig{config.lr});

  const std::vector<EdgeRef> gt = g.gt_edges();
  std::vector<SubgraphSample> samples;
  samples.reserve(gt.size());
  for (const EdgeRef& e : gt) {
    samples.push_back(khop_subgraph(g, e, config.hops));
    truncate_negatives(samples.back(), config.negative_cutoff, g, template_frequency);
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0.0, pos_sum = 0.0, neg_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      if (config.max_steps > 0 && result.steps >= config.max_steps) break;
      std::vector<const SubgraphSample*> batch;
      for (std::size_t k = start; k < std::min(order.size(), start + config.batch_size); ++k) {
        const SubgraphSample& s = samples[order[k]];
        if (s.negatives.empty()) {
          ++log.skipped;
          continue;
        }
        batch.push_back(&s);
      }
      if (batch.empty()) continue;
      // score each distinct edge once per batch
      std::map<EdgeRef, int> row_of;
      std::vector<EdgeRef> edges;
      for (const SubgraphSample* s : batch) {
        for (const auto* list : {&s->positives, &s->negatives}) {
          for (const EdgeRef& e : *list) {
            if (row_of.emplace(e, static_cast<int>(edges.size())).second) edges.push_back(e);
          }
        }
      }
      const std::uint64_t step_seed = salted(config.seed, 1000 + static_cast<std::uint64_t>(result.steps));
      double batch_pos = 0.0, batch_neg = 0.0;
      const LossAndGrad lg = loss_and_grad(
          [&](Tape& tape) {
            const Var energy = result.model.energies(tape, nodes, edges, true, step_seed);
            Var total;
            batch_pos = batch_neg = 0.0;
            for (std::size_t k = 0; k < batch.size(); ++k) {
              std::vector<int> pos, neg;
              for (const EdgeRef& e : batch[k]->positives) pos.push_back(row_of.at(e));
              for (const EdgeRef& e : batch[k]->negatives) neg.push_back(row_of.at(e));
              for (int r : pos) batch_pos += energy.value().values[r] / static_cast<double>(pos.size());
              for (int r : neg) batch_neg += energy.value().values[r] / static_cast<double>(neg.size());
              const Var l = ebm_loss(energy, pos, neg, config.energy.tau, config.energy.include_positive);
              total = k == 0 ? l : add(total, l);
            }
            return scale(total, 1.0 / static_cast<double>(batch.size()));
          },
          params);
      adam_step(adam, params);
      ++result.steps;
      ++batches;
      loss_sum += lg.loss;
      pos_sum += batch_pos;
      neg_sum += batch_neg;
      log.samples += static_cast<int>(batch.size());
    }
    if (batches == 0) break;
    log.mean_loss = loss_sum / batches;
    log.mean_positive_energy = pos_sum / log.samples;
    log.mean_negative_energy = neg_sum / log.samples;
    result.log.push_back(log);
  }
  return result;
}

std::vector<EdgeRef> pick_top_n(std::vector<EdgeRef> candidates, const std::map<EdgeRef, double>& energy, int n,
                                bool highest_energy) {
  std::sort(candidates.begin(), candidates.end(), [&](const EdgeRef& a, const EdgeRef& b) {
    const double fa = energy.at(a), fb = energy.at(b);
    if (fa != fb) return highest_energy ? fa > fb : fa < fb;
    return a < b;
  });
  if (candidates.size() > static_cast<std::size_t>(std::max(n, 0))) candidates.resize(static_cast<std::size_t>(std::max(n, 0)));
  return candidates;
}

StageCResult denoise_top_n(const BipartiteGraph& filtered, EnergyModel& model, const NodeFeatures& nodes, int n,
                           int hops, bool highest_energy) {
  StageCResult out;
  const std::vector<EdgeRef> gt = filtered.gt_edges();
  std::set<EdgeRef> enhanced(gt.begin(), gt.end());
  if (n <= 0) {
    out.enhanced.assign(enhanced.begin(), enhanced.end());
    return out;
  }
  std::vector<std::vector<EdgeRef>> candidates;
  std::set<EdgeRef> all;
  for (const EdgeRef& e : gt) {
    candidates.push_back(khop_subgraph(filtered, e, hops).negatives);
    all.insert(candidates.back().begin(), candidates.back().end());
  }
  const std::vector<EdgeRef> scored(all.begin(), all.end());
  const std::vector<double> energy = model.evaluate(nodes, scored);
  for (std::size_t i = 0; i < scored.size(); ++i) out.energy[scored[i]] = energy[i];

  std::set<EdgeRef> selected;
  for (std::vector<EdgeRef>& c : candidates) {
    for (const EdgeRef& e : pick_top_n(std::move(c), out.energy, n, highest_energy)) selected.insert(e);
  }
  for (const EdgeRef& e : selected) {
    if (enhanced.insert(e).second) out.selected.push_back(e);
  }
  out.enhanced.assign(enhanced.begin(), enhanced.end());
  return out;
}

std::vector<Reaction> materialize_enhanced(const EnhanceData& data, const StageAResult& stage_a,
                                           std::span<const EdgeRef> selected) {
  std::vector<Reaction> out;
  for (const EdgeRef& e : selected) {
    const auto it = stage_a.first_outcome.find(e);
    if (it == stage_a.first_outcome.end()) continue;
    Reaction r;
    r.id = "enh_" + std::to_string(e.m) + "_" + data.templates[e.t].template_id;
    r.precursors = split_components(parse_smiles(it->second));
    r.product = data.products[e.m];
    r.provenance = Provenance::kEnhanced;
    r.template_id = data.templates[e.t].template_id;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace retro
