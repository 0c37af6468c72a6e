#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "retro/encoders.hpp"
#include "retro/error.hpp"
#include "retro/learn.hpp"

namespace retro {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 7);
  z = (z ^ (z >> 31)) * 0xd6e8feb86659fd93ULL;
  return z ^ (z >> 32);
}

Tensor select_rows(const Tensor& src, std::span<const int> rows) {
  Tensor out(static_cast<int>(rows.size()), src.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(&src.values[static_cast<std::size_t>(rows[r]) * src.cols], src.cols, &out.values[r * src.cols]);
  }
  return out;
}

// Mean cross-entropy over all rows, 1 x 1.
Var cross_entropy(Var logits, std::span<const int> labels) {
  return scale(sum_all(pick(log_softmax_rows(logits), labels)), -1.0 / static_cast<double>(labels.size()));
}

double row_cross_entropy(const Tensor& z, int row, int label) {
  double top = z.at(row, 0);
  for (int c = 1; c < z.cols; ++c) top = std::max(top, z.at(row, c));
  double sum = 0.0;
  for (int c = 0; c < z.cols; ++c) sum += std::exp(z.at(row, c) - top);
  return top + std::log(sum) - z.at(row, label);
}

}  // namespace

// ---- environments ---------------------------------------------------------------------

std::string_view bin_criterion_name(BinCriterion c) { return c == BinCriterion::kSize ? "size" : "scaffold"; }

BinCriterion bin_criterion_from_name(std::string_view name) {
  if (name == "size") return BinCriterion::kSize;
  if (name == "scaffold") return BinCriterion::kScaffold;
  throw FormatError("unknown binning criterion '" + std::string(name) + "'");
}

std::vector<int> quantile_bins(std::span<const double> values, std::span<const std::string> ids, int environments) {
  if (environments < 2) throw ShapeError("need at least two environments");
  if (values.size() != ids.size()) throw ShapeError("values and ids differ in length");
  const std::size_t n = values.size();
  if (static_cast<std::size_t>(environments) > n) {
    throw TooFewSamples(std::to_string(environments) + " environments requested for " + std::to_string(n) + " samples");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return ids[a] < ids[b];
  });
  std::vector<int> bin(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    bin[order[rank]] = static_cast<int>(rank * static_cast<std::size_t>(environments) / n);
  }
  return bin;
}

std::map<std::string, int> bin_environments(std::span<const Reaction> train, BinCriterion criterion, int environments) {
  if (environments < 2) throw ShapeError("need at least two environments");
  if (static_cast<std::size_t>(environments) > train.size()) {
    throw TooFewSamples(std::to_string(environments) + " environments requested for " + std::to_string(train.size()) +
                        " training reactions");
  }
  std::map<std::string, int> out;
  if (criterion == BinCriterion::kSize) {
    std::vector<double> sizes;
    std::vector<std::string> ids;
    for (const Reaction& r : train) {
      sizes.push_back(heavy_atom_count(r.product));
      ids.push_back(r.id);
    }
    const std::vector<int> bin = quantile_bins(sizes, ids, environments);
    for (std::size_t i = 0; i < train.size(); ++i) out[train[i].id] = bin[i];
    return out;
  }
  std::map<std::string, std::vector<std::string>> groups;
  for (const Reaction& r : train) groups[molecule_key(murcko_scaffold(r.product))].push_back(r.id);
  if (groups.size() < static_cast<std::size_t>(environments)) {
    throw TooFewSamples(std::to_string(groups.size()) + " scaffold groups for " + std::to_string(environments) +
                        " environments");
  }
  std::vector<const std::pair<const std::string, std::vector<std::string>>*> order;
  for (const auto& g : groups) order.push_back(&g);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->second.size() > b->second.size(); });
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (const std::string& id : order[k]->second) out[id] = static_cast<int>(k % static_cast<std::size_t>(environments));
  }
  return out;
}

// ---- IRMv1 ------------------------------------------------------------------------------

Var unit_scale_risk_gradient(Var logits, std::span<const int> labels) {
  if (labels.empty() || static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ShapeError("risk gradient needs one label per logit row");
  }
  const Var expected = sum_all(mul(softmax_rows(logits), logits));
  const Var observed = sum_all(pick(logits, labels));
  return scale(sub(expected, observed), 1.0 / static_cast<double>(labels.size()));
}

double unit_scale_risk_gradient_value(const Tensor& z, std::span<const int> labels) {
  if (labels.empty() || static_cast<std::size_t>(z.rows) != labels.size()) {
    throw ShapeError("risk gradient needs one label per logit row");
  }
  double total = 0.0;
  for (int r = 0; r < z.rows; ++r) {
    double top = z.at(r, 0);
    for (int c = 1; c < z.cols; ++c) top = std::max(top, z.at(r, c));
    double norm = 0.0, weighted = 0.0;
    for (int c = 0; c < z.cols; ++c) {
      const double e = std::exp(z.at(r, c) - top);
      norm += e;
      weighted += e * z.at(r, c);
    }
    total += weighted / norm - z.at(r, labels[r]);
  }
  return total / static_cast<double>(z.rows);
}

Var irm_penalty(std::span<const Var> gradients) {
  if (gradients.empty()) throw ShapeError("penalty needs at least one environment");
  Var total = square(gradients[0]);
  for (std::size_t e = 1; e < gradients.size(); ++e) total = add(total, square(gradients[e]));
  if (!std::isfinite(total.value().item())) throw NonFinite("IRM penalty is not finite");
  return total;
}

// ---- classifier ----------------------------------------------------------------------------

std::string_view train_mode_name(TrainMode m) { return m == TrainMode::kErm ? "erm" : "irm"; }

TrainMode train_mode_from_name(std::string_view name) {
  if (name == "erm") return TrainMode::kErm;
  if (name == "irm") return TrainMode::kIrm;
  throw FormatError("unknown training mode '" + std::string(name) + "'");
}

TemplateClassifier::TemplateClassifier(const ClassifierConfig& config, int input_width,
                                       std::vector<std::string> vocabulary, std::vector<std::string> center_vocabulary)
    : config_(config),
      input_width_(input_width),
      vocabulary_(std::move(vocabulary)),
      center_vocabulary_(std::move(center_vocabulary)) {
  if (vocabulary_.empty()) throw ShapeError("empty template vocabulary");
  if (config_.center_head && center_vocabulary_.empty()) throw ShapeError("centre head without centre classes");
  int width = input_width;
  if (!config_.hidden.empty()) {
    std::vector<int> widths = {input_width};
    widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
    phi_ = Mlp(MlpConfig{widths, config_.dropout}, mix(config_.seed, 1), "phi");
    width = config_.hidden.back();
  }
  head_ = Mlp(MlpConfig{{width, static_cast<int>(vocabulary_.size())}, 0.0}, mix(config_.seed, 2), "head");
  if (config_.center_head) {
    center_head_ =
        Mlp(MlpConfig{{width, static_cast<int>(center_vocabulary_.size())}, 0.0}, mix(config_.seed, 3), "center");
  }
}

Var TemplateClassifier::embed(Tape& tape, Var x, bool training, std::uint64_t rng_seed) {
  if (config_.hidden.empty()) return x;
  Var h = relu(phi_.forward(tape, x, training, rng_seed));
  if (training && config_.dropout > 0.0) h = dropout(h, config_.dropout, mix(rng_seed, 99));
  return h;
}

Var TemplateClassifier::logits(Tape& tape, Var x, bool training, std::uint64_t rng_seed) {
  return head_.forward(tape, embed(tape, x, training, rng_seed));
}

Var TemplateClassifier::center_logits(Tape& tape, Var x, bool training, std::uint64_t rng_seed) {
  if (!config_.center_head) throw ShapeError("classifier has no centre head");
  return center_head_.forward(tape, embed(tape, x, training, rng_seed));
}

Tensor TemplateClassifier::scores(const Tensor& features) {
  Tape tape;
  return logits(tape, tape.constant(features)).value();
}

ParameterList TemplateClassifier::parameters() {
  ParameterList out;
  if (!config_.hidden.empty()) out = phi_.parameters();
  for (Parameter* p : head_.parameters()) out.push_back(p);
  if (config_.center_head) {
    for (Parameter* p : center_head_.parameters()) out.push_back(p);
  }
  return out;
}

BatchObjective classifier_objective(Tape& tape, TemplateClassifier& model, const Tensor& x, std::span<const int> labels,
                                   std::span<const int> environments, std::span<const int> center_labels, double lambda,
                                   PenaltyTarget target, bool training, std::uint64_t rng_seed) {
  const bool use_env = !environments.empty();
  const bool center_head = model.config().center_head;
  const bool penalize_center = target == PenaltyTarget::kCenterHead;
  BatchObjective out;
  const Var input = tape.constant(x);
  const Var z = model.logits(tape, input, training, rng_seed);
  out.logits = z.value();
  Var loss = cross_entropy(z, labels);
  out.risk = loss.value().item();
  Var cz = z;
  if (center_head) {
    std::vector<int> pos, cl;
    for (std::size_t k = 0; k < center_labels.size(); ++k) {
      if (center_labels[k] >= 0) {
        pos.push_back(static_cast<int>(k));
        cl.push_back(center_labels[k]);
      }
    }
    cz = model.center_logits(tape, input, training, rng_seed);
    if (!pos.empty()) loss = add(loss, cross_entropy(gather_rows(cz, pos), cl));
  }
  if (!use_env) {
    out.loss = loss;
    return out;
  }
  // per-environment row positions, ascending environment id
  std::map<int, std::vector<int>> env_pos;
  for (std::size_t k = 0; k < environments.size(); ++k) env_pos[environments[k]].push_back(static_cast<int>(k));
  std::vector<Var> grads;
  std::vector<double> values;
  const Var tz = penalize_center ? cz : z;
  for (const auto& [e, pos] : env_pos) {
    std::vector<int> kept, kept_labels;
    for (int k : pos) {
      const int y = penalize_center ? center_labels[k] : labels[k];
      if (y < 0) continue;
      kept.push_back(k);
      kept_labels.push_back(y);
    }
    if (kept.empty()) continue;
    if (lambda > 0.0) {
      grads.push_back(unit_scale_risk_gradient(gather_rows(tz, kept), kept_labels));
    } else {
      values.push_back(unit_scale_risk_gradient_value(select_rows(tz.value(), kept), kept_labels));
    }
  }
  if (lambda > 0.0 && !grads.empty()) {
    const Var penalty = irm_penalty(grads);
    out.penalty = penalty.value().item();
    out.loss = add(loss, scale(penalty, lambda));
    return out;
  }
  // inactive penalty: logged from values, kept off the tape
  for (double g : values) out.penalty += g * g;
  out.loss = loss;
  return out;
}

TrainedClassifier train_classifier(TemplateClassifier model, const ClassifierData& data, TrainMode mode,
                                   const IrmConfig& irm) {
  const ClassifierConfig& cfg = model.config();
  const std::size_t n = data.labels.size();
  if (static_cast<std::size_t>(data.features.rows) != n) throw ShapeError("one label per feature row expected");
  if (data.features.cols != model.input_width()) throw ShapeError("feature width does not match the classifier");
  const bool use_env = !data.environments.empty();
  if (use_env && data.environments.size() != n) throw ShapeError("one environment per row expected");
  if (mode == TrainMode::kIrm && !use_env) throw ShapeError("IRM needs environment labels");
  if (irm.lambda < 0.0) throw ShapeError("lambda must be non-negative");
  if (cfg.center_head && data.center_labels.size() != n) throw ShapeError("one centre label per row expected");
  if (cfg.batch_size < 1) throw ShapeError("batch size must be positive");

  std::vector<int> usable;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.labels[i] >= 0) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty()) throw TooFewSamples("no labelled training rows");
  int env_count = 0;
  if (use_env) env_count = *std::max_element(data.environments.begin(), data.environments.end()) + 1;
  if (irm.target == PenaltyTarget::kCenterHead && !cfg.center_head) throw ShapeError("centre-head penalty needs a centre head");

  TrainedClassifier out{std::move(model), {}};
  TemplateClassifier& clf = out.model;
  const ParameterList params = clf.parameters();
  AdamState adam = adam_init(params, AdamConfig{cfg.lr});
  std::mt19937_64 rng(cfg.seed);
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(usable.begin(), usable.end(), rng);
    const double lambda = mode == TrainMode::kIrm && epoch >= irm.warmup_epochs ? irm.lambda : 0.0;
    ClassifierEpoch log;
    log.epoch = epoch;
    log.lambda = lambda;
    std::vector<double> env_loss(static_cast<std::size_t>(env_count), 0.0);
    std::vector<int> env_rows(static_cast<std::size_t>(env_count), 0);
    int batches = 0;
    for (std::size_t start = 0; start < usable.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(usable.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<int> rows(usable.begin() + static_cast<std::ptrdiff_t>(start),
                                  usable.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels, centers;
      for (int r : rows) {
        labels.push_back(data.labels[r]);
        if (cfg.center_head) centers.push_back(data.center_labels[r]);
      }
      const Tensor x = select_rows(data.features, rows);
      std::vector<int> envs;
      if (use_env) {
        for (int r : rows) envs.push_back(data.environments[r]);
      }
      const std::uint64_t step_seed = mix(cfg.seed, 1000 + static_cast<std::uint64_t>(step));
      BatchObjective obj;
      const LossAndGrad lg = loss_and_grad(
          [&](Tape& tape) {
            obj = classifier_objective(tape, clf, x, labels, envs, centers, lambda, irm.target, true, step_seed);
            return obj.loss;
          },
          params);
      const double risk_value = obj.risk, penalty_value = obj.penalty;
      const Tensor& z_value = obj.logits;
      adam_step(adam, params);
      ++step;
      ++batches;
      log.loss += lg.loss;
      log.risk += risk_value;
      log.penalty += penalty_value;
      if (use_env) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const int e = data.environments[rows[k]];
          env_loss[e] += row_cross_entropy(z_value, static_cast<int>(k), labels[k]);
          ++env_rows[e];
        }
      }
    }
    log.loss /= batches;
    log.risk /= batches;
    log.penalty /= batches;
    for (int e = 0; e < env_count; ++e) log.environment_risks.push_back(env_rows[e] ? env_loss[e] / env_rows[e] : 0.0);
    out.log.push_back(std::move(log));
  }
  return out;
}

void save_classifier(const std::filesystem::path& path, TemplateClassifier& model, const std::string& note) {
  const ClassifierConfig& c = model.config();
  const json header = {{"kind", "classifier"},
                       {"note", note},
                       {"input_width", model.input_width()},
                       {"fingerprint_bits", c.fingerprint_bits},
                       {"fingerprint_radius", c.fingerprint_radius},
                       {"hidden", c.hidden},
                       {"dropout", c.dropout},
                       {"center_head", c.center_head},
                       {"seed", c.seed},
                       {"vocabulary", model.vocabulary()},
                       {"center_vocabulary", model.center_vocabulary()}};
  write_checkpoint(path, model.parameters(), header.dump());
}

TemplateClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string first = text.substr(0, text.find('\n'));
  const std::string prefix = "retro-checkpoint 1 ";
  if (first.rfind(prefix, 0) != 0) throw FormatError("not a classifier checkpoint: " + path.string());
  json h;
  try {
    h = json::parse(first.substr(prefix.size()));
    if (h.at("kind") != "classifier") throw FormatError("checkpoint is not a classifier");
    ClassifierConfig c;
    c.fingerprint_bits = h.at("fingerprint_bits");
    c.fingerprint_radius = h.at("fingerprint_radius");
    c.hidden = h.at("hidden").get<std::vector<int>>();
    c.dropout = h.at("dropout");
    c.center_head = h.at("center_head");
    c.seed = h.at("seed");
    TemplateClassifier model(c, h.at("input_width"), h.at("vocabulary").get<std::vector<std::string>>(),
                             h.at("center_vocabulary").get<std::vector<std::string>>());
    load_checkpoint_text(text, model.parameters());
    return model;
  } catch (const json::exception& e) {
    throw FormatError("bad classifier header in " + path.string() + ": " + e.what());
  }
}

// ---- reactions to rows ----------------------------------------------------------------------

Tensor product_features(std::span<const Reaction> reactions, int bits, int radius) {
  std::vector<Fingerprint> fps;
  fps.reserve(reactions.size());
  for (const Reaction& r : reactions) fps.push_back(circular_fingerprint(r.product, radius, bits));
  std::vector<const Fingerprint*> ptrs;
  for (const Fingerprint& f : fps) ptrs.push_back(&f);
  if (ptrs.empty()) return Tensor(0, bits);
  return fingerprint_rows(ptrs);
}

std::vector<std::string> template_vocabulary(std::span<const Reaction> reactions,
                                             const std::map<std::string, std::string>& template_of) {
  std::set<std::string> ids;
  for (const Reaction& r : reactions) {
    if (!r.template_id.empty()) {
      ids.insert(r.template_id);
      continue;
    }
    const auto it = template_of.find(r.id);
    if (it != template_of.end()) ids.insert(it->second);
  }
  return {ids.begin(), ids.end()};
}

std::vector<int> label_indices(std::span<const Reaction> reactions, const std::map<std::string, std::string>& template_of,
                               const std::vector<std::string>& vocabulary) {
  std::vector<int> labels;
  for (const Reaction& r : reactions) {
    std::string id = r.template_id;
    if (id.empty()) {
      const auto it = template_of.find(r.id);
      if (it != template_of.end()) id = it->second;
    }
    const auto pos = std::lower_bound(vocabulary.begin(), vocabulary.end(), id);
    labels.push_back(!id.empty() && pos != vocabulary.end() && *pos == id ? static_cast<int>(pos - vocabulary.begin())
                                                                          : -1);
  }
  return labels;
}

ClassifierData classifier_data(std::span<const Reaction> reactions, const std::map<std::string, std::string>& template_of,
                               const std::vector<std::string>& vocabulary, const ClassifierConfig& config) {
  ClassifierData d;
  d.features = product_features(reactions, config.fingerprint_bits, config.fingerprint_radius);
  d.labels = label_indices(reactions, template_of, vocabulary);
  return d;
}

// ---- ranking and evaluation -------------------------------------------------------------------

std::vector<RankedTemplate> rank_scores(std::span<const double> scores, std::span<const std::string> vocabulary) {
  if (scores.size() != vocabulary.size()) throw ShapeError("one score per template expected");
  std::vector<RankedTemplate> out;
  out.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({vocabulary[i], scores[i]});
  std::sort(out.begin(), out.end(), [](const RankedTemplate& a, const RankedTemplate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.template_id < b.template_id;
  });
  return out;
}

std::vector<RankedTemplate> rank_templates(TemplateClassifier& model, const MolecularGraph& product) {
  const Fingerprint fp = circular_fingerprint(product, model.config().fingerprint_radius, model.config().fingerprint_bits);
  const Fingerprint* one[] = {&fp};
  const Tensor s = model.scores(fingerprint_rows(one));
  return rank_scores(s.values, model.vocabulary());
}

std::map<int, double> topk_from_ranks(std::span<const std::optional<int>> ranks, std::span<const int> ks) {
  std::map<int, double> out;
  for (int k : ks) {
    if (ranks.empty()) {
      out[k] = 0.0;
      continue;
    }
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](const std::optional<int>& r) { return r && *r <= k; });
    out[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
  }
  return out;
}

std::optional<int> match_rank(std::span<const RankedTemplate> ranking, const std::map<std::string, const Template*>& table,
                              const MolecularGraph& product, const std::string& truth, int limit) {
  std::set<std::string> seen;
  for (const RankedTemplate& r : ranking) {
    const auto it = table.find(r.template_id);
    if (it == table.end() || !template_matches(*it->second, product)) continue;
    for (const std::string& outcome : apply_template(*it->second, product)) {
      if (!seen.insert(outcome).second) continue;
      if (outcome == truth) return static_cast<int>(seen.size());
      if (static_cast<int>(seen.size()) >= limit) return std::nullopt;
    }
  }
  return std::nullopt;
}

EvalResult evaluate_topk(TemplateClassifier& model, std::span<const Template> table, std::span<const Reaction> partition,
                         std::span<const int> ks) {
  EvalResult out;
  std::map<std::string, const Template*> lookup;
  for (const Template& t : table) lookup[t.template_id] = &t;
  const int limit = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
  if (!partition.empty()) {
    const Tensor scores = model.scores(
        product_features(partition, model.config().fingerprint_bits, model.config().fingerprint_radius));
    for (std::size_t i = 0; i < partition.size(); ++i) {
      const std::span<const double> row(&scores.values[i * static_cast<std::size_t>(scores.cols)],
                                        static_cast<std::size_t>(scores.cols));
      MolecularGraph product = partition[i].product;
      clear_maps(product);
      out.ranks.push_back(
          match_rank(rank_scores(row, model.vocabulary()), lookup, product, precursor_set_key(partition[i]), limit));
      out.ids.push_back(partition[i].id);
    }
  }
  out.topk = topk_from_ranks(out.ranks, ks);
  return out;
}

}  // namespace retro
