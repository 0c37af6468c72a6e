#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retro/numerics.hpp"
#include "retro/templates.hpp"

namespace retro {

// ---- environments ---------------------------------------------------------------------

enum class BinCriterion { kSize, kScaffold };

std::string_view bin_criterion_name(BinCriterion c);
BinCriterion bin_criterion_from_name(std::string_view name);  // FormatError

// Quantile bins over ascending value, ties by id: item at rank i goes to bin
// floor(i * E / n). Throws TooFewSamples when E > n, ShapeError when E < 2.
std::vector<int> quantile_bins(std::span<const double> values, std::span<const std::string> ids, int environments);

// Reaction id -> environment. Size bins use the product heavy-atom count;
// scaffold bins deal scaffold groups (largest first, then key) round-robin.
// Throws TooFewSamples when fewer than E reactions or scaffold groups.
std::map<std::string, int> bin_environments(std::span<const Reaction> train, BinCriterion criterion, int environments);

// ---- IRMv1 ------------------------------------------------------------------------------

// d/dw at w = 1 of the mean cross-entropy of softmax(w * logits), 1 x 1:
// mean_i (softmax(z_i) - onehot(y_i)) . z_i
Var unit_scale_risk_gradient(Var logits, std::span<const int> labels);
// Same quantity on plain values.
double unit_scale_risk_gradient_value(const Tensor& logits, std::span<const int> labels);

// Sum of squared per-environment gradients.
Var irm_penalty(std::span<const Var> gradients);

// ---- classifier ----------------------------------------------------------------------------

enum class TrainMode { kErm, kIrm };
enum class PenaltyTarget { kTemplateHead, kCenterHead };

std::string_view train_mode_name(TrainMode m);
TrainMode train_mode_from_name(std::string_view name);  // FormatError

struct IrmConfig {
  double lambda = 1.0;
  int environments = 4;
  BinCriterion criterion = BinCriterion::kSize;
  int warmup_epochs = 5;
  PenaltyTarget target = PenaltyTarget::kTemplateHead;
};

struct ClassifierConfig {
  int fingerprint_bits = 2048;
  int fingerprint_radius = 2;
  std::vector<int> hidden = {256};  // empty: linear scorer
  double dropout = 0.1;
  int epochs = 30;
  int batch_size = 64;
  double lr = 0.001;
  bool center_head = false;  // auxiliary radius-0 centre classifier
  std::uint64_t seed = 0;
};

// Training inputs as rows. A label of -1 marks a sample without a class.
struct ClassifierData {
  Tensor features;
  std::vector<int> labels;
  std::vector<int> environments;   // empty for ERM
  std::vector<int> center_labels;  // empty without a centre head
};

class TemplateClassifier {
 public:
  TemplateClassifier() = default;
  TemplateClassifier(const ClassifierConfig& config, int input_width, std::vector<std::string> vocabulary,
                     std::vector<std::string> center_vocabulary = {});

  Var logits(Tape& tape, Var x, bool training = false, std::uint64_t rng_seed = 0);
  // Centre-head logits; ShapeError without a centre head.
  Var center_logits(Tape& tape, Var x, bool training = false, std::uint64_t rng_seed = 0);
  Tensor scores(const Tensor& features);  // inference, one row per input

  ParameterList parameters();
  const ClassifierConfig& config() const { return config_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<std::string>& center_vocabulary() const { return center_vocabulary_; }
  int input_width() const { return input_width_; }

 private:
  Var embed(Tape& tape, Var x, bool training, std::uint64_t rng_seed);

  ClassifierConfig config_;
  int input_width_ = 0;
  std::vector<std::string> vocabulary_, center_vocabulary_;
  Mlp phi_, head_, center_head_;
};

struct ClassifierEpoch {
  int epoch = 0;
  double loss = 0.0;
  double risk = 0.0;
  double penalty = 0.0;  // logged even while lambda is inactive
  double lambda = 0.0;   // effective weight this epoch
  std::vector<double> environment_risks;
};

struct TrainedClassifier {
  TemplateClassifier model;
  std::vector<ClassifierEpoch> log;
};

struct BatchObjective {
  Var loss;
  double risk = 0.0;     // pooled cross-entropy of the template head
  double penalty = 0.0;  // IRMv1 penalty, computed even when lambda is 0
  Tensor logits;
};

// Training loss for one batch: pooled cross-entropy, the centre-head
// cross-entropy when present, plus lambda * penalty over the environments
// (empty: no penalty). Rows with label -1 are skipped by the penalty.
BatchObjective classifier_objective(Tape& tape, TemplateClassifier& model, const Tensor& x, std::span<const int> labels,
                                   std::span<const int> environments, std::span<const int> center_labels, double lambda,
                                   PenaltyTarget target, bool training = false, std::uint64_t rng_seed = 0);

// Minimises pooled cross-entropy, plus lambda * penalty after warmup in IRM
// mode. With lambda = 0 the IRM run follows the ERM computation exactly.
// Throws NonFinite.
TrainedClassifier train_classifier(TemplateClassifier model, const ClassifierData& data, TrainMode mode,
                                   const IrmConfig& irm);

void save_classifier(const std::filesystem::path& path, TemplateClassifier& model, const std::string& note = "");
TemplateClassifier load_classifier(const std::filesystem::path& path);  // IoError, FormatError

// ---- reactions to rows ----------------------------------------------------------------------

Tensor product_features(std::span<const Reaction> reactions, int bits, int radius);

// Vocabulary: templates assigned to the given reactions, sorted by id.
std::vector<std::string> template_vocabulary(std::span<const Reaction> reactions,
                                             const std::map<std::string, std::string>& template_of);

// Vocabulary index of each reaction's template (an enhanced record's own
// template id wins), -1 when absent.
std::vector<int> label_indices(std::span<const Reaction> reactions, const std::map<std::string, std::string>& template_of,
                               const std::vector<std::string>& vocabulary);

ClassifierData classifier_data(std::span<const Reaction> reactions, const std::map<std::string, std::string>& template_of,
                               const std::vector<std::string>& vocabulary, const ClassifierConfig& config);

// ---- ranking and evaluation -------------------------------------------------------------------

struct RankedTemplate {
  std::string template_id;
  double score = 0.0;
};

// Descending score, ties by template id.
std::vector<RankedTemplate> rank_scores(std::span<const double> scores, std::span<const std::string> vocabulary);
std::vector<RankedTemplate> rank_templates(TemplateClassifier& model, const MolecularGraph& product);

inline const std::vector<int> kTopK = {1, 3, 5, 10};

// Fraction of ranks (1-based, nullopt for no match) that are <= k.
std::map<int, double> topk_from_ranks(std::span<const std::optional<int>> ranks, std::span<const int> ks = kTopK);

// Walks the ranking, applies each template and collects distinct precursor
// sets; returns the 1-based position of the ground-truth set within the
// first `limit` sets.
std::optional<int> match_rank(std::span<const RankedTemplate> ranking, const std::map<std::string, const Template*>& table,
                              const MolecularGraph& product, const std::string& truth, int limit);

struct EvalResult {
  std::map<int, double> topk;
  std::vector<std::optional<int>> ranks;
  std::vector<std::string> ids;
};

EvalResult evaluate_topk(TemplateClassifier& model, std::span<const Template> table, std::span<const Reaction> partition,
                         std::span<const int> ks = kTopK);

}  // namespace retro
