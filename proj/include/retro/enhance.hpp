#pragma once

#include <compare>
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

enum class EdgeLabel { kGt, kCandidate, kEnhanced };

std::string_view edge_label_name(EdgeLabel label);

struct EdgeRef {
  int m = 0;  // molecule node
  int t = 0;  // template node

  auto operator<=>(const EdgeRef&) const = default;
};

// Molecule (product) nodes on one side, template nodes on the other.
class BipartiteGraph {
 public:
  int add_molecule(std::string id);  // returns the existing index for a known id
  int add_template(std::string id);
  // A gt label wins over candidate when the pair already exists.
  void add_edge(EdgeRef e, EdgeLabel label);

  std::size_t molecule_count() const { return molecule_ids_.size(); }
  std::size_t template_count() const { return template_ids_.size(); }
  std::size_t edge_count() const { return labels_.size(); }
  const std::string& molecule_id(int m) const { return molecule_ids_[m]; }
  const std::string& template_id(int t) const { return template_ids_[t]; }
  std::optional<int> find_molecule(const std::string& id) const;
  std::optional<int> find_template(const std::string& id) const;

  bool has_edge(EdgeRef e) const { return labels_.count(e) > 0; }
  std::optional<EdgeLabel> label(EdgeRef e) const;
  const std::vector<int>& templates_of(int m) const { return templates_of_[m]; }  // ascending
  const std::vector<int>& molecules_of(int t) const { return molecules_of_[t]; }
  std::vector<EdgeRef> edges() const;  // ascending (m, t)
  std::vector<EdgeRef> gt_edges() const;

  // Same nodes, no edges.
  BipartiteGraph empty_copy() const;

 private:
  std::vector<std::string> molecule_ids_, template_ids_;
  std::map<std::string, int> molecule_index_, template_index_;
  std::vector<std::vector<int>> templates_of_, molecules_of_;
  std::map<EdgeRef, EdgeLabel> labels_;
};

// Graph plus the chemistry behind each node.
struct EnhanceData {
  BipartiteGraph graph;                   // complete bipartite, gt labels on observed pairs
  std::vector<MolecularGraph> products;   // per molecule node
  std::vector<Template> templates;        // per template node
  std::vector<int> template_frequency;    // per template node, from the assignment table
};

// Molecule nodes are distinct canonical products in corpus order; template
// nodes follow the assignment table. Throws FormatError for radius 0 tables.
EnhanceData build_bipartite_graph(std::span<const Reaction> corpus, const TemplateAssignment& assignment);

struct StageAResult {
  BipartiteGraph filtered;                       // G'_enh
  std::vector<EdgeRef> failed;                   // E_fail
  std::vector<EdgeRef> gt_failures;              // gt edges kept although the template does not apply
  std::map<EdgeRef, std::string> first_outcome;  // canonical precursor set of each applicable edge
};

StageAResult stage_a_filter(const EnhanceData& data, const ApplyOptions& options = {});

struct SubgraphSample {
  EdgeRef seed;
  int hops = 1;
  std::vector<int> molecules;  // M_rim, ascending
  std::vector<int> templates;  // T_rim, ascending
  std::vector<EdgeRef> positives;
  std::vector<EdgeRef> negatives;
};

// Alternating set replacement: each round M_rim <- N(T_rim), T_rim <- N(M_rim)
// from the previous sets; then the induced subgraph. Throws MissingEdge.
SubgraphSample khop_subgraph(const BipartiteGraph& g, EdgeRef seed, int hops);

// Keeps at most `cutoff` negatives: those on the seed's molecule first, then
// by template frequency (descending) and template id.
void truncate_negatives(SubgraphSample& s, int cutoff, const BipartiteGraph& g,
                        std::span<const int> template_frequency);

// ---- energy model ----------------------------------------------------------------------

enum class EncoderKind { kFingerprint, kMpnn };

struct EnergyConfig {
  EncoderKind encoder = EncoderKind::kFingerprint;
  int fingerprint_bits = 2048;
  int fingerprint_radius = 2;
  int hidden = 256;
  double dropout = 0.1;
  int mpnn_depth = 10;
  double tau = 1.0;
  bool include_positive = false;  // add the positive to the loss denominator
};

// Encoder inputs. Fingerprint encoders read the row tensors, MPNN encoders the
// per-node graph batches.
struct NodeFeatures {
  Tensor molecules;                 // one row per molecule node
  Tensor patterns;                  // one row per precursor-side pattern
  std::vector<int> pattern_owner;   // template node of each pattern row
  std::vector<std::vector<int>> patterns_of;  // template node -> pattern rows
  std::vector<GraphBatch> molecule_graphs;
  std::vector<GraphBatch> pattern_graphs;
};

NodeFeatures node_features(const EnhanceData& data, const EnergyConfig& config);

class EnergyModel {
 public:
  EnergyModel() = default;
  // Input widths are ignored by the MPNN encoder.
  EnergyModel(const EnergyConfig& config, int molecule_width, int pattern_width, std::uint64_t seed);

  // F(m, t) for each edge, n x 1. Template embeddings average the pattern
  // embeddings, so pattern order does not matter.
  Var energies(Tape& tape, const NodeFeatures& nodes, std::span<const EdgeRef> edges, bool training = false,
               std::uint64_t rng_seed = 0);
  std::vector<double> evaluate(const NodeFeatures& nodes, std::span<const EdgeRef> edges, int batch = 512);

  ParameterList parameters();
  const EnergyConfig& config() const { return config_; }

 private:
  Var encode_molecules(Tape& tape, const NodeFeatures& nodes, std::span<const int> ids, bool training,
                       std::uint64_t rng_seed);
  Var encode_templates(Tape& tape, const NodeFeatures& nodes, std::span<const int> ids, bool training,
                       std::uint64_t rng_seed);

  EnergyConfig config_;
  Mlp molecule_mlp_, template_mlp_;
  Mpnn molecule_mpnn_, template_mpnn_;
  Mlp head_;
};

// L = -(1/|E+|) sum_{e+} log( exp(-F(e+)/tau) / sum_{e- in E-} exp(-F(e-)/tau) ),
// rows of `energies` selected by index. include_positive adds F(e+) to its
// own denominator. Throws EmptyNegatives, ShapeError for no positives.
Var ebm_loss(Var energies, std::span<const int> positives, std::span<const int> negatives, double tau,
             bool include_positive = false);

// ---- training and Stage C ----------------------------------------------------------------

struct EnhanceConfig {
  int hops = 1;
  int negative_cutoff = 100;
  int top_n = 5;
  int epochs = 10;
  int batch_size = 16;
  double lr = 0.001;
  int max_steps = 0;  // 0 = no cap
  bool highest_energy = false;  // Stage C literal reading: pick the highest F
  std::uint64_t seed = 0;
  EnergyConfig energy;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_positive_energy = 0.0;
  double mean_negative_energy = 0.0;
  int samples = 0;
  int skipped = 0;  // gt edges whose sample had no negatives
};

struct TrainResult {
  EnergyModel model;
  std::vector<EpochLog> log;
  int steps = 0;
};

// Throws NonFinite.
TrainResult train_ebm(const BipartiteGraph& g, const NodeFeatures& nodes, std::span<const int> template_frequency,
                      const EnhanceConfig& config);

struct StageCResult {
  std::vector<EdgeRef> enhanced;   // E_enh: gt edges plus the selected ones, ascending
  std::vector<EdgeRef> selected;   // newly added edges
  std::map<EdgeRef, double> energy;  // every candidate that was scored
};

// The n candidates with the lowest energy (highest when asked), ties by edge.
std::vector<EdgeRef> pick_top_n(std::vector<EdgeRef> candidates, const std::map<EdgeRef, double>& energy, int n,
                                bool highest_energy = false);

StageCResult denoise_top_n(const BipartiteGraph& filtered, EnergyModel& model, const NodeFeatures& nodes, int n,
                           int hops, bool highest_energy = false);

// One enhanced Reaction per selected edge, from its first canonical outcome.
// Edges without an outcome are skipped.
std::vector<Reaction> materialize_enhanced(const EnhanceData& data, const StageAResult& stage_a,
                                           std::span<const EdgeRef> selected);

struct SandwichReport {
  bool gt_in_enhanced = false;
  bool enhanced_in_filtered = false;
  bool filtered_in_full = false;
  bool within_bound = false;  // |E_enh| <= (n + 1) |E_gt|
  std::string detail;

  bool ok() const { return gt_in_enhanced && enhanced_in_filtered && filtered_in_full && within_bound; }
};

SandwichReport check_sandwich(const BipartiteGraph& full, const BipartiteGraph& filtered,
                              std::span<const EdgeRef> enhanced, int n);

// TSV m_id, t_id, label, energy (blank when unknown).
void write_edge_list(const std::filesystem::path& path, const BipartiteGraph& g, std::span<const EdgeRef> edges,
                     EdgeLabel non_gt_label, const std::map<EdgeRef, double>* energy = nullptr);

}  // namespace retro
