#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retro/templates.hpp"

namespace retro {

enum class SplitKind { kLabelMinimal, kLabelRetro, kCovariateSize, kCovariateScaffold };

std::string_view split_kind_name(SplitKind kind);
SplitKind split_kind_from_name(std::string_view name);  // throws FormatError

inline bool is_label_split(SplitKind kind) { return kind == SplitKind::kLabelMinimal || kind == SplitKind::kLabelRetro; }

struct SplitManifest {
  SplitKind kind = SplitKind::kLabelMinimal;
  std::uint64_t seed = 0;
  int template_radius = 0;
  double ood_fraction = 0.1;
  int min_class_size = 0;  // covariate splits only

  // Ids keep corpus order inside each partition.
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test_id;
  std::vector<std::string> test_ood;
  std::vector<std::string> discarded;

  int id_template_classes = 0;   // distinct templates in train+val+test_id
  int ood_template_classes = 0;  // distinct templates in test_ood

  std::size_t corpus_size() const;
};

// template_of maps reaction id -> template id at `radius`. radius 0 gives
// kLabelMinimal, anything larger kLabelRetro. Throws InfeasibleSplit.
SplitManifest make_label_split(std::span<const Reaction> corpus, const std::map<std::string, std::string>& template_of,
                               int radius, double ood_fraction, std::uint64_t seed);

enum class CovariateCriterion { kSize, kScaffold };

// minimal_template_of maps reaction id -> radius-0 template id.
SplitManifest make_covariate_split(std::span<const Reaction> corpus,
                                   const std::map<std::string, std::string>& minimal_template_of,
                                   CovariateCriterion criterion, int min_class_size, double ood_fraction,
                                   std::uint64_t seed);

// The 7:1:1 sizes used for an in-distribution pool of n reactions.
struct IdSizes {
  std::size_t train = 0, val = 0, test_id = 0;
};
IdSizes id_partition_sizes(std::size_t n);
std::size_t covariate_ood_count(std::size_t class_size, double ood_fraction);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const;
  const ValidationCheck* find(std::string_view name) const;
};

// template_of must be the assignment at the manifest's template radius.
ValidationReport validate_manifest(const SplitManifest& m, std::span<const Reaction> corpus,
                                   const std::map<std::string, std::string>& template_of);

struct PartitionSummary {
  std::size_t reactions = 0;
  std::map<std::string, int> template_counts;
  std::map<int, int> size_histogram;      // product heavy atoms -> count
  std::map<std::string, int> scaffold_counts;  // canonical scaffold ("" = acyclic) -> count
  double mean_size = 0.0;
};

struct ShiftSummary {
  std::map<std::string, PartitionSummary> partitions;  // train, val, test_id, test_ood
  int shared_templates = 0;  // templates present on both the ID side and test_ood
};

ShiftSummary summarize_shift(const SplitManifest& m, std::span<const Reaction> corpus,
                             const std::map<std::string, std::string>& template_of);

std::string manifest_to_json(const SplitManifest& m);
SplitManifest manifest_from_json(std::string_view text);  // throws FormatError
std::string summary_to_json(const ShiftSummary& s);
std::string report_to_json(const ValidationReport& r);

void write_manifest(const std::filesystem::path& path, const SplitManifest& m);
SplitManifest read_manifest(const std::filesystem::path& path);

}  // namespace retro
