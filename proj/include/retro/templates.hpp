#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retro/molgraph.hpp"

namespace retro {

enum class Provenance { kObserved, kEnhanced };

std::string_view provenance_name(Provenance p);

struct Reaction {
  std::string id;
  std::optional<int> reaction_class;
  std::vector<MolecularGraph> precursors;  // one graph per molecule
  MolecularGraph product;
  Provenance provenance = Provenance::kObserved;
  std::string template_id;  // only set on enhanced records
};

// "precursors>agents>product" or "precursors>>product". Agents are dropped.
// Throws SyntaxError / ValenceError from the molecule parser, FormatError for
// a malformed arrow structure.
Reaction parse_reaction(std::string_view text);

// Mapped reaction SMILES (maps and stereo kept), agents omitted.
std::string reaction_smiles(const Reaction& r);

// All precursor molecules as one multi-component graph.
MolecularGraph combined_precursors(const Reaction& r);

// Canonical key for a molecule or molecule set: no maps, no stereo.
std::string molecule_key(const MolecularGraph& g);
// Canonical ground-truth precursor set: the precursor molecules that share
// at least one atom map with the product (all of them if none does).
std::string precursor_set_key(const Reaction& r);
std::string product_key(const Reaction& r);

// ---- corpus files -----------------------------------------------------------

struct RejectedLine {
  std::size_t line = 0;
  std::string id;
  std::string reason;
};

// TSV "id<TAB>class<TAB>reaction" with optional trailing provenance and
// template id columns; a header line is skipped. Without `rejected` the first
// unparseable line throws FormatError; with it bad lines are reported there.
std::vector<Reaction> read_corpus(const std::filesystem::path& path,
                                  std::vector<RejectedLine>* rejected = nullptr);
void write_corpus(const std::filesystem::path& path, std::span<const Reaction> reactions,
                  bool with_provenance = false);

// ---- reaction centre --------------------------------------------------------

enum class BondChange { kFormed, kBroken, kOrderChanged };

struct ChangedBond {
  int map_a = 0;  // map_a < map_b
  int map_b = 0;
  BondChange change = BondChange::kFormed;

  auto operator<=>(const ChangedBond&) const = default;
};

struct ReactionCenter {
  std::set<ChangedBond> changed_bonds;
  std::set<int> changed_atoms;  // product maps with a different H count or charge
  std::set<int> center_maps;

  bool empty() const { return center_maps.empty(); }
};

// Throws MappingError for a product map missing from the precursors or a
// map used twice on one side.
ReactionCenter detect_reaction_center(const Reaction& r);

// ---- templates --------------------------------------------------------------

struct Template {
  std::string template_id;
  int radius = 0;
  PatternGraph product_pattern;
  std::vector<PatternGraph> precursor_patterns;  // connected pattern fragments
  std::string canonical_string;                  // "precursors>>product"
  int frequency = 0;
  // Product maps of the pattern atoms in the source reaction (extraction only).
  std::vector<int> source_product_maps;
};

// Throws CenterError for an empty centre, MappingError for unmapped product
// atoms.
Template extract_template(const Reaction& r, int radius);

// Rebuilds a template from its canonical string. Throws FormatError.
Template parse_template(std::string_view canonical, int radius);

// Recomputes the canonical string from the patterns, renumbering maps.
std::string canonical_template_string(const Template& t);

// "r<radius>_<16 hex digits>" derived from the canonical string.
std::string template_id_for(std::string_view canonical, int radius);

struct ApplyOptions {
  int max_matches = 100;
  bool strict = false;  // throw RewriteError when embeddings exist but every rewrite fails
};

struct TemplateOutcome {
  std::string precursors;           // canonical precursor set
  MolecularGraph mapped_precursors;  // product atoms carry maps 1..n
  MolecularGraph mapped_product;
};

// Sorted, duplicate-free canonical precursor sets.
std::vector<std::string> apply_template(const Template& t, const MolecularGraph& product,
                                        const ApplyOptions& options = {});
// Same outcomes (same order) with an atom-mapped reaction for each.
std::vector<TemplateOutcome> apply_template_detailed(const Template& t, const MolecularGraph& product,
                                                     const ApplyOptions& options = {});

// Fast pre-check: does the product pattern embed at all.
bool template_matches(const Template& t, const MolecularGraph& product);

// ---- corpus assignment --------------------------------------------------------

struct SkippedReaction {
  std::string id;
  std::string reason;
};

struct TemplateAssignment {
  int radius = 0;
  std::map<std::string, std::string> template_of;  // reaction id -> template id
  std::vector<Template> table;  // frequency descending, then canonical string
  std::vector<SkippedReaction> skipped;

  const Template* find(std::string_view template_id) const;
};

TemplateAssignment assign_corpus_templates(std::span<const Reaction> corpus, int radius);

void write_template_table(const std::filesystem::path& path, std::span<const Template> table);
std::vector<Template> read_template_table(const std::filesystem::path& path);
void write_assignments(const std::filesystem::path& path, const std::map<std::string, std::string>& template_of);
std::map<std::string, std::string> read_assignments(const std::filesystem::path& path);

}  // namespace retro
