#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace retro {

enum class BondOrder : std::uint8_t { kSingle = 1, kDouble = 2, kTriple = 3, kAromatic = 4 };

enum class Hybridization : std::uint8_t { kSP, kSP2, kSP3, kOther, kUnspecified };

// Integer contribution of a bond to valence. Aromatic bonds count 1 here; the
// extra pi contribution of aromatic atoms is handled by the valence rules.
int bond_valence(BondOrder order);

struct Atom {
  std::string symbol;  // element symbol in canonical case ("C", "Cl", "*")
  int atomic_number = 0;
  int charge = 0;
  int hydrogens = 0;  // total attached hydrogens (implicit + bracket count)
  bool aromatic = false;
  int atom_map = 0;  // 0 when unmapped
  int isotope = 0;
  std::string chirality;  // "", "@" or "@@"
  // Neighbour order the chirality tag refers to. -1 stands for the implicit H.
  std::vector<int> stereo_neighbors;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::kSingle;
  char direction = 0;  // '/' or '\\' read from begin to end, 0 when absent
  bool conjugated = false;
  bool in_ring = false;

  int other(int atom) const { return atom == begin ? end : begin; }
};

struct Neighbor {
  int atom;
  int bond;
};

// Undirected molecular graph. Several disconnected fragments are allowed
// (dot-separated SMILES). Derived data (ring membership, conjugation, smallest
// rings) is refreshed by update_derived(); mutators leave it stale.
class MolecularGraph {
 public:
  MolecularGraph() = default;

  int add_atom(Atom atom);
  // Throws std::invalid_argument for bad endpoints, self loops and duplicates.
  int add_bond(int a, int b, BondOrder order, char direction = 0);
  void remove_bond(int bond_index);
  // Drops the listed atoms and every bond touching them; returns the old->new
  // index map (-1 for removed atoms).
  std::vector<int> remove_atoms(std::span<const int> atoms);

  void update_derived();

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(int i) const { return atoms_[i]; }
  Atom& mutable_atom(int i) { return atoms_[i]; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Bond& bond(int i) const { return bonds_[i]; }
  Bond& mutable_bond(int i) { return bonds_[i]; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<Neighbor>& neighbors(int i) const { return adjacency_[i]; }
  int degree(int i) const { return static_cast<int>(adjacency_[i].size()); }

  std::optional<int> bond_between(int a, int b) const;

  // Sum of bond_valence over incident bonds.
  int bond_valence_sum(int i) const;
  int aromatic_bond_count(int i) const;

  // Smallest set of smallest rings as atom index cycles.
  const std::vector<std::vector<int>>& rings() const { return rings_; }
  bool atom_in_ring(int i) const;

  // Component label per atom, labels dense from 0 in order of first atom.
  std::vector<int> component_labels() const;
  int component_count() const;
  // Cyclomatic number E - V + C.
  int cycle_rank() const;

  Hybridization hybridization(int i) const;

  // Atoms whose map is non-zero, keyed by map.
  std::optional<int> atom_with_map(int map) const;

  // Induced subgraph on `atoms` (kept in the given order).
  MolecularGraph induced_subgraph(std::span<const int> atoms) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<int>> rings_;
};

// ---- elements and valence ---------------------------------------------------

// Atomic number for an element symbol in canonical case; 0 for "*", nullopt
// when the symbol is not an element.
std::optional<int> atomic_number_for(std::string_view symbol);
bool in_organic_subset(std::string_view symbol);

// Allowed valences for an element at a formal charge; empty when the element
// is outside the valence table (no check is applied then).
std::vector<int> allowed_valences(int atomic_number, int charge);

// Hydrogen count an unbracketed organic-subset atom gets from its bonds.
int default_hydrogens(const Atom& atom, int bond_valence_sum);

// Returns an empty string when every atom satisfies the valence table,
// otherwise a description of the first violation.
std::string valence_violation(const MolecularGraph& g);
void check_valence(const MolecularGraph& g);  // throws ValenceError

// ---- SMILES -----------------------------------------------------------------

// Per-atom query flags read from template patterns ("[C;H2;D3;+0:1]").
struct AtomQuery {
  bool match_hydrogens = false;
  int degree = -1;  // -1: unconstrained
};

struct PatternGraph {
  MolecularGraph graph;
  std::vector<AtomQuery> queries;
};

MolecularGraph parse_smiles(std::string_view text);
// Pattern dialect: no valence check, no implicit hydrogens, bracket atoms may
// carry ";H<n>", ";D<n>" and ";<charge>" primitives.
PatternGraph parse_pattern(std::string_view text);

struct CanonicalOptions {
  bool keep_maps = true;
  bool keep_stereo = true;
};

std::string to_canonical_smiles(const MolecularGraph& g, bool keep_maps);
std::string to_canonical_smiles(const MolecularGraph& g, const CanonicalOptions& options);

// Canonical rank per atom: equal ranks only for atoms that refinement could
// not separate (ties are broken before returning, ranks are a permutation).
// `invariants` seeds the refinement; `bond_labels` distinguishes bonds.
std::vector<int> canonical_ranks(const MolecularGraph& g,
                                 std::span<const std::string> invariants,
                                 std::span<const int> bond_labels);

using AtomTokenFn = std::function<std::string(const MolecularGraph&, int atom)>;

struct WriterOptions {
  bool keep_stereo = true;
  bool keep_maps = true;  // used by the standard token writer
  AtomTokenFn token;      // empty: standard SMILES atom tokens
};

// Bracket-or-bare SMILES token for one atom.
std::string standard_atom_token(const MolecularGraph& g, int atom, bool keep_maps, bool keep_stereo);

// Writes every component following `ranks`; component strings are sorted and
// joined with '.'.
std::string write_smiles(const MolecularGraph& g, std::span<const int> ranks,
                         const WriterOptions& options);

// ---- descriptors ------------------------------------------------------------

int heavy_atom_count(const MolecularGraph& g);

// Ring systems plus linkers; terminal chains pruned iteratively. Acyclic input
// gives an empty graph.
MolecularGraph murcko_scaffold(const MolecularGraph& g);

// Total ordering key used to rank scaffolds by complexity.
struct ScaffoldKey {
  int ring_count = 0;
  int heavy_atoms = 0;
  std::string smiles;

  auto operator<=>(const ScaffoldKey&) const = default;
};
ScaffoldKey scaffold_key(const MolecularGraph& g);

struct Fingerprint {
  std::vector<bool> bits;
  int radius = 2;

  std::size_t size() const { return bits.size(); }
  std::size_t count() const;
  std::vector<int> on_bits() const;
  bool operator==(const Fingerprint&) const = default;
};

Fingerprint circular_fingerprint(const MolecularGraph& g, int radius = 2, int nbits = 2048);

// Atom and bond one-hot feature vectors.
inline constexpr int kAtomFeatureSize = 65 + 10 + 5 + 7 + 5 + 1 + 5;
inline constexpr int kBondFeatureSize = 4 + 1 + 1;
using AtomFeatures = std::vector<std::uint8_t>;
using BondFeatures = std::vector<std::uint8_t>;

struct GraphFeatures {
  std::vector<AtomFeatures> atoms;
  std::vector<BondFeatures> bonds;  // one per bond, same order as g.bonds()
};

GraphFeatures featurize(const MolecularGraph& g);

// The fixed element vocabulary of the atom-category block (65 entries, the
// last two being "*" and the out-of-vocabulary slot).
std::span<const std::string_view> atom_category_vocabulary();

// Connected components as separate graphs, ordered by their first atom.
std::vector<MolecularGraph> split_components(const MolecularGraph& g);
// Appends `src` as new atoms of `dst`; returns the index offset. Derived data
// of `dst` is left stale.
int append_graph(MolecularGraph& dst, const MolecularGraph& src);
void clear_maps(MolecularGraph& g);
void clear_stereo(MolecularGraph& g);

// Graph with atoms reordered by `order` (order[k] = old index of new atom k).
MolecularGraph permute_atoms(const MolecularGraph& g, std::span<const int> order);

}  // namespace retro
