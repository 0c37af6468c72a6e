#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "retro/molgraph.hpp"

namespace retro {

namespace {

template <typename Key>
std::vector<int> dense_ranks(const std::vector<Key>& keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> rank(n, 0);
  for (int k = 0; k < n; ++k) {
    if (k > 0 && keys[idx[k]] == keys[idx[k - 1]]) {
      rank[idx[k]] = rank[idx[k - 1]];
    } else {
      rank[idx[k]] = k;
    }
  }
  return rank;
}

int class_count(const std::vector<int>& ranks) {
  std::set<int> distinct(ranks.begin(), ranks.end());
  return static_cast<int>(distinct.size());
}

std::vector<int> refine(const MolecularGraph& g, std::vector<int> ranks, std::span<const int> bond_labels) {
  const int n = static_cast<int>(g.atom_count());
  int classes = class_count(ranks);
  while (true) {
    std::vector<std::vector<long long>> keys(n);
    for (int i = 0; i < n; ++i) {
      std::vector<long long> nbrs;
      for (const Neighbor& nb : g.neighbors(i)) {
        nbrs.push_back(static_cast<long long>(bond_labels[nb.bond]) * (n + 1) + ranks[nb.atom]);
      }
      std::sort(nbrs.begin(), nbrs.end());
      keys[i].reserve(nbrs.size() + 1);
      keys[i].push_back(ranks[i]);
      keys[i].insert(keys[i].end(), nbrs.begin(), nbrs.end());
    }
    std::vector<int> next = dense_ranks(keys);
    const int next_classes = class_count(next);
    ranks = std::move(next);
    if (next_classes == classes) break;
    classes = next_classes;
  }
  return ranks;
}

int permutation_parity(const std::vector<int>& from, const std::vector<int>& to) {
  // Parity of the permutation taking `from` to `to` (same elements).
  std::vector<int> pos;
  pos.reserve(to.size());
  for (int x : to) pos.push_back(static_cast<int>(std::find(from.begin(), from.end(), x) - from.begin()));
  int inversions = 0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    for (std::size_t j = i + 1; j < pos.size(); ++j) {
      if (pos[i] > pos[j]) ++inversions;
    }
  }
  return inversions % 2;
}

std::string ring_label(int digit) {
  return digit < 10 ? std::to_string(digit) : "%" + std::to_string(digit);
}

class Writer {
 public:
  Writer(const MolecularGraph& g, std::span<const int> ranks, const WriterOptions& options)
      : g_(g), ranks_(ranks), options_(options) {}

  std::string run() {
    const int n = static_cast<int>(g_.atom_count());
    visited_.assign(n, false);
    parent_.assign(n, -1);
    parent_bond_.assign(n, -1);
    children_.assign(n, {});
    ring_bonds_at_.assign(n, {});
    ring_bond_.assign(g_.bond_count(), false);
    dfs_index_.assign(n, -1);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ranks_[a] < ranks_[b]; });

    std::vector<std::string> parts;
    for (int start : order) {
      if (visited_[start]) continue;
      dfs(start, -1);
      std::string out;
      digit_of_bond_.clear();
      emit(start, out);
      parts.push_back(std::move(out));
    }
    std::sort(parts.begin(), parts.end());
    std::string joined;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) joined += '.';
      joined += parts[i];
    }
    return joined;
  }

 private:
  std::vector<Neighbor> sorted_neighbors(int v) const {
    std::vector<Neighbor> nbrs = g_.neighbors(v);
    std::sort(nbrs.begin(), nbrs.end(), [&](const Neighbor& a, const Neighbor& b) {
      return ranks_[a.atom] < ranks_[b.atom];
    });
    return nbrs;
  }

  void dfs(int v, int parent_bond) {
    visited_[v] = true;
    dfs_index_[v] = next_dfs_++;
    for (const Neighbor& nb : sorted_neighbors(v)) {
      if (nb.bond == parent_bond) continue;
      if (visited_[nb.atom]) {
        if (!ring_bond_[nb.bond]) {
          ring_bond_[nb.bond] = true;
          ring_bonds_at_[nb.atom].push_back(nb.bond);  // opens at the earlier atom
          ring_bonds_at_[v].push_back(nb.bond);
        }
        continue;
      }
      parent_[nb.atom] = v;
      parent_bond_[nb.atom] = nb.bond;
      children_[v].push_back(nb.atom);
      dfs(nb.atom, nb.bond);
    }
  }

  std::string bond_symbol(int bond_index, int from) const {
    const Bond& b = g_.bond(bond_index);
    const bool both_aromatic = g_.atom(b.begin).aromatic && g_.atom(b.end).aromatic;
    switch (b.order) {
      case BondOrder::kAromatic: return both_aromatic ? "" : ":";
      case BondOrder::kDouble: return "=";
      case BondOrder::kTriple: return "#";
      case BondOrder::kSingle:
        if (options_.keep_stereo && b.direction != 0) {
          const char d = from == b.begin ? b.direction : (b.direction == '/' ? '\\' : '/');
          return std::string(1, d);
        }
        return both_aromatic ? "-" : "";
    }
    return "";
  }

  // Lowest digit not held by an open ring and not closed at the current atom.
  int take_digit(const std::vector<int>& released) const {
    for (int d = 1; d < 100; ++d) {
      if (std::find(released.begin(), released.end(), d) != released.end()) continue;
      const bool open = std::any_of(digit_of_bond_.begin(), digit_of_bond_.end(),
                                    [d](const auto& entry) { return entry.second == d; });
      if (!open) return d;
    }
    return 99;
  }

  void emit(int v, std::string& out) {
    // Ring bonds: closures first (in order of the opening atom), then openings
    // (in rank order of the partner).
    std::vector<int> closings;
    std::vector<int> openings;
    for (int b : ring_bonds_at_[v]) {
      const int other = g_.bond(b).other(v);
      (dfs_index_[other] < dfs_index_[v] ? closings : openings).push_back(b);
    }
    std::sort(closings.begin(), closings.end(), [&](int a, int b) {
      return dfs_index_[g_.bond(a).other(v)] < dfs_index_[g_.bond(b).other(v)];
    });
    std::sort(openings.begin(), openings.end(), [&](int a, int b) {
      return ranks_[g_.bond(a).other(v)] < ranks_[g_.bond(b).other(v)];
    });

    std::vector<int> out_neighbors;
    if (parent_[v] >= 0) out_neighbors.push_back(parent_[v]);
    const Atom& atom = g_.atom(v);
    if (!atom.chirality.empty() && atom.hydrogens == 1) out_neighbors.push_back(-1);

    std::string ring_text;
    std::vector<int> released;
    for (int b : closings) {
      const int digit = digit_of_bond_.at(b);
      ring_text += ring_label(digit);
      digit_of_bond_.erase(b);
      released.push_back(digit);
      out_neighbors.push_back(g_.bond(b).other(v));
    }
    for (int b : openings) {
      const int digit = take_digit(released);
      digit_of_bond_[b] = digit;
      ring_text += bond_symbol(b, v) + ring_label(digit);
      out_neighbors.push_back(g_.bond(b).other(v));
    }
    for (int c : children_[v]) out_neighbors.push_back(c);

    out += atom_token(v, out_neighbors);
    out += ring_text;

    for (std::size_t k = 0; k < children_[v].size(); ++k) {
      const int c = children_[v][k];
      const bool branch = k + 1 < children_[v].size();
      if (branch) out += '(';
      out += bond_symbol(parent_bond_[c], v);
      emit(c, out);
      if (branch) out += ')';
    }
  }

  std::string atom_token(int v, const std::vector<int>& out_neighbors) const {
    if (options_.token) return options_.token(g_, v);
    const Atom& atom = g_.atom(v);
    if (!options_.keep_stereo || atom.chirality.empty()) {
      return standard_atom_token(g_, v, options_.keep_maps, false);
    }
    std::vector<int> stored = atom.stereo_neighbors;
    std::vector<int> a = stored;
    std::vector<int> b = out_neighbors;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return standard_atom_token(g_, v, options_.keep_maps, false);
    if (permutation_parity(stored, out_neighbors) == 0) {
      return standard_atom_token(g_, v, options_.keep_maps, true);
    }
    Atom copy = atom;
    copy.chirality = atom.chirality == "@" ? "@@" : "@";
    std::string token = standard_atom_token(g_, v, options_.keep_maps, true);
    const std::size_t at = token.find(atom.chirality);
    token.replace(at, atom.chirality.size(), copy.chirality);
    return token;
  }

  const MolecularGraph& g_;
  std::span<const int> ranks_;
  const WriterOptions& options_;
  std::vector<bool> visited_;
  std::vector<int> parent_;
  std::vector<int> parent_bond_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> ring_bonds_at_;
  std::vector<bool> ring_bond_;
  std::vector<int> dfs_index_;
  int next_dfs_ = 0;
  std::map<int, int> digit_of_bond_;
};

}  // namespace

std::string standard_atom_token(const MolecularGraph& g, int v, bool keep_maps, bool keep_stereo) {
  const Atom& a = g.atom(v);
  const bool organic = a.symbol == "*" || in_organic_subset(a.symbol);
  const bool aromatic_ok = !a.aromatic || a.symbol == "B" || a.symbol == "C" || a.symbol == "N" ||
                           a.symbol == "O" || a.symbol == "P" || a.symbol == "S";
  const bool chiral = keep_stereo && !a.chirality.empty();
  const bool mapped = keep_maps && a.atom_map != 0;
  std::string symbol = a.symbol;
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(symbol[0]));
  bool bracket = !organic || !aromatic_ok || a.charge != 0 || a.isotope != 0 || chiral || mapped;
  if (!bracket) {
    Atom neutral = a;
    bracket = default_hydrogens(neutral, g.bond_valence_sum(v)) != a.hydrogens;
  }
  if (!bracket) return symbol;
  std::string out = "[";
  if (a.isotope != 0) out += std::to_string(a.isotope);
  out += symbol;
  if (chiral) out += a.chirality;
  if (a.hydrogens > 0) {
    out += 'H';
    if (a.hydrogens > 1) out += std::to_string(a.hydrogens);
  }
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) out += std::to_string(std::abs(a.charge));
  }
  if (mapped) out += ":" + std::to_string(a.atom_map);
  out += ']';
  return out;
}

namespace {

int lowest_tied_rank(const std::vector<int>& ranks) {
  const int n = static_cast<int>(ranks.size());
  std::vector<int> counts(n, 0);
  for (int r : ranks) ++counts[r];
  for (int r = 0; r < n; ++r) {
    if (counts[r] > 1) return r;
  }
  return -1;
}

std::vector<int> break_tie(const MolecularGraph& g, const std::vector<int>& ranks, int tied, int chosen,
                           std::span<const int> bond_labels) {
  const int n = static_cast<int>(ranks.size());
  std::vector<long long> split(n);
  for (int i = 0; i < n; ++i) split[i] = 2LL * ranks[i] + (ranks[i] == tied && i != chosen ? 1 : 0);
  return refine(g, dense_ranks(split), bond_labels);
}

// Exhaustive tie breaking, bounded by `budget` complete rankings; returns the
// ranking whose string is smallest. Used when stereo tags make symmetric
// choices write differently.
void search_ranks(const MolecularGraph& g, const std::vector<int>& ranks, std::span<const int> bond_labels,
                  const WriterOptions& writer, int& budget, std::string& best, std::vector<int>& best_ranks) {
  const int tied = lowest_tied_rank(ranks);
  if (tied < 0) {
    --budget;
    std::string s = write_smiles(g, ranks, writer);
    if (best_ranks.empty() || s < best) {
      best = std::move(s);
      best_ranks = ranks;
    }
    return;
  }
  bool first = true;
  for (int i = 0; i < static_cast<int>(ranks.size()); ++i) {
    if (ranks[i] != tied) continue;
    if (!first && budget <= 0) break;
    first = false;
    search_ranks(g, break_tie(g, ranks, tied, i, bond_labels), bond_labels, writer, budget, best, best_ranks);
  }
}

bool has_stereo(const MolecularGraph& g) {
  for (const Atom& a : g.atoms()) {
    if (!a.chirality.empty()) return true;
  }
  for (const Bond& b : g.bonds()) {
    if (b.direction != 0) return true;
  }
  return false;
}

}  // namespace

std::vector<int> canonical_ranks(const MolecularGraph& g, std::span<const std::string> invariants,
                                 std::span<const int> bond_labels) {
  std::vector<std::string> keys(invariants.begin(), invariants.end());
  std::vector<int> ranks = refine(g, dense_ranks(keys), bond_labels);
  // Break the lowest tied class at its first member and refine again.
  for (int tied = lowest_tied_rank(ranks); tied >= 0; tied = lowest_tied_rank(ranks)) {
    const int chosen = static_cast<int>(std::find(ranks.begin(), ranks.end(), tied) - ranks.begin());
    ranks = break_tie(g, ranks, tied, chosen, bond_labels);
  }
  return ranks;
}

std::string write_smiles(const MolecularGraph& g, std::span<const int> ranks, const WriterOptions& options) {
  if (g.empty()) return {};
  return Writer(g, ranks, options).run();
}

std::string to_canonical_smiles(const MolecularGraph& g, bool keep_maps) {
  return to_canonical_smiles(g, CanonicalOptions{keep_maps, true});
}

std::string to_canonical_smiles(const MolecularGraph& g, const CanonicalOptions& options) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<std::string> invariants(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    invariants[i] = std::to_string(a.atomic_number) + (a.aromatic ? "a" : "A") + "," +
                    std::to_string(a.charge) + "," + std::to_string(a.hydrogens) + "," +
                    std::to_string(a.isotope) + "," + std::to_string(g.degree(i)) + "," +
                    (g.atom_in_ring(i) ? "r" : "c") + "," +
                    std::to_string(options.keep_maps ? a.atom_map : 0);
  }
  std::vector<int> labels(g.bond_count());
  for (std::size_t b = 0; b < g.bond_count(); ++b) labels[b] = static_cast<int>(g.bond(static_cast<int>(b)).order);
  WriterOptions writer;
  writer.keep_maps = options.keep_maps;
  writer.keep_stereo = options.keep_stereo;
  if (options.keep_stereo && has_stereo(g)) {
    const std::vector<int> refined = refine(g, dense_ranks(invariants), labels);
    int budget = 256;
    std::string best;
    std::vector<int> best_ranks;
    search_ranks(g, refined, labels, writer, budget, best, best_ranks);
    return best;
  }
  const std::vector<int> ranks = canonical_ranks(g, invariants, labels);
  return write_smiles(g, ranks, writer);
}

}  // namespace retro
