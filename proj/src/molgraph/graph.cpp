#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "retro/error.hpp"
#include "retro/molgraph.hpp"

namespace retro {

namespace {

constexpr std::array<std::string_view, 119> kElements = {
    "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac",
    "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf",
    "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

std::vector<int> base_valences(int atomic_number) {
  switch (atomic_number) {
    case 1: return {1};
    case 5: return {3};
    case 6: return {4};
    case 7: return {3};
    case 8: return {2};
    case 9:
    case 17:
    case 35:
    case 53: return {1};
    case 14: return {4};
    case 15: return {3, 5};
    case 16: return {2, 4, 6};
    default: return {};
  }
}

}  // namespace

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::kSingle: return 1;
    case BondOrder::kDouble: return 2;
    case BondOrder::kTriple: return 3;
    case BondOrder::kAromatic: return 1;
  }
  return 1;
}

std::optional<int> atomic_number_for(std::string_view symbol) {
  for (std::size_t z = 0; z < kElements.size(); ++z) {
    if (kElements[z] == symbol) return static_cast<int>(z);
  }
  return std::nullopt;
}

bool in_organic_subset(std::string_view symbol) {
  static constexpr std::array<std::string_view, 10> kOrganic = {"B", "C", "N", "O", "P",
                                                                "S", "F", "Cl", "Br", "I"};
  return std::find(kOrganic.begin(), kOrganic.end(), symbol) != kOrganic.end();
}

std::vector<int> allowed_valences(int atomic_number, int charge) {
  std::vector<int> base = base_valences(atomic_number);
  if (charge == 0 || base.empty()) return base;
  // A charge shifts the valence by |charge| in either direction.
  const int shift = std::abs(charge);
  std::vector<int> out;
  for (int v : base) {
    out.push_back(v + shift);
    if (v - shift >= 0) out.push_back(v - shift);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int default_hydrogens(const Atom& atom, int bond_valence_sum) {
  const std::vector<int> allowed = allowed_valences(atom.atomic_number, atom.charge);
  if (allowed.empty()) return 0;
  if (atom.aromatic) {
    // Aromatic atoms sit at their lowest valence; the pi electron counts one
    // when it fits (c, pyridine n) and not otherwise (furan o, thiophene s).
    const int lowest = allowed.front();
    if (bond_valence_sum + 1 <= lowest) return lowest - bond_valence_sum - 1;
    return 0;
  }
  for (int v : allowed) {
    if (v >= bond_valence_sum) return v - bond_valence_sum;
  }
  return 0;
}

std::string valence_violation(const MolecularGraph& g) {
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atom(static_cast<int>(i));
    const std::vector<int> allowed = allowed_valences(a.atomic_number, a.charge);
    if (allowed.empty()) continue;
    int total = g.bond_valence_sum(static_cast<int>(i)) + a.hydrogens;
    // Aromatic carbon always donates its pi electron.
    if (a.aromatic && a.atomic_number == 6) total += 1;
    if (total > allowed.back()) {
      return "atom " + std::to_string(i) + " (" + a.symbol + ") has valence " +
             std::to_string(total) + ", maximum " + std::to_string(allowed.back());
    }
  }
  return {};
}

void check_valence(const MolecularGraph& g) {
  if (std::string v = valence_violation(g); !v.empty()) throw ValenceError(v);
}

int MolecularGraph::add_atom(Atom atom) {
  atoms_.push_back(std::move(atom));
  adjacency_.emplace_back();
  return static_cast<int>(atoms_.size()) - 1;
}

int MolecularGraph::add_bond(int a, int b, BondOrder order, char direction) {
  const int n = static_cast<int>(atoms_.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw std::invalid_argument("bond endpoint out of range");
  if (a == b) throw std::invalid_argument("self bond");
  if (bond_between(a, b)) throw std::invalid_argument("duplicate bond");
  Bond bond;
  bond.begin = a;
  bond.end = b;
  bond.order = order;
  bond.direction = direction;
  bonds_.push_back(bond);
  const int index = static_cast<int>(bonds_.size()) - 1;
  adjacency_[a].push_back({b, index});
  adjacency_[b].push_back({a, index});
  return index;
}

void MolecularGraph::remove_bond(int bond_index) {
  bonds_.erase(bonds_.begin() + bond_index);
  for (auto& adj : adjacency_) adj.clear();
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const Bond& b = bonds_[i];
    adjacency_[b.begin].push_back({b.end, static_cast<int>(i)});
    adjacency_[b.end].push_back({b.begin, static_cast<int>(i)});
  }
}

std::vector<int> MolecularGraph::remove_atoms(std::span<const int> atoms) {
  std::vector<bool> drop(atoms_.size(), false);
  for (int a : atoms) drop[a] = true;
  std::vector<int> remap(atoms_.size(), -1);
  std::vector<Atom> kept;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (drop[i]) continue;
    remap[i] = static_cast<int>(kept.size());
    kept.push_back(std::move(atoms_[i]));
  }
  std::vector<Bond> old_bonds = std::move(bonds_);
  atoms_.clear();
  bonds_.clear();
  adjacency_.clear();
  for (Atom& a : kept) {
    std::vector<int> stereo;
    for (int s : a.stereo_neighbors) {
      if (s < 0) {
        stereo.push_back(s);
      } else if (remap[s] >= 0) {
        stereo.push_back(remap[s]);
      }
    }
    a.stereo_neighbors = std::move(stereo);
    add_atom(std::move(a));
  }
  for (const Bond& b : old_bonds) {
    if (remap[b.begin] < 0 || remap[b.end] < 0) continue;
    add_bond(remap[b.begin], remap[b.end], b.order, b.direction);
  }
  return remap;
}

std::optional<int> MolecularGraph::bond_between(int a, int b) const {
  for (const Neighbor& nb : adjacency_[a]) {
    if (nb.atom == b) return nb.bond;
  }
  return std::nullopt;
}

int MolecularGraph::bond_valence_sum(int i) const {
  int sum = 0;
  for (const Neighbor& nb : adjacency_[i]) sum += bond_valence(bonds_[nb.bond].order);
  return sum;
}

int MolecularGraph::aromatic_bond_count(int i) const {
  int count = 0;
  for (const Neighbor& nb : adjacency_[i]) {
    if (bonds_[nb.bond].order == BondOrder::kAromatic) ++count;
  }
  return count;
}

bool MolecularGraph::atom_in_ring(int i) const {
  for (const Neighbor& nb : adjacency_[i]) {
    if (bonds_[nb.bond].in_ring) return true;
  }
  return false;
}

std::vector<int> MolecularGraph::component_labels() const {
  std::vector<int> label(atoms_.size(), -1);
  int next = 0;
  for (std::size_t start = 0; start < atoms_.size(); ++start) {
    if (label[start] >= 0) continue;
    std::vector<int> stack = {static_cast<int>(start)};
    label[start] = next;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : adjacency_[v]) {
        if (label[nb.atom] < 0) {
          label[nb.atom] = next;
          stack.push_back(nb.atom);
        }
      }
    }
    ++next;
  }
  return label;
}

int MolecularGraph::component_count() const {
  const std::vector<int> labels = component_labels();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

int MolecularGraph::cycle_rank() const {
  return static_cast<int>(bonds_.size()) - static_cast<int>(atoms_.size()) + component_count();
}

std::optional<int> MolecularGraph::atom_with_map(int map) const {
  if (map == 0) return std::nullopt;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i].atom_map == map) return static_cast<int>(i);
  }
  return std::nullopt;
}

Hybridization MolecularGraph::hybridization(int i) const {
  const Atom& a = atoms_[i];
  if (allowed_valences(a.atomic_number, 0).empty()) {
    return a.atomic_number == 0 ? Hybridization::kUnspecified : Hybridization::kOther;
  }
  if (adjacency_[i].empty() && a.hydrogens == 0) return Hybridization::kUnspecified;
  if (a.aromatic) return Hybridization::kSP2;
  int doubles = 0;
  int triples = 0;
  for (const Neighbor& nb : adjacency_[i]) {
    const BondOrder o = bonds_[nb.bond].order;
    if (o == BondOrder::kDouble) ++doubles;
    if (o == BondOrder::kTriple) ++triples;
  }
  if (triples > 0 || doubles > 1) return Hybridization::kSP;
  if (doubles == 1) return Hybridization::kSP2;
  return Hybridization::kSP3;
}

MolecularGraph MolecularGraph::induced_subgraph(std::span<const int> atoms) const {
  MolecularGraph sub;
  std::unordered_map<int, int> remap;
  for (int a : atoms) {
    Atom copy = atoms_[a];
    copy.stereo_neighbors.clear();
    copy.chirality.clear();
    remap[a] = sub.add_atom(std::move(copy));
  }
  for (const Bond& b : bonds_) {
    auto ib = remap.find(b.begin);
    auto ie = remap.find(b.end);
    if (ib == remap.end() || ie == remap.end()) continue;
    sub.add_bond(ib->second, ie->second, b.order, b.direction);
  }
  sub.update_derived();
  return sub;
}

namespace {

// Marks bridges with Tarjan's low-link; every non-bridge bond lies on a cycle.
std::vector<bool> find_ring_bonds(const MolecularGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<int> disc(n, -1);
  std::vector<int> low(n, 0);
  std::vector<bool> ring(g.bond_count(), true);
  int timer = 0;
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack = {{root, -1, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto& adj = g.neighbors(f.atom);
      if (f.next < adj.size()) {
        const Neighbor nb = adj[f.next++];
        if (nb.bond == f.parent_bond) continue;
        if (disc[nb.atom] < 0) {
          disc[nb.atom] = low[nb.atom] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[f.atom] = std::min(low[f.atom], disc[nb.atom]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          Frame& parent = stack.back();
          low[parent.atom] = std::min(low[parent.atom], low[done.atom]);
          if (low[done.atom] > disc[parent.atom]) ring[done.parent_bond] = false;
        }
      }
    }
  }
  return ring;
}

}  // namespace

void MolecularGraph::update_derived() {
  const std::vector<bool> ring = find_ring_bonds(*this);
  for (std::size_t i = 0; i < bonds_.size(); ++i) bonds_[i].in_ring = ring[i];

  // Candidate cycles: shortest cycle through each ring bond. A GF(2) basis of
  // the candidates, taken shortest first, gives the smallest set of rings.
  const int n = static_cast<int>(atoms_.size());
  std::vector<std::vector<int>> candidates;  // bond lists
  for (std::size_t bi = 0; bi < bonds_.size(); ++bi) {
    if (!ring[bi]) continue;
    const Bond& b = bonds_[bi];
    std::vector<int> parent_bond(n, -2);
    std::queue<int> queue;
    parent_bond[b.begin] = -1;
    queue.push(b.begin);
    while (!queue.empty() && parent_bond[b.end] == -2) {
      const int v = queue.front();
      queue.pop();
      for (const Neighbor& nb : adjacency_[v]) {
        if (nb.bond == static_cast<int>(bi) || !ring[nb.bond] || parent_bond[nb.atom] != -2) continue;
        parent_bond[nb.atom] = nb.bond;
        queue.push(nb.atom);
      }
    }
    if (parent_bond[b.end] == -2) continue;
    std::vector<int> cycle = {static_cast<int>(bi)};
    for (int v = b.end; v != b.begin;) {
      const int pb = parent_bond[v];
      cycle.push_back(pb);
      v = bonds_[pb].other(v);
    }
    std::sort(cycle.begin(), cycle.end());
    candidates.push_back(std::move(cycle));
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& x, const auto& y) {
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  rings_.clear();
  const int wanted = cycle_rank();
  std::vector<std::vector<bool>> basis;  // reduced rows
  std::vector<int> pivots;
  for (const auto& cycle : candidates) {
    if (static_cast<int>(rings_.size()) >= wanted) break;
    std::vector<bool> row(bonds_.size(), false);
    for (int b : cycle) row[b] = true;
    for (std::size_t r = 0; r < basis.size(); ++r) {
      if (row[pivots[r]]) {
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = row[k] != basis[r][k];
      }
    }
    auto it = std::find(row.begin(), row.end(), true);
    if (it == row.end()) continue;
    pivots.push_back(static_cast<int>(it - row.begin()));
    basis.push_back(std::move(row));
    // Walk the cycle to list atoms in ring order.
    std::vector<int> atoms;
    const Bond& first = bonds_[cycle.front()];
    int prev_bond = cycle.front();
    int v = first.end;
    atoms.push_back(first.begin);
    while (v != first.begin) {
      atoms.push_back(v);
      for (int b : cycle) {
        if (b != prev_bond && (bonds_[b].begin == v || bonds_[b].end == v)) {
          prev_bond = b;
          v = bonds_[b].other(v);
          break;
        }
      }
    }
    rings_.push_back(std::move(atoms));
  }

  // Conjugation: aromatic bonds; multiple bonds adjacent to another multiple or
  // aromatic bond; single bonds joining two such systems.
  auto has_pi_besides = [&](int atom, int skip_bond) {
    for (const Neighbor& nb : adjacency_[atom]) {
      if (nb.bond == skip_bond) continue;
      if (bonds_[nb.bond].order != BondOrder::kSingle) return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    Bond& b = bonds_[i];
    const int idx = static_cast<int>(i);
    if (b.order == BondOrder::kAromatic) {
      b.conjugated = true;
    } else if (b.order == BondOrder::kSingle) {
      b.conjugated = has_pi_besides(b.begin, idx) && has_pi_besides(b.end, idx);
    } else {
      b.conjugated = has_pi_besides(b.begin, idx) || has_pi_besides(b.end, idx);
    }
  }
}

std::vector<MolecularGraph> split_components(const MolecularGraph& g) {
  const std::vector<int> labels = g.component_labels();
  std::vector<std::vector<int>> members;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    if (labels[i] >= static_cast<int>(members.size())) members.resize(labels[i] + 1);
    members[labels[i]].push_back(i);
  }
  std::vector<MolecularGraph> out;
  out.reserve(members.size());
  for (const auto& m : members) {
    // induced_subgraph drops stereo; rebuild it here so components keep it
    MolecularGraph sub;
    std::unordered_map<int, int> remap;
    for (int a : m) remap[a] = sub.add_atom(g.atom(a));
    for (int k = 0; k < static_cast<int>(sub.atom_count()); ++k) {
      for (int& s : sub.mutable_atom(k).stereo_neighbors) {
        if (s >= 0) s = remap.at(s);
      }
    }
    for (const Bond& b : g.bonds()) {
      if (labels[b.begin] == labels[m.front()]) sub.add_bond(remap[b.begin], remap[b.end], b.order, b.direction);
    }
    sub.update_derived();
    out.push_back(std::move(sub));
  }
  return out;
}

int append_graph(MolecularGraph& dst, const MolecularGraph& src) {
  const int offset = static_cast<int>(dst.atom_count());
  for (const Atom& a : src.atoms()) {
    Atom copy = a;
    for (int& s : copy.stereo_neighbors) {
      if (s >= 0) s += offset;
    }
    dst.add_atom(std::move(copy));
  }
  for (const Bond& b : src.bonds()) dst.add_bond(b.begin + offset, b.end + offset, b.order, b.direction);
  return offset;
}

void clear_maps(MolecularGraph& g) {
  for (std::size_t i = 0; i < g.atom_count(); ++i) g.mutable_atom(static_cast<int>(i)).atom_map = 0;
}

void clear_stereo(MolecularGraph& g) {
  for (std::size_t i = 0; i < g.atom_count(); ++i) {
    Atom& a = g.mutable_atom(static_cast<int>(i));
    a.chirality.clear();
    a.stereo_neighbors.clear();
  }
  for (std::size_t b = 0; b < g.bond_count(); ++b) g.mutable_bond(static_cast<int>(b)).direction = 0;
}

MolecularGraph permute_atoms(const MolecularGraph& g, std::span<const int> order) {
  std::vector<int> new_index(g.atom_count());
  for (std::size_t k = 0; k < order.size(); ++k) new_index[order[k]] = static_cast<int>(k);
  MolecularGraph out;
  for (int old : order) {
    Atom a = g.atom(old);
    for (int& s : a.stereo_neighbors) {
      if (s >= 0) s = new_index[s];
    }
    out.add_atom(std::move(a));
  }
  for (const Bond& b : g.bonds()) out.add_bond(new_index[b.begin], new_index[b.end], b.order, b.direction);
  out.update_derived();
  return out;
}

}  // namespace retro
