#include <algorithm>
#include <array>

#include "retro/molgraph.hpp"

namespace retro {

namespace {

constexpr std::array<std::string_view, 65> kAtomCategories = {
    "C",  "N",  "O",  "S",  "F",  "Si", "P",  "Cl", "Br", "Mg", "Na", "Ca", "Fe",
    "As", "Al", "I",  "B",  "V",  "K",  "Tl", "Yb", "Sb", "Sn", "Ag", "Pd", "Co",
    "Se", "Ti", "Zn", "H",  "Li", "Ge", "Cu", "Au", "Ni", "Cd", "In", "Mn", "Zr",
    "Cr", "Pt", "Hg", "Pb", "W",  "Ru", "Nb", "Re", "Te", "Rh", "Ta", "Tc", "Ba",
    "Bi", "Hf", "Mo", "U",  "Sm", "Os", "Ir", "Ce", "Gd", "Ga", "Cs", "*",  "unk"};

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // splitmix64 finaliser over the running hash
  std::uint64_t z = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int total_valence(const MolecularGraph& g, int i) {
  const Atom& a = g.atom(i);
  int v = g.bond_valence_sum(i) + a.hydrogens;
  if (a.aromatic && a.atomic_number == 6) v += 1;
  return v;
}

void one_hot(std::vector<std::uint8_t>& out, int block_size, int slot) {
  const std::size_t base = out.size();
  out.resize(base + block_size, 0);
  out[base + std::clamp(slot, 0, block_size - 1)] = 1;
}

}  // namespace

std::span<const std::string_view> atom_category_vocabulary() { return kAtomCategories; }

int heavy_atom_count(const MolecularGraph& g) {
  return static_cast<int>(std::count_if(g.atoms().begin(), g.atoms().end(),
                                        [](const Atom& a) { return a.atomic_number != 1; }));
}

MolecularGraph murcko_scaffold(const MolecularGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<bool> removed(n, false);
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = g.degree(i);
  std::vector<int> lost_valence(n, 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (removed[i] || degree[i] > 1) continue;
      removed[i] = true;
      changed = true;
      for (const Neighbor& nb : g.neighbors(i)) {
        if (removed[nb.atom]) continue;
        --degree[nb.atom];
        lost_valence[nb.atom] += bond_valence(g.bond(nb.bond).order);
      }
    }
  }
  std::vector<int> drop;
  for (int i = 0; i < n; ++i) {
    if (removed[i]) drop.push_back(i);
  }
  MolecularGraph scaffold = g;
  // Hydrogens: neutral organic atoms written without brackets are refilled
  // from the valence table, others take the lost bond valence as hydrogens.
  for (int i = 0; i < n; ++i) {
    if (removed[i] || lost_valence[i] == 0) continue;
    Atom& a = scaffold.mutable_atom(i);
    const bool implicit = a.charge == 0 && in_organic_subset(a.symbol) &&
                          default_hydrogens(a, g.bond_valence_sum(i)) == a.hydrogens;
    if (implicit) {
      a.hydrogens = default_hydrogens(a, g.bond_valence_sum(i) - lost_valence[i]);
    } else {
      a.hydrogens += lost_valence[i];
    }
  }
  scaffold.remove_atoms(drop);
  for (std::size_t i = 0; i < scaffold.atom_count(); ++i) {
    Atom& a = scaffold.mutable_atom(static_cast<int>(i));
    a.atom_map = 0;
    a.chirality.clear();
    a.stereo_neighbors.clear();
  }
  for (std::size_t b = 0; b < scaffold.bond_count(); ++b) scaffold.mutable_bond(static_cast<int>(b)).direction = 0;
  scaffold.update_derived();
  return scaffold;
}

ScaffoldKey scaffold_key(const MolecularGraph& g) {
  const MolecularGraph scaffold = murcko_scaffold(g);
  ScaffoldKey key;
  key.ring_count = scaffold.empty() ? 0 : scaffold.cycle_rank();
  key.heavy_atoms = heavy_atom_count(scaffold);
  key.smiles = to_canonical_smiles(scaffold, CanonicalOptions{false, false});
  return key;
}

std::size_t Fingerprint::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true)); }

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> on;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) on.push_back(static_cast<int>(i));
  }
  return on;
}

Fingerprint circular_fingerprint(const MolecularGraph& g, int radius, int nbits) {
  Fingerprint fp;
  fp.radius = radius;
  fp.bits.assign(static_cast<std::size_t>(nbits), false);
  const int n = static_cast<int>(g.atom_count());
  // Radius 0 sees only the atom type; hydrogens and ring membership join the
  // environment from the first expansion on.
  std::vector<std::uint64_t> current(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    std::uint64_t h = mix(0x5eed, static_cast<std::uint64_t>(a.atomic_number));
    h = mix(h, static_cast<std::uint64_t>(a.charge + 16));
    h = mix(h, a.aromatic ? 1 : 0);
    current[i] = h;
    fp.bits[h % static_cast<std::uint64_t>(nbits)] = true;
  }
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> env;
      for (const Neighbor& nb : g.neighbors(i)) {
        env.emplace_back(static_cast<int>(g.bond(nb.bond).order), current[nb.atom]);
      }
      std::sort(env.begin(), env.end());
      std::uint64_t h = mix(current[i], static_cast<std::uint64_t>(r));
      h = mix(h, static_cast<std::uint64_t>(g.atom(i).hydrogens));
      h = mix(h, g.atom_in_ring(i) ? 1 : 0);
      for (const auto& [order, nbr] : env) h = mix(mix(h, static_cast<std::uint64_t>(order)), nbr);
      next[i] = h;
      fp.bits[h % static_cast<std::uint64_t>(nbits)] = true;
    }
    current = std::move(next);
  }
  return fp;
}

GraphFeatures featurize(const MolecularGraph& g) {
  GraphFeatures out;
  const int n = static_cast<int>(g.atom_count());
  out.atoms.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atom(i);
    AtomFeatures f;
    f.reserve(kAtomFeatureSize);
    const auto it = std::find(kAtomCategories.begin(), kAtomCategories.end() - 1, a.symbol);
    one_hot(f, 65, static_cast<int>(it - kAtomCategories.begin()));
    one_hot(f, 10, std::min(g.degree(i), 9));
    static constexpr std::array<int, 4> kCharges = {-1, 0, 1, 2};
    const auto ci = std::find(kCharges.begin(), kCharges.end(), a.charge);
    one_hot(f, 5, static_cast<int>(ci - kCharges.begin()));
    const int valence = total_valence(g, i);
    one_hot(f, 7, valence >= 0 && valence <= 5 ? valence : 6);
    one_hot(f, 5, std::min(a.hydrogens, 4));
    f.push_back(a.aromatic ? 1 : 0);
    one_hot(f, 5, static_cast<int>(g.hybridization(i)));
    out.atoms.push_back(std::move(f));
  }
  for (const Bond& b : g.bonds()) {
    BondFeatures f;
    f.reserve(kBondFeatureSize);
    one_hot(f, 4, static_cast<int>(b.order) - 1);
    f.push_back(b.conjugated ? 1 : 0);
    f.push_back(b.in_ring ? 1 : 0);
    out.bonds.push_back(std::move(f));
  }
  return out;
}

}  // namespace retro
