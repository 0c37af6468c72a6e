#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "retro/error.hpp"
#include "retro/templates.hpp"

namespace retro {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = text.find(sep, start);
    out.emplace_back(text.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::map<int, int> map_index(const MolecularGraph& g, const char* side) {
  std::map<int, int> out;
  for (int i = 0; i < static_cast<int>(g.atom_count()); ++i) {
    const int m = g.atom(i).atom_map;
    if (m == 0) continue;
    if (!out.emplace(m, i).second) {
      throw MappingError(std::string("atom map ") + std::to_string(m) + " used twice in " + side);
    }
  }
  return out;
}

// Bonds between mapped atoms keyed by the ordered map pair.
std::map<std::pair<int, int>, BondOrder> mapped_bonds(const MolecularGraph& g) {
  std::map<std::pair<int, int>, BondOrder> out;
  for (const Bond& b : g.bonds()) {
    const int a = g.atom(b.begin).atom_map;
    const int c = g.atom(b.end).atom_map;
    if (a == 0 || c == 0) continue;
    out[{std::min(a, c), std::max(a, c)}] = b.order;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string_view provenance_name(Provenance p) { return p == Provenance::kObserved ? "observed" : "enhanced"; }

Reaction parse_reaction(std::string_view text) {
  const std::vector<std::string> parts = split(text, '>');
  if (parts.size() != 3) throw FormatError("reaction SMILES needs two '>' separators: '" + std::string(text) + "'");
  if (parts[0].empty() || parts[2].empty()) throw FormatError("empty precursor or product side");
  Reaction r;
  r.precursors = split_components(parse_smiles(parts[0]));
  r.product = parse_smiles(parts[2]);
  return r;
}

std::string reaction_smiles(const Reaction& r) {
  std::string lhs;
  for (const MolecularGraph& p : r.precursors) {
    if (!lhs.empty()) lhs += '.';
    lhs += to_canonical_smiles(p, true);
  }
  return lhs + ">>" + to_canonical_smiles(r.product, true);
}

MolecularGraph combined_precursors(const Reaction& r) {
  MolecularGraph out;
  for (const MolecularGraph& p : r.precursors) append_graph(out, p);
  out.update_derived();
  return out;
}

std::string molecule_key(const MolecularGraph& g) { return to_canonical_smiles(g, CanonicalOptions{false, false}); }

std::string precursor_set_key(const Reaction& r) {
  std::set<int> product_maps;
  for (const Atom& a : r.product.atoms()) {
    if (a.atom_map != 0) product_maps.insert(a.atom_map);
  }
  MolecularGraph kept;
  for (const MolecularGraph& p : r.precursors) {
    const bool contributes = std::any_of(p.atoms().begin(), p.atoms().end(),
                                         [&](const Atom& a) { return product_maps.count(a.atom_map) > 0; });
    if (contributes || product_maps.empty()) append_graph(kept, p);
  }
  kept.update_derived();
  return molecule_key(kept);
}

std::string product_key(const Reaction& r) { return molecule_key(r.product); }

std::vector<Reaction> read_corpus(const std::filesystem::path& path, std::vector<RejectedLine>* rejected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus " + path.string());
  std::vector<Reaction> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> cols = split(line, '\t');
    if (number == 1 && (cols.size() < 3 || cols[2].find('>') == std::string::npos)) continue;  // header
    try {
      if (cols.size() < 3) throw FormatError("expected at least 3 tab-separated columns");
      Reaction r = parse_reaction(cols[2]);
      r.id = cols[0];
      if (!cols[1].empty()) {
        try {
          r.reaction_class = std::stoi(cols[1]);
        } catch (const std::exception&) {
          throw FormatError("bad reaction class '" + cols[1] + "'");
        }
      }
      if (cols.size() > 3 && cols[3] == "enhanced") r.provenance = Provenance::kEnhanced;
      if (cols.size() > 4) r.template_id = cols[4];
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (!rejected) {
        throw FormatError(path.string() + ":" + std::to_string(number) + ": " + e.what());
      }
      rejected->push_back({number, cols.empty() ? "" : cols[0], e.what()});
    }
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const Reaction> reactions, bool with_provenance) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Reaction& r : reactions) {
    out << r.id << '\t' << (r.reaction_class ? std::to_string(*r.reaction_class) : "") << '\t'
        << reaction_smiles(r);
    if (with_provenance) out << '\t' << provenance_name(r.provenance) << '\t' << r.template_id;
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

ReactionCenter detect_reaction_center(const Reaction& r) {
  const MolecularGraph pre = combined_precursors(r);
  const std::map<int, int> pre_maps = map_index(pre, "precursors");
  const std::map<int, int> prod_maps = map_index(r.product, "product");
  for (const auto& [m, idx] : prod_maps) {
    if (!pre_maps.count(m)) throw MappingError("product map " + std::to_string(m) + " has no precursor atom");
  }

  ReactionCenter c;
  const auto pre_bonds = mapped_bonds(pre);
  const auto prod_bonds = mapped_bonds(r.product);
  for (const auto& [key, order] : prod_bonds) {
    const auto it = pre_bonds.find(key);
    if (it == pre_bonds.end()) {
      c.changed_bonds.insert({key.first, key.second, BondChange::kFormed});
    } else if (it->second != order) {
      c.changed_bonds.insert({key.first, key.second, BondChange::kOrderChanged});
    }
  }
  for (const auto& [key, order] : pre_bonds) {
    if (!prod_bonds.count(key)) c.changed_bonds.insert({key.first, key.second, BondChange::kBroken});
  }
  for (const auto& [m, idx] : prod_maps) {
    const Atom& a = r.product.atom(idx);
    const Atom& b = pre.atom(pre_maps.at(m));
    if (a.hydrogens != b.hydrogens || a.charge != b.charge) c.changed_atoms.insert(m);
  }
  for (const ChangedBond& b : c.changed_bonds) {
    c.center_maps.insert(b.map_a);
    c.center_maps.insert(b.map_b);
  }
  c.center_maps.insert(c.changed_atoms.begin(), c.changed_atoms.end());
  return c;
}

}  // namespace retro
