#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "retro/error.hpp"
#include "retro/templates.hpp"

namespace retro {

namespace {

using MapPair = std::pair<int, int>;

std::string element_text(const Atom& a) {
  std::string s = a.symbol;
  if (a.aromatic) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

std::string plain_charge(int c) {
  if (c == 0) return {};
  const std::string sign = c > 0 ? "+" : "-";
  return std::abs(c) == 1 ? sign : sign + std::to_string(std::abs(c));
}

bool is_center(const PatternGraph& p, int i) {
  return p.graph.atom(i).atom_map != 0 && (p.queries[i].match_hydrogens || p.queries[i].degree >= 0);
}

// Pattern token: centre atoms carry H, degree and charge primitives, other
// mapped atoms element and charge only, leaving-group atoms (map 0) a full
// bracket atom.
std::string pattern_token(const PatternGraph& p, int i, int map) {
  const Atom& a = p.graph.atom(i);
  std::string t = "[" + element_text(a);
  if (a.atom_map == 0) {
    if (a.hydrogens > 0) t += "H" + (a.hydrogens > 1 ? std::to_string(a.hydrogens) : std::string());
    return t + plain_charge(a.charge) + "]";
  }
  if (is_center(p, i)) {
    const AtomQuery& q = p.queries[i];
    if (q.match_hydrogens) t += ";H" + std::to_string(a.hydrogens);
    if (q.degree >= 0) t += ";D" + std::to_string(q.degree);
    t += a.charge == 0 ? std::string(";+0") : ";" + plain_charge(a.charge) + (std::abs(a.charge) == 1 ? "1" : "");
  } else {
    t += plain_charge(a.charge);
  }
  return t + ":" + std::to_string(map) + "]";
}

std::map<int, int> pattern_maps(const PatternGraph& p) {
  std::map<int, int> out;
  for (int i = 0; i < static_cast<int>(p.graph.atom_count()); ++i) {
    if (p.graph.atom(i).atom_map != 0) out[p.graph.atom(i).atom_map] = i;
  }
  return out;
}

std::map<MapPair, BondOrder> mapped_pattern_bonds(const PatternGraph& p) {
  std::map<MapPair, BondOrder> out;
  for (const Bond& b : p.graph.bonds()) {
    const int a = p.graph.atom(b.begin).atom_map;
    const int c = p.graph.atom(b.end).atom_map;
    if (a != 0 && c != 0) out[{std::min(a, c), std::max(a, c)}] = b.order;
  }
  return out;
}

std::string write_pattern(const PatternGraph& p, const std::map<int, int>& renumber) {
  const int n = static_cast<int>(p.graph.atom_count());
  std::vector<std::string> tokens(n);
  for (int i = 0; i < n; ++i) {
    const int m = p.graph.atom(i).atom_map;
    tokens[i] = pattern_token(p, i, m == 0 ? 0 : renumber.at(m));
  }
  std::vector<int> labels(p.graph.bond_count());
  for (std::size_t b = 0; b < labels.size(); ++b) labels[b] = static_cast<int>(p.graph.bond(static_cast<int>(b)).order);
  const std::vector<int> ranks = canonical_ranks(p.graph, tokens, labels);
  WriterOptions options;
  options.keep_stereo = false;
  options.token = [&tokens](const MolecularGraph&, int i) { return tokens[i]; };
  return write_smiles(p.graph, ranks, options);
}

// Maps are renumbered 1..n following canonical ranks of the combined
// reaction graph (mapped atoms merged across sides, leaving atoms added),
// so the string does not depend on the input numbering.
std::string canonical_from_patterns(const PatternGraph& prod, const PatternGraph& pre) {
  const std::map<int, int> prod_idx = pattern_maps(prod);
  const std::map<int, int> pre_idx = pattern_maps(pre);
  MolecularGraph combo;
  std::vector<std::string> invariants;
  std::map<int, int> node_of_map;
  for (const auto& [m, i] : prod_idx) {
    node_of_map[m] = combo.add_atom(Atom{});
    invariants.push_back("m" + pattern_token(prod, i, 0) + "/" + pattern_token(pre, pre_idx.at(m), 0));
  }
  std::vector<int> node_of_pre(pre.graph.atom_count(), -1);
  for (int i = 0; i < static_cast<int>(pre.graph.atom_count()); ++i) {
    const int m = pre.graph.atom(i).atom_map;
    if (m != 0) {
      node_of_pre[i] = node_of_map.at(m);
    } else {
      node_of_pre[i] = combo.add_atom(Atom{});
      invariants.push_back("l" + pattern_token(pre, i, 0));
    }
  }
  std::map<MapPair, std::pair<int, int>> orders;
  for (const Bond& b : prod.graph.bonds()) {
    const int u = node_of_map.at(prod.graph.atom(b.begin).atom_map);
    const int v = node_of_map.at(prod.graph.atom(b.end).atom_map);
    orders[{std::min(u, v), std::max(u, v)}].first = static_cast<int>(b.order);
  }
  for (const Bond& b : pre.graph.bonds()) {
    const int u = node_of_pre[b.begin];
    const int v = node_of_pre[b.end];
    orders[{std::min(u, v), std::max(u, v)}].second = static_cast<int>(b.order);
  }
  std::vector<int> labels;
  for (const auto& [key, o] : orders) {
    combo.add_bond(key.first, key.second, BondOrder::kSingle);
    labels.push_back(o.first * 8 + o.second);
  }
  const std::vector<int> ranks = canonical_ranks(combo, invariants, labels);
  std::vector<std::pair<int, int>> by_rank;  // (rank, old map)
  for (const auto& [m, node] : node_of_map) by_rank.emplace_back(ranks[node], m);
  std::sort(by_rank.begin(), by_rank.end());
  std::map<int, int> renumber;
  for (std::size_t k = 0; k < by_rank.size(); ++k) renumber[by_rank[k].second] = static_cast<int>(k) + 1;
  return write_pattern(pre, renumber) + ">>" + write_pattern(prod, renumber);
}

std::vector<PatternGraph> split_pattern(const PatternGraph& p) {
  const std::vector<int> labels = p.graph.component_labels();
  const int count = p.graph.component_count();
  std::vector<PatternGraph> out(count);
  std::vector<int> local(p.graph.atom_count());
  for (int i = 0; i < static_cast<int>(p.graph.atom_count()); ++i) {
    local[i] = out[labels[i]].graph.add_atom(p.graph.atom(i));
    out[labels[i]].queries.push_back(p.queries[i]);
  }
  for (const Bond& b : p.graph.bonds()) out[labels[b.begin]].graph.add_bond(local[b.begin], local[b.end], b.order);
  for (PatternGraph& part : out) part.graph.update_derived();
  return out;
}

PatternGraph join_patterns(std::span<const PatternGraph> parts) {
  PatternGraph out;
  for (const PatternGraph& p : parts) {
    append_graph(out.graph, p.graph);
    out.queries.insert(out.queries.end(), p.queries.begin(), p.queries.end());
  }
  out.graph.update_derived();
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---- subgraph matching ------------------------------------------------------

class Embedder {
 public:
  Embedder(const PatternGraph& pattern, const MolecularGraph& mol, int limit)
      : p_(pattern), g_(mol), limit_(limit) {
    plan();
  }

  std::vector<std::vector<int>> run() {
    assign_.assign(p_.graph.atom_count(), -1);
    used_.assign(g_.atom_count(), false);
    if (!order_.empty() && g_.atom_count() > 0) extend(0);
    return std::move(found_);
  }

 private:
  // Visit order: breadth first per pattern component, starting from a
  // constrained atom; parent_ is the earlier neighbour used to seed candidates.
  void plan() {
    const int n = static_cast<int>(p_.graph.atom_count());
    std::vector<bool> seen(n, false);
    std::vector<int> starts(n);
    for (int i = 0; i < n; ++i) starts[i] = i;
    std::stable_sort(starts.begin(), starts.end(), [this](int a, int b) { return weight(a) > weight(b); });
    for (int s : starts) {
      if (seen[s]) continue;
      std::queue<int> q;
      q.push(s);
      seen[s] = true;
      parent_.push_back(-1);
      order_.push_back(s);
      while (!q.empty()) {
        const int v = q.front();
        q.pop();
        for (const Neighbor& nb : p_.graph.neighbors(v)) {
          if (seen[nb.atom]) continue;
          seen[nb.atom] = true;
          order_.push_back(nb.atom);
          parent_.push_back(v);
          q.push(nb.atom);
        }
      }
    }
  }

  int weight(int i) const {
    return (p_.queries[i].degree >= 0 ? 2 : 0) + (p_.queries[i].match_hydrogens ? 1 : 0) +
           (p_.graph.atom(i).atomic_number != 6 ? 4 : 0);
  }

  bool atom_ok(int pi, int mi) const {
    const Atom& pa = p_.graph.atom(pi);
    const Atom& ma = g_.atom(mi);
    if (pa.atomic_number != ma.atomic_number || pa.aromatic != ma.aromatic || pa.charge != ma.charge) return false;
    const AtomQuery& q = p_.queries[pi];
    if (q.match_hydrogens && pa.hydrogens != ma.hydrogens) return false;
    if (q.degree >= 0 && g_.degree(mi) != q.degree) return false;
    return true;
  }

  bool bonds_ok(int pi, int mi) const {
    for (const Neighbor& nb : p_.graph.neighbors(pi)) {
      const int other = assign_[nb.atom];
      if (other < 0) continue;
      const auto b = g_.bond_between(mi, other);
      if (!b || g_.bond(*b).order != p_.graph.bond(nb.bond).order) return false;
    }
    return true;
  }

  void try_atom(std::size_t depth, int pi, int mi) {
    if (used_[mi] || !atom_ok(pi, mi) || !bonds_ok(pi, mi)) return;
    assign_[pi] = mi;
    used_[mi] = true;
    extend(depth + 1);
    assign_[pi] = -1;
    used_[mi] = false;
  }

  void extend(std::size_t depth) {
    if (static_cast<int>(found_.size()) >= limit_) return;
    if (depth == order_.size()) {
      found_.push_back(assign_);
      return;
    }
    const int pi = order_[depth];
    if (parent_[depth] < 0) {
      for (int mi = 0; mi < static_cast<int>(g_.atom_count()); ++mi) try_atom(depth, pi, mi);
    } else {
      for (const Neighbor& nb : g_.neighbors(assign_[parent_[depth]])) try_atom(depth, pi, nb.atom);
    }
  }

  const PatternGraph& p_;
  const MolecularGraph& g_;
  int limit_;
  std::vector<int> order_;
  std::vector<int> parent_;
  std::vector<int> assign_;
  std::vector<bool> used_;
  std::vector<std::vector<int>> found_;
};

bool aromatic_outside_ring(const MolecularGraph& g) {
  for (int i = 0; i < static_cast<int>(g.atom_count()); ++i) {
    if (g.atom(i).aromatic && !g.atom_in_ring(i)) return true;
  }
  for (const Bond& b : g.bonds()) {
    if (b.order == BondOrder::kAromatic && !b.in_ring) return true;
  }
  return false;
}

struct Rewriter {
  const PatternGraph& prod;
  const PatternGraph& pre;
  const MolecularGraph& mol;
  std::map<int, int> prod_idx = pattern_maps(prod);
  std::map<int, int> pre_idx = pattern_maps(pre);
  std::map<MapPair, BondOrder> prod_bonds = mapped_pattern_bonds(prod);
  std::map<MapPair, BondOrder> pre_bonds = mapped_pattern_bonds(pre);

  // Precursor graph for one embedding, or nullopt when the rewrite is invalid.
  std::optional<MolecularGraph> rewrite(const std::vector<int>& emb) const {
    MolecularGraph out = mol;
    clear_stereo(out);
    for (int i = 0; i < static_cast<int>(out.atom_count()); ++i) out.mutable_atom(i).atom_map = i + 1;
    std::map<int, int> at;
    for (const auto& [m, i] : prod_idx) at[m] = emb[i];

    std::vector<int> doomed;
    for (const auto& [key, order] : prod_bonds) {
      const int b = *out.bond_between(at.at(key.first), at.at(key.second));
      const auto it = pre_bonds.find(key);
      if (it == pre_bonds.end()) {
        doomed.push_back(b);
      } else if (it->second != order) {
        out.mutable_bond(b).order = it->second;
      }
    }
    std::sort(doomed.rbegin(), doomed.rend());
    for (int b : doomed) out.remove_bond(b);
    for (const auto& [key, order] : pre_bonds) {
      if (prod_bonds.count(key)) continue;
      const int u = at.at(key.first);
      const int v = at.at(key.second);
      if (out.bond_between(u, v)) return std::nullopt;
      out.add_bond(u, v, order);
    }
    for (const auto& [m, pi] : prod_idx) {
      const int ri = pre_idx.at(m);
      if (!is_center(prod, pi)) continue;
      Atom& a = out.mutable_atom(at.at(m));
      const Atom& pa = prod.graph.atom(pi);
      const Atom& ra = pre.graph.atom(ri);
      a.charge = ra.charge;
      a.aromatic = ra.aromatic;
      a.hydrogens += ra.hydrogens - pa.hydrogens;
      if (a.hydrogens < 0) return std::nullopt;
    }
    std::vector<int> placed(pre.graph.atom_count(), -1);
    for (int i = 0; i < static_cast<int>(pre.graph.atom_count()); ++i) {
      const Atom& ra = pre.graph.atom(i);
      if (ra.atom_map != 0) {
        placed[i] = at.at(ra.atom_map);
        continue;
      }
      Atom leaving = ra;
      leaving.atom_map = 0;
      leaving.chirality.clear();
      leaving.stereo_neighbors.clear();
      placed[i] = out.add_atom(std::move(leaving));
    }
    for (const Bond& b : pre.graph.bonds()) {
      if (pre.graph.atom(b.begin).atom_map != 0 && pre.graph.atom(b.end).atom_map != 0) continue;
      out.add_bond(placed[b.begin], placed[b.end], b.order);
    }
    out.update_derived();
    if (!valence_violation(out).empty() || aromatic_outside_ring(out)) return std::nullopt;
    return out;
  }
};

}  // namespace

// ---- extraction -------------------------------------------------------------

Template extract_template(const Reaction& r, int radius) {
  if (radius < 0) throw std::invalid_argument("radius must be non-negative");
  const ReactionCenter center = detect_reaction_center(r);
  const MolecularGraph pre = combined_precursors(r);
  const MolecularGraph& prod = r.product;

  std::map<int, int> prod_idx;
  for (int i = 0; i < static_cast<int>(prod.atom_count()); ++i) {
    const int m = prod.atom(i).atom_map;
    if (m == 0) throw MappingError("unmapped product atom " + std::to_string(i));
    prod_idx[m] = i;
  }
  std::map<int, int> pre_idx;
  std::vector<bool> leaving(pre.atom_count());
  for (int i = 0; i < static_cast<int>(pre.atom_count()); ++i) {
    const int m = pre.atom(i).atom_map;
    leaving[i] = m == 0 || !prod_idx.count(m);
    if (!leaving[i]) pre_idx[m] = i;
  }

  // Anchors: centre maps present in the product plus atoms where a leaving
  // group was attached.
  std::set<int> anchors;
  for (int m : center.center_maps) {
    if (prod_idx.count(m)) anchors.insert(m);
  }
  for (const auto& [m, i] : pre_idx) {
    for (const Neighbor& nb : pre.neighbors(i)) {
      if (leaving[nb.atom]) anchors.insert(m);
    }
  }
  if (anchors.empty()) throw CenterError("reaction " + r.id + " has an empty reaction centre");

  std::vector<int> dist(prod.atom_count(), -1);
  std::queue<int> q;
  for (int m : anchors) {
    dist[prod_idx.at(m)] = 0;
    q.push(prod_idx.at(m));
  }
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    if (dist[v] == radius) continue;
    for (const Neighbor& nb : prod.neighbors(v)) {
      if (dist[nb.atom] >= 0) continue;
      dist[nb.atom] = dist[v] + 1;
      q.push(nb.atom);
    }
  }
  std::vector<int> prod_atoms;
  for (int i = 0; i < static_cast<int>(prod.atom_count()); ++i) {
    if (dist[i] >= 0) prod_atoms.push_back(i);
  }

  PatternGraph prod_pattern;
  prod_pattern.graph = prod.induced_subgraph(prod_atoms);
  for (int i : prod_atoms) {
    AtomQuery query;
    if (anchors.count(prod.atom(i).atom_map)) {
      query.match_hydrogens = true;
      query.degree = prod.degree(i);
    }
    prod_pattern.queries.push_back(query);
  }

  // Precursor side: the same mapped atoms plus leaving-group components
  // touching them.
  std::vector<int> pre_atoms;
  std::vector<bool> taken(pre.atom_count(), false);
  for (int i : prod_atoms) {
    const int j = pre_idx.at(prod.atom(i).atom_map);
    pre_atoms.push_back(j);
    taken[j] = true;
  }
  for (std::size_t k = 0; k < pre_atoms.size(); ++k) {
    const int v = pre_atoms[k];
    for (const Neighbor& nb : pre.neighbors(v)) {
      if (taken[nb.atom] || !leaving[nb.atom]) continue;
      if (!leaving[v] && !anchors.count(pre.atom(v).atom_map)) continue;
      taken[nb.atom] = true;
      pre_atoms.push_back(nb.atom);
    }
  }
  PatternGraph pre_pattern;
  pre_pattern.graph = pre.induced_subgraph(pre_atoms);
  for (std::size_t k = 0; k < pre_atoms.size(); ++k) {
    const int j = pre_atoms[k];
    AtomQuery query;
    if (leaving[j]) {
      pre_pattern.graph.mutable_atom(static_cast<int>(k)).atom_map = 0;
    } else if (anchors.count(pre.atom(j).atom_map)) {
      query.match_hydrogens = true;
      query.degree = pre.degree(j);
    }
    pre_pattern.queries.push_back(query);
  }
  Template t = parse_template(canonical_from_patterns(prod_pattern, pre_pattern), radius);
  for (int i : prod_atoms) t.source_product_maps.push_back(prod.atom(i).atom_map);
  std::sort(t.source_product_maps.begin(), t.source_product_maps.end());
  return t;
}

Template parse_template(std::string_view canonical, int radius) {
  const std::size_t arrow = canonical.find(">>");
  if (arrow == std::string_view::npos || canonical.find('>', arrow + 2) != std::string_view::npos) {
    throw FormatError("template needs exactly one '>>': '" + std::string(canonical) + "'");
  }
  PatternGraph pre;
  PatternGraph prod;
  try {
    pre = parse_pattern(canonical.substr(0, arrow));
    prod = parse_pattern(canonical.substr(arrow + 2));
  } catch (const SyntaxError& e) {
    throw FormatError(std::string("bad template pattern: ") + e.what());
  }
  std::set<int> prod_maps;
  for (const Atom& a : prod.graph.atoms()) {
    if (a.atom_map == 0) throw FormatError("unmapped atom in template product pattern");
    if (!prod_maps.insert(a.atom_map).second) throw FormatError("repeated map in template product pattern");
  }
  std::set<int> pre_maps;
  for (const Atom& a : pre.graph.atoms()) {
    if (a.atom_map != 0 && !pre_maps.insert(a.atom_map).second) {
      throw FormatError("repeated map in template precursor pattern");
    }
  }
  if (pre_maps != prod_maps) throw FormatError("template maps differ between sides");

  Template t;
  t.radius = radius;
  t.canonical_string = canonical_from_patterns(prod, pre);
  t.template_id = template_id_for(t.canonical_string, radius);
  t.product_pattern = std::move(prod);
  t.precursor_patterns = split_pattern(pre);
  return t;
}

std::string canonical_template_string(const Template& t) {
  return canonical_from_patterns(t.product_pattern, join_patterns(t.precursor_patterns));
}

std::string template_id_for(std::string_view canonical, int radius) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::uint64_t h = fnv1a(canonical);
  std::string hex(16, '0');
  for (int k = 15; k >= 0; --k) {
    hex[k] = kHex[h & 0xf];
    h >>= 4;
  }
  return "r" + std::to_string(radius) + "_" + hex;
}

// ---- application ------------------------------------------------------------

std::vector<TemplateOutcome> apply_template_detailed(const Template& t, const MolecularGraph& product,
                                                     const ApplyOptions& options) {
  const PatternGraph pre = join_patterns(t.precursor_patterns);
  const std::vector<std::vector<int>> embeddings = Embedder(t.product_pattern, product, options.max_matches).run();
  const Rewriter rewriter{t.product_pattern, pre, product};
  std::map<std::string, TemplateOutcome> outcomes;
  for (const std::vector<int>& emb : embeddings) {
    std::optional<MolecularGraph> g = rewriter.rewrite(emb);
    if (!g) continue;
    std::string key = molecule_key(*g);
    if (outcomes.count(key)) continue;
    try {
      parse_smiles(key);
    } catch (const Error&) {
      continue;
    }
    TemplateOutcome out;
    out.precursors = key;
    out.mapped_precursors = std::move(*g);
    out.mapped_product = product;
    clear_stereo(out.mapped_product);
    for (int i = 0; i < static_cast<int>(product.atom_count()); ++i) out.mapped_product.mutable_atom(i).atom_map = i + 1;
    outcomes.emplace(std::move(key), std::move(out));
  }
  if (options.strict && !embeddings.empty() && outcomes.empty()) {
    throw RewriteError("template " + t.template_id + " embeds but every rewrite is invalid");
  }
  std::vector<TemplateOutcome> result;
  result.reserve(outcomes.size());
  for (auto& [key, out] : outcomes) result.push_back(std::move(out));
  return result;
}

std::vector<std::string> apply_template(const Template& t, const MolecularGraph& product,
                                        const ApplyOptions& options) {
  std::vector<std::string> keys;
  for (TemplateOutcome& o : apply_template_detailed(t, product, options)) keys.push_back(std::move(o.precursors));
  return keys;
}

bool template_matches(const Template& t, const MolecularGraph& product) {
  return !Embedder(t.product_pattern, product, 1).run().empty();
}

// ---- corpus assignment --------------------------------------------------------

const Template* TemplateAssignment::find(std::string_view template_id) const {
  for (const Template& t : table) {
    if (t.template_id == template_id) return &t;
  }
  return nullptr;
}

TemplateAssignment assign_corpus_templates(std::span<const Reaction> corpus, int radius) {
  TemplateAssignment out;
  out.radius = radius;
  std::map<std::string, Template> by_string;
  std::map<std::string, std::string> string_of;  // reaction id -> canonical string
  for (const Reaction& r : corpus) {
    if (string_of.count(r.id)) {
      out.skipped.push_back({r.id, "duplicate reaction id"});
      continue;
    }
    try {
      Template t = extract_template(r, radius);
      string_of[r.id] = t.canonical_string;
      auto [it, fresh] = by_string.try_emplace(t.canonical_string, std::move(t));
      ++it->second.frequency;
    } catch (const Error& e) {
      out.skipped.push_back({r.id, e.what()});
    }
  }
  std::map<std::string, std::string> id_owner;
  for (auto& [s, t] : by_string) {
    const auto [it, fresh] = id_owner.emplace(t.template_id, s);
    if (!fresh) throw Error("template id collision for " + t.template_id);
    out.table.push_back(std::move(t));
  }
  std::stable_sort(out.table.begin(), out.table.end(), [](const Template& a, const Template& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.canonical_string < b.canonical_string;
  });
  for (const auto& [id, s] : string_of) out.template_of[id] = template_id_for(s, radius);
  return out;
}

void write_template_table(const std::filesystem::path& path, std::span<const Template> table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "template_id\tradius\tcanonical_string\tfrequency\n";
  for (const Template& t : table) {
    out << t.template_id << '\t' << t.radius << '\t' << t.canonical_string << '\t' << t.frequency << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Template> read_template_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<Template> out;
  std::string line;
  std::getline(in, line);  // header
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, radius, canonical, frequency;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, radius, '\t') || !std::getline(ss, canonical, '\t') ||
        !std::getline(ss, frequency, '\t')) {
      throw FormatError(path.string() + ":" + std::to_string(number) + ": expected 4 columns");
    }
    try {
      Template t = parse_template(canonical, std::stoi(radius));
      t.template_id = id;
      t.frequency = std::stoi(frequency);
      out.push_back(std::move(t));
    } catch (const std::invalid_argument&) {
      throw FormatError(path.string() + ":" + std::to_string(number) + ": bad number");
    }
  }
  return out;
}

void write_assignments(const std::filesystem::path& path, const std::map<std::string, std::string>& template_of) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "reaction_id\ttemplate_id\n";
  for (const auto& [r, t] : template_of) out << r << '\t' << t << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::map<std::string, std::string> read_assignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) continue;
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

}  // namespace retro
