#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "retro/enhance.hpp"
#include "retro/error.hpp"

namespace retro {

namespace {

void insert_sorted(std::vector<int>& v, int x) {
  const auto it = std::lower_bound(v.begin(), v.end(), x);
  if (it == v.end() || *it != x) v.insert(it, x);
}

}  // namespace

std::string_view edge_label_name(EdgeLabel label) {
  switch (label) {
    case EdgeLabel::kGt:
      return "gt";
    case EdgeLabel::kCandidate:
      return "candidate";
    case EdgeLabel::kEnhanced:
      return "enhanced";
  }
  return "candidate";
}

int BipartiteGraph::add_molecule(std::string id) {
  const auto [it, fresh] = molecule_index_.emplace(id, static_cast<int>(molecule_ids_.size()));
  if (fresh) {
    molecule_ids_.push_back(std::move(id));
    templates_of_.emplace_back();
  }
  return it->second;
}

int BipartiteGraph::add_template(std::string id) {
  const auto [it, fresh] = template_index_.emplace(id, static_cast<int>(template_ids_.size()));
  if (fresh) {
    template_ids_.push_back(std::move(id));
    molecules_of_.emplace_back();
  }
  return it->second;
}

void BipartiteGraph::add_edge(EdgeRef e, EdgeLabel label) {
  if (e.m < 0 || e.t < 0 || e.m >= static_cast<int>(molecule_count()) || e.t >= static_cast<int>(template_count())) {
    throw MissingEdge("edge endpoint out of range");
  }
  const auto [it, fresh] = labels_.emplace(e, label);
  if (!fresh) {
    if (label == EdgeLabel::kGt) it->second = EdgeLabel::kGt;
    return;
  }
  insert_sorted(templates_of_[e.m], e.t);
  insert_sorted(molecules_of_[e.t], e.m);
}

std::optional<int> BipartiteGraph::find_molecule(const std::string& id) const {
  const auto it = molecule_index_.find(id);
  if (it == molecule_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> BipartiteGraph::find_template(const std::string& id) const {
  const auto it = template_index_.find(id);
  if (it == template_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeLabel> BipartiteGraph::label(EdgeRef e) const {
  const auto it = labels_.find(e);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<EdgeRef> BipartiteGraph::edges() const {
  std::vector<EdgeRef> out;
  out.reserve(labels_.size());
  for (const auto& [e, label] : labels_) out.push_back(e);
  return out;
}

std::vector<EdgeRef> BipartiteGraph::gt_edges() const {
  std::vector<EdgeRef> out;
  for (const auto& [e, label] : labels_) {
    if (label == EdgeLabel::kGt) out.push_back(e);
  }
  return out;
}

BipartiteGraph BipartiteGraph::empty_copy() const {
  BipartiteGraph g;
  for (const std::string& id : molecule_ids_) g.add_molecule(id);
  for (const std::string& id : template_ids_) g.add_template(id);
  return g;
}

EnhanceData build_bipartite_graph(std::span<const Reaction> corpus, const TemplateAssignment& assignment) {
  if (assignment.radius < 1) throw FormatError("enhancement needs retro templates (radius >= 1)");
  EnhanceData data;
  std::map<std::string, int> frequency;
  std::vector<std::pair<std::string, std::string>> observed;  // product key, template id
  for (const Reaction& r : corpus) {
    const auto it = assignment.template_of.find(r.id);
    if (it == assignment.template_of.end()) continue;
    const std::string key = product_key(r);
    const std::size_t before = data.graph.molecule_count();
    data.graph.add_molecule(key);
    if (data.graph.molecule_count() > before) {
      MolecularGraph product = r.product;
      clear_maps(product);
      data.products.push_back(std::move(product));
    }
    ++frequency[it->second];
    observed.emplace_back(key, it->second);
  }
  // only templates observed in this corpus become nodes, in table order
  for (const Template& t : assignment.table) {
    const auto f = frequency.find(t.template_id);
    if (f == frequency.end()) continue;
    data.graph.add_template(t.template_id);
    data.templates.push_back(t);
    data.template_frequency.push_back(f->second);
  }
  for (const auto& [key, tid] : observed) {
    data.graph.add_edge({*data.graph.find_molecule(key), *data.graph.find_template(tid)}, EdgeLabel::kGt);
  }
  for (int m = 0; m < static_cast<int>(data.graph.molecule_count()); ++m) {
    for (int t = 0; t < static_cast<int>(data.graph.template_count()); ++t) {
      data.graph.add_edge({m, t}, EdgeLabel::kCandidate);
    }
  }
  return data;
}

StageAResult stage_a_filter(const EnhanceData& data, const ApplyOptions& options) {
  StageAResult out;
  out.filtered = data.graph.empty_copy();
  for (const EdgeRef& e : data.graph.edges()) {
    const bool gt = data.graph.label(e) == EdgeLabel::kGt;
    const Template& t = data.templates[e.t];
    const MolecularGraph& product = data.products[e.m];
    std::vector<std::string> outcomes;
    if (template_matches(t, product)) outcomes = apply_template(t, product, options);
    if (!outcomes.empty()) {
      out.first_outcome[e] = outcomes.front();
      out.filtered.add_edge(e, gt ? EdgeLabel::kGt : EdgeLabel::kCandidate);
    } else if (gt) {
      out.gt_failures.push_back(e);
      out.filtered.add_edge(e, EdgeLabel::kGt);
    } else {
      out.failed.push_back(e);
    }
  }
  return out;
}

SubgraphSample khop_subgraph(const BipartiteGraph& g, EdgeRef seed, int hops) {
  if (!g.has_edge(seed)) {
    throw MissingEdge("seed edge (" + std::to_string(seed.m) + ", " + std::to_string(seed.t) + ") is not in the graph");
  }
  if (hops < 1) throw MissingEdge("hop count must be at least 1");
  std::vector<int> m_rim = {seed.m}, t_rim = {seed.t};
  for (int k = 0; k < hops; ++k) {
    std::set<int> next_m, next_t;
    for (int t : t_rim) next_m.insert(g.molecules_of(t).begin(), g.molecules_of(t).end());
    for (int m : m_rim) next_t.insert(g.templates_of(m).begin(), g.templates_of(m).end());
    m_rim.assign(next_m.begin(), next_m.end());
    t_rim.assign(next_t.begin(), next_t.end());
  }
  SubgraphSample s;
  s.seed = seed;
  s.hops = hops;
  for (int m : m_rim) {
    for (int t : g.templates_of(m)) {
      if (!std::binary_search(t_rim.begin(), t_rim.end(), t)) continue;
      (g.label({m, t}) == EdgeLabel::kGt ? s.positives : s.negatives).push_back({m, t});
    }
  }
  s.molecules = std::move(m_rim);
  s.templates = std::move(t_rim);
  return s;
}

void truncate_negatives(SubgraphSample& s, int cutoff, const BipartiteGraph& g,
                        std::span<const int> template_frequency) {
  if (cutoff < 0 || s.negatives.size() <= static_cast<std::size_t>(cutoff)) return;
  auto key = [&](const EdgeRef& e) {
    return std::make_tuple(e.m != s.seed.m, -template_frequency[e.t], std::cref(g.template_id(e.t)), e.m);
  };
  std::stable_sort(s.negatives.begin(), s.negatives.end(),
                   [&](const EdgeRef& a, const EdgeRef& b) { return key(a) < key(b); });
  s.negatives.resize(static_cast<std::size_t>(cutoff));
  std::sort(s.negatives.begin(), s.negatives.end());
}

SandwichReport check_sandwich(const BipartiteGraph& full, const BipartiteGraph& filtered,
                              std::span<const EdgeRef> enhanced, int n) {
  SandwichReport r;
  const std::set<EdgeRef> enh(enhanced.begin(), enhanced.end());
  const std::vector<EdgeRef> gt = full.gt_edges();
  r.gt_in_enhanced = std::all_of(gt.begin(), gt.end(), [&](const EdgeRef& e) { return enh.count(e) > 0; });
  r.enhanced_in_filtered = std::all_of(enh.begin(), enh.end(), [&](const EdgeRef& e) { return filtered.has_edge(e); });
  const std::vector<EdgeRef> kept = filtered.edges();
  r.filtered_in_full = std::all_of(kept.begin(), kept.end(), [&](const EdgeRef& e) { return full.has_edge(e); });
  r.within_bound = enh.size() <= static_cast<std::size_t>(n + 1) * gt.size();
  r.detail = "|E_gt|=" + std::to_string(gt.size()) + " |E_enh|=" + std::to_string(enh.size()) +
             " |E'_enh|=" + std::to_string(kept.size()) + " |E_full|=" + std::to_string(full.edge_count());
  return r;
}

void write_edge_list(const std::filesystem::path& path, const BipartiteGraph& g, std::span<const EdgeRef> edges,
                     EdgeLabel non_gt_label, const std::map<EdgeRef, double>* energy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "m_id\tt_id\tlabel\tenergy\n";
  char buffer[32];
  for (const EdgeRef& e : edges) {
    const EdgeLabel label = g.label(e) == EdgeLabel::kGt ? EdgeLabel::kGt : non_gt_label;
    out << g.molecule_id(e.m) << '\t' << g.template_id(e.t) << '\t' << edge_label_name(label) << '\t';
    if (energy) {
      const auto it = energy->find(e);
      if (it != energy->end()) {
        std::snprintf(buffer, sizeof buffer, "%.17g", it->second);
        out << buffer;
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace retro
