#include "retro/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "retro/error.hpp"

namespace retro {

namespace {

using json = nlohmann::json;

constexpr std::string_view kKindNames[] = {"label_minimal", "label_retro", "covariate_size", "covariate_scaffold"};

std::unordered_map<std::string, std::size_t> index_by_id(std::span<const Reaction> corpus) {
  std::unordered_map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) out.emplace(corpus[i].id, i);
  return out;
}

std::string template_or_empty(const std::map<std::string, std::string>& template_of, const std::string& id) {
  const auto it = template_of.find(id);
  return it == template_of.end() ? std::string() : it->second;
}

// Reactions grouped by template, classes in template-id order, members in corpus order.
std::map<std::string, std::vector<std::size_t>> classes_of(std::span<const Reaction> corpus,
                                                          const std::map<std::string, std::string>& template_of,
                                                          std::vector<std::size_t>& unassigned) {
  std::map<std::string, std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string t = template_or_empty(template_of, corpus[i].id);
    if (t.empty()) {
      unassigned.push_back(i);
    } else {
      classes[t].push_back(i);
    }
  }
  return classes;
}

std::vector<std::string> ids_in_corpus_order(std::span<const Reaction> corpus, std::vector<std::size_t> members) {
  std::sort(members.begin(), members.end());
  std::vector<std::string> out;
  out.reserve(members.size());
  for (std::size_t i : members) out.push_back(corpus[i].id);
  return out;
}

struct IdPool {
  std::vector<std::size_t> train, val, test_id;
};

void split_id_pool(std::vector<std::size_t> pool, std::mt19937_64& rng, IdPool& out) {
  std::shuffle(pool.begin(), pool.end(), rng);
  const IdSizes sizes = id_partition_sizes(pool.size());
  auto it = pool.begin();
  out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(sizes.train));
  it += static_cast<std::ptrdiff_t>(sizes.train);
  out.val.insert(out.val.end(), it, it + static_cast<std::ptrdiff_t>(sizes.val));
  it += static_cast<std::ptrdiff_t>(sizes.val);
  out.test_id.insert(out.test_id.end(), it, pool.end());
}

void count_template_classes(SplitManifest& m, const std::map<std::string, std::string>& template_of) {
  std::set<std::string> id_side, ood_side;
  for (const auto* part : {&m.train, &m.val, &m.test_id}) {
    for (const std::string& id : *part) id_side.insert(template_or_empty(template_of, id));
  }
  for (const std::string& id : m.test_ood) ood_side.insert(template_or_empty(template_of, id));
  m.id_template_classes = static_cast<int>(id_side.size());
  m.ood_template_classes = static_cast<int>(ood_side.size());
}

// Criterion value used to order a covariate class; compared as a tuple.
ScaffoldKey covariate_key(const Reaction& r, CovariateCriterion criterion) {
  if (criterion == CovariateCriterion::kSize) return ScaffoldKey{0, heavy_atom_count(r.product), ""};
  return scaffold_key(r.product);
}

std::string join(const std::vector<std::string>& items, std::size_t limit = 5) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  if (items.size() > limit) out += ", ... (" + std::to_string(items.size()) + " total)";
  return out;
}

}  // namespace

std::string_view split_kind_name(SplitKind kind) { return kKindNames[static_cast<int>(kind)]; }

SplitKind split_kind_from_name(std::string_view name) {
  for (int k = 0; k < 4; ++k) {
    if (kKindNames[k] == name) return static_cast<SplitKind>(k);
  }
  throw FormatError("unknown split kind '" + std::string(name) + "'");
}

std::size_t SplitManifest::corpus_size() const {
  return train.size() + val.size() + test_id.size() + test_ood.size() + discarded.size();
}

IdSizes id_partition_sizes(std::size_t n) {
  IdSizes s;
  s.val = static_cast<std::size_t>(std::lround(static_cast<double>(n) / 9.0));
  s.test_id = s.val;
  s.train = n - s.val - s.test_id;
  return s;
}

std::size_t covariate_ood_count(std::size_t class_size, double ood_fraction) {
  const auto rounded = static_cast<std::size_t>(std::lround(static_cast<double>(class_size) * ood_fraction));
  return std::min(class_size - 1, std::max<std::size_t>(1, rounded));
}

SplitManifest make_label_split(std::span<const Reaction> corpus, const std::map<std::string, std::string>& template_of,
                               int radius, double ood_fraction, std::uint64_t seed) {
  if (!(ood_fraction > 0.0 && ood_fraction < 0.5)) {
    throw InfeasibleSplit("label split needs 0 < ood_fraction < 0.5, got " + std::to_string(ood_fraction));
  }
  SplitManifest m;
  m.kind = radius == 0 ? SplitKind::kLabelMinimal : SplitKind::kLabelRetro;
  m.seed = seed;
  m.template_radius = radius;
  m.ood_fraction = ood_fraction;

  std::vector<std::size_t> unassigned;
  const auto classes = classes_of(corpus, template_of, unassigned);
  std::size_t assigned = 0;
  for (const auto& [t, members] : classes) assigned += members.size();
  if (classes.size() < 2) throw InfeasibleSplit("label split needs at least two template classes");

  const auto target = static_cast<std::size_t>(std::ceil(ood_fraction * static_cast<double>(assigned)));
  // A class more than twice the budget can never be moved without wrecking the fraction.
  std::vector<const std::vector<std::size_t>*> eligible;
  for (const auto& [t, members] : classes) {
    if (members.size() <= 2 * target) eligible.push_back(&members);
  }

  // the last class may overshoot the target by at most twice the mean class size
  const double overshoot = 2.0 * static_cast<double>(assigned) / static_cast<double>(classes.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> ood;
  std::set<const std::vector<std::size_t>*> moved;
  while (ood.size() < target) {
    const double room = static_cast<double>(target - ood.size()) + overshoot;
    std::vector<std::size_t> fits;
    for (std::size_t k = 0; k < eligible.size(); ++k) {
      if (static_cast<double>(eligible[k]->size()) <= room) fits.push_back(k);
    }
    if (fits.empty()) {
      throw InfeasibleSplit("template classes exhausted at " + std::to_string(ood.size()) + " of " +
                            std::to_string(target) + " OOD reactions (remaining classes exceed twice the budget)");
    }
    std::uniform_int_distribution<std::size_t> pick(0, fits.size() - 1);
    const std::size_t k = fits[pick(rng)];
    ood.insert(ood.end(), eligible[k]->begin(), eligible[k]->end());
    moved.insert(eligible[k]);
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(k));
  }
  if (moved.size() == classes.size()) throw InfeasibleSplit("every template class landed in test_ood");

  std::vector<std::size_t> pool;
  for (const auto& [t, members] : classes) {
    if (!moved.count(&members)) pool.insert(pool.end(), members.begin(), members.end());
  }
  std::sort(pool.begin(), pool.end());
  IdPool id;
  split_id_pool(pool, rng, id);

  m.train = ids_in_corpus_order(corpus, id.train);
  m.val = ids_in_corpus_order(corpus, id.val);
  m.test_id = ids_in_corpus_order(corpus, id.test_id);
  m.test_ood = ids_in_corpus_order(corpus, ood);
  m.discarded = ids_in_corpus_order(corpus, unassigned);
  count_template_classes(m, template_of);
  return m;
}

SplitManifest make_covariate_split(std::span<const Reaction> corpus,
                                   const std::map<std::string, std::string>& minimal_template_of,
                                   CovariateCriterion criterion, int min_class_size, double ood_fraction,
                                   std::uint64_t seed) {
  if (min_class_size < 2) throw InfeasibleSplit("min_class_size must be at least 2");
  if (!(ood_fraction > 0.0 && ood_fraction < 1.0)) {
    throw InfeasibleSplit("covariate split needs 0 < ood_fraction < 1, got " + std::to_string(ood_fraction));
  }
  SplitManifest m;
  m.kind = criterion == CovariateCriterion::kSize ? SplitKind::kCovariateSize : SplitKind::kCovariateScaffold;
  m.seed = seed;
  m.template_radius = 0;
  m.ood_fraction = ood_fraction;
  m.min_class_size = min_class_size;

  std::vector<std::size_t> discarded;
  const auto classes = classes_of(corpus, minimal_template_of, discarded);
  std::mt19937_64 rng(seed);
  IdPool id;
  std::vector<std::size_t> ood;
  bool any_retained = false;
  for (const auto& [t, members] : classes) {
    if (members.size() < static_cast<std::size_t>(min_class_size)) {
      discarded.insert(discarded.end(), members.begin(), members.end());
      continue;
    }
    any_retained = true;
    std::vector<std::pair<ScaffoldKey, std::size_t>> ordered;
    for (std::size_t i : members) ordered.emplace_back(covariate_key(corpus[i], criterion), i);
    std::stable_sort(ordered.begin(), ordered.end());  // ties keep corpus order
    const std::size_t n_ood = covariate_ood_count(members.size(), ood_fraction);
    std::vector<std::size_t> rest;
    for (std::size_t j = 0; j < ordered.size(); ++j) {
      (j + n_ood >= ordered.size() ? ood : rest).push_back(ordered[j].second);
    }
    split_id_pool(rest, rng, id);
  }
  if (!any_retained) {
    throw InfeasibleSplit("no minimal-template class has " + std::to_string(min_class_size) + " or more reactions");
  }

  m.train = ids_in_corpus_order(corpus, id.train);
  m.val = ids_in_corpus_order(corpus, id.val);
  m.test_id = ids_in_corpus_order(corpus, id.test_id);
  m.test_ood = ids_in_corpus_order(corpus, ood);
  m.discarded = ids_in_corpus_order(corpus, discarded);
  count_template_classes(m, minimal_template_of);
  return m;
}

// ---- validation -----------------------------------------------------------------

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
  for (const ValidationCheck& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ValidationReport validate_manifest(const SplitManifest& m, std::span<const Reaction> corpus,
                                   const std::map<std::string, std::string>& template_of) {
  ValidationReport report;
  auto add = [&](std::string name, std::vector<std::string> problems) {
    report.checks.push_back({std::move(name), problems.empty(), join(problems)});
  };
  const auto index = index_by_id(corpus);
  const std::pair<const char*, const std::vector<std::string>*> parts[] = {
      {"train", &m.train}, {"val", &m.val}, {"test_id", &m.test_id}, {"test_ood", &m.test_ood},
      {"discarded", &m.discarded}};

  {
    std::vector<std::string> problems;
    if (m.train.empty()) problems.push_back("train is empty");
    if (m.test_ood.empty()) problems.push_back("test_ood is empty");
    if (m.template_radius < 0) problems.push_back("negative template radius");
    if (is_label_split(m.kind) != (m.min_class_size == 0)) problems.push_back("min_class_size does not fit split kind");
    add("structure", problems);
  }
  std::map<std::string, std::string> owner;
  {
    std::vector<std::string> unknown, overlap;
    for (const auto& [name, ids] : parts) {
      for (const std::string& id : *ids) {
        if (!index.count(id)) unknown.push_back(id);
        const auto [it, fresh] = owner.emplace(id, name);
        if (!fresh) overlap.push_back(id + " in " + it->second + " and " + name);
      }
    }
    add("known_ids", unknown);
    add("disjoint", overlap);
    std::vector<std::string> missing;
    for (const Reaction& r : corpus) {
      if (!owner.count(r.id)) missing.push_back(r.id);
    }
    add("coverage", missing);
  }
  {
    std::vector<std::string> problems;
    std::set<std::string> id_side, ood_side;
    for (const auto* part : {&m.train, &m.val, &m.test_id, &m.test_ood}) {
      for (const std::string& id : *part) {
        const std::string t = template_or_empty(template_of, id);
        if (t.empty()) problems.push_back(id + " has no template");
        (part == &m.test_ood ? ood_side : id_side).insert(t);
      }
    }
    if (static_cast<int>(id_side.size()) != m.id_template_classes ||
        static_cast<int>(ood_side.size()) != m.ood_template_classes) {
      problems.push_back("template class counts disagree with metadata");
    }
    add("templates_assigned", problems);

    if (is_label_split(m.kind)) {
      std::vector<std::string> shared;
      std::set_intersection(id_side.begin(), id_side.end(), ood_side.begin(), ood_side.end(),
                            std::back_inserter(shared));
      add("template_disjoint", shared);
      const IdSizes want = id_partition_sizes(m.train.size() + m.val.size() + m.test_id.size());
      std::vector<std::string> ratio;
      if (want.train != m.train.size() || want.val != m.val.size() || want.test_id != m.test_id.size()) {
        ratio.push_back("ID partition sizes " + std::to_string(m.train.size()) + "/" + std::to_string(m.val.size()) +
                        "/" + std::to_string(m.test_id.size()) + " differ from 7:1:1 rounding");
      }
      add("id_ratio", ratio);
    } else {
      // per minimal-template class: side coverage, size floor, OOD count and extremity
      const auto criterion = m.kind == SplitKind::kCovariateSize ? CovariateCriterion::kSize : CovariateCriterion::kScaffold;
      std::map<std::string, std::map<std::string, std::vector<std::size_t>>> per_class;  // template -> partition -> corpus idx
      for (const Reaction& r : corpus) {
        const auto it = owner.find(r.id);
        if (it == owner.end()) continue;
        per_class[template_or_empty(template_of, r.id)][it->second].push_back(index.at(r.id));
      }
      std::vector<std::string> sides, floor, counts, extreme;
      for (const auto& [t, by_part] : per_class) {
        std::size_t total = 0, discarded = 0;
        for (const auto& [part, members] : by_part) {
          total += members.size();
          if (part == "discarded") discarded += members.size();
        }
        const bool retained = discarded == 0;
        if (discarded != 0 && discarded != total) floor.push_back(t + " partly discarded");
        if (retained != (total >= static_cast<std::size_t>(m.min_class_size))) floor.push_back(t + " size " + std::to_string(total));
        if (!retained) continue;
        const auto ood_it = by_part.find("test_ood");
        const std::size_t n_ood = ood_it == by_part.end() ? 0 : ood_it->second.size();
        if (!by_part.count("train") || n_ood == 0) sides.push_back(t);
        if (n_ood != covariate_ood_count(total, m.ood_fraction)) counts.push_back(t);
        const IdSizes want = id_partition_sizes(total - n_ood);
        auto count = [&](const char* part) {
          const auto it = by_part.find(part);
          return it == by_part.end() ? std::size_t{0} : it->second.size();
        };
        if (want.train != count("train") || want.val != count("val") || want.test_id != count("test_id")) {
          counts.push_back(t + " ID sizes");
        }
        if (n_ood == 0) continue;
        ScaffoldKey lowest_ood = covariate_key(corpus[ood_it->second.front()], criterion);
        for (std::size_t i : ood_it->second) lowest_ood = std::min(lowest_ood, covariate_key(corpus[i], criterion));
        for (const auto& [part, members] : by_part) {
          if (part == "test_ood") continue;
          for (std::size_t i : members) {
            if (lowest_ood < covariate_key(corpus[i], criterion)) extreme.push_back(corpus[i].id);
          }
        }
      }
      add("both_sides", sides);
      add("min_class_size", floor);
      add("ood_counts", counts);
      add("ood_extreme", extreme);
    }
  }
  return report;
}

// ---- summary ------------------------------------------------------------------------

ShiftSummary summarize_shift(const SplitManifest& m, std::span<const Reaction> corpus,
                             const std::map<std::string, std::string>& template_of) {
  const auto index = index_by_id(corpus);
  ShiftSummary s;
  std::set<std::string> id_side, ood_side;
  const std::pair<const char*, const std::vector<std::string>*> parts[] = {
      {"train", &m.train}, {"val", &m.val}, {"test_id", &m.test_id}, {"test_ood", &m.test_ood}};
  for (const auto& [name, ids] : parts) {
    PartitionSummary& p = s.partitions[name];
    double total = 0.0;
    for (const std::string& id : *ids) {
      const auto it = index.find(id);
      if (it == index.end()) continue;
      const Reaction& r = corpus[it->second];
      const std::string t = template_or_empty(template_of, id);
      ++p.template_counts[t];
      (std::string(name) == "test_ood" ? ood_side : id_side).insert(t);
      const int size = heavy_atom_count(r.product);
      ++p.size_histogram[size];
      ++p.scaffold_counts[molecule_key(murcko_scaffold(r.product))];
      total += size;
      ++p.reactions;
    }
    p.mean_size = p.reactions ? total / static_cast<double>(p.reactions) : 0.0;
  }
  std::vector<std::string> shared;
  std::set_intersection(id_side.begin(), id_side.end(), ood_side.begin(), ood_side.end(), std::back_inserter(shared));
  s.shared_templates = static_cast<int>(shared.size());
  return s;
}

// ---- JSON ---------------------------------------------------------------------------

std::string manifest_to_json(const SplitManifest& m) {
  json j;
  j["split_kind"] = split_kind_name(m.kind);
  j["seed"] = m.seed;
  j["template_radius"] = m.template_radius;
  j["ood_fraction"] = m.ood_fraction;
  j["min_class_size"] = m.min_class_size;
  j["partitions"] = {{"train", m.train}, {"val", m.val}, {"test_id", m.test_id}, {"test_ood", m.test_ood}};
  j["metadata"] = {
      {"counts",
       {{"train", m.train.size()},
        {"val", m.val.size()},
        {"test_id", m.test_id.size()},
        {"test_ood", m.test_ood.size()},
        {"discarded", m.discarded.size()}}},
      {"discarded", m.discarded},
      {"template_classes", {{"id", m.id_template_classes}, {"ood", m.ood_template_classes}}}};
  return j.dump(2) + "\n";
}

SplitManifest manifest_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SplitManifest m;
    m.kind = split_kind_from_name(j.at("split_kind").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.template_radius = j.at("template_radius").get<int>();
    m.ood_fraction = j.at("ood_fraction").get<double>();
    m.min_class_size = j.at("min_class_size").get<int>();
    const json& p = j.at("partitions");
    m.train = p.at("train").get<std::vector<std::string>>();
    m.val = p.at("val").get<std::vector<std::string>>();
    m.test_id = p.at("test_id").get<std::vector<std::string>>();
    m.test_ood = p.at("test_ood").get<std::vector<std::string>>();
    const json& meta = j.at("metadata");
    m.discarded = meta.at("discarded").get<std::vector<std::string>>();
    m.id_template_classes = meta.at("template_classes").at("id").get<int>();
    m.ood_template_classes = meta.at("template_classes").at("ood").get<int>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
}

std::string summary_to_json(const ShiftSummary& s) {
  json j;
  for (const auto& [name, p] : s.partitions) {
    json sizes = json::object();
    for (const auto& [size, count] : p.size_histogram) sizes[std::to_string(size)] = count;
    j["partitions"][name] = {{"reactions", p.reactions},
                             {"mean_size", p.mean_size},
                             {"template_counts", p.template_counts},
                             {"size_histogram", sizes},
                             {"scaffold_classes", p.scaffold_counts.size()}};
  }
  j["shared_templates"] = s.shared_templates;
  return j.dump(2) + "\n";
}

std::string report_to_json(const ValidationReport& r) {
  json checks = json::array();
  for (const ValidationCheck& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return json{{"ok", r.ok()}, {"checks", checks}}.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& path, const SplitManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest_to_json(m);
  if (!out) throw IoError("write failed for " + path.string());
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return manifest_from_json(buffer.str());
}

}  // namespace retro
