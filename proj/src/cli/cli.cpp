#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "retro/cli.hpp"
#include "retro/enhance.hpp"
#include "retro/error.hpp"
#include "retro/learn.hpp"
#include "retro/splits.hpp"

namespace retro {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Raised after artifacts describing the breach have been written.
class InvariantBreach : public Error {
 public:
  using Error::Error;
};

class EmptyOutput : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string corpus;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_corpus = true) {
  auto* opt = cmd->add_option("--corpus", c.corpus, "reaction corpus TSV");
  if (needs_corpus) opt->required();
  cmd->add_option("--out", c.out, "output directory (overridden by " + std::string(kOutputDirEnv) + ")");
  cmd->add_option("--seed", c.seed, "root seed");
  cmd->add_flag("--deterministic", c.deterministic, "single-threaded reductions");
}

fs::path output_dir(const Common& c) {
  const char* env = std::getenv(kOutputDirEnv);
  fs::path dir = env && *env ? fs::path(env) : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_json(const fs::path& path, const ordered_json& j) { write_file(path, j.dump(2) + "\n"); }

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

std::string ids_hash(const std::vector<std::string>& ids) {
  std::string joined;
  for (const std::string& id : ids) joined += id + "\n";
  return fnv1a_hex(joined);
}

ordered_json run_header(const std::string& command, const Common& c) {
  return {{"command", command}, {"seed", c.seed}, {"deterministic", c.deterministic}, {"corpus", c.corpus}};
}

std::vector<Reaction> load_corpus(const std::string& path, ordered_json* rejected_json = nullptr) {
  std::vector<RejectedLine> rejected;
  std::vector<Reaction> corpus = read_corpus(path, &rejected);
  if (rejected_json) {
    *rejected_json = ordered_json::array();
    for (const RejectedLine& r : rejected) rejected_json->push_back({{"line", r.line}, {"id", r.id}, {"reason", r.reason}});
  }
  return corpus;
}

std::vector<Reaction> partition(const std::vector<Reaction>& corpus, const std::vector<std::string>& ids) {
  std::map<std::string, const Reaction*> by_id;
  for (const Reaction& r : corpus) by_id[r.id] = &r;
  std::vector<Reaction> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw FormatError("split manifest names unknown reaction " + id);
    out.push_back(*it->second);
  }
  return out;
}

// Reads a manifest and re-validates it against the corpus.
SplitManifest load_split(const std::string& path, const std::vector<Reaction>& corpus, std::string* text) {
  *text = read_file(path);
  SplitManifest m = manifest_from_json(*text);
  const TemplateAssignment assignment = assign_corpus_templates(corpus, m.template_radius);
  const ValidationReport report = validate_manifest(m, corpus, assignment.template_of);
  if (!report.ok()) {
    std::string failed;
    for (const ValidationCheck& c : report.checks) {
      if (!c.passed) failed += " " + c.name;
    }
    throw InvariantBreach("manifest " + path + " fails validation:" + failed);
  }
  return m;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- extract-templates --------------------------------------------------------------------

struct ExtractArgs {
  Common common;
  int radius = 1;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  ordered_json rejected;
  const std::vector<Reaction> corpus = load_corpus(a.common.corpus, &rejected);
  const TemplateAssignment assignment = assign_corpus_templates(corpus, a.radius);
  if (assignment.table.empty()) throw EmptyOutput("no template could be extracted from " + a.common.corpus);
  const fs::path dir = output_dir(a.common);
  const std::string suffix = "_r" + std::to_string(a.radius);
  write_template_table(dir / ("templates" + suffix + ".tsv"), assignment.table);
  write_assignments(dir / ("assignments" + suffix + ".tsv"), assignment.template_of);
  ordered_json report = run_header("extract-templates", a.common);
  report["radius"] = a.radius;
  report["reactions"] = corpus.size();
  report["assigned"] = assignment.template_of.size();
  report["templates"] = assignment.table.size();
  report["skipped"] = ordered_json::array();
  for (const SkippedReaction& s : assignment.skipped) report["skipped"].push_back({{"id", s.id}, {"reason", s.reason}});
  report["rejected_lines"] = rejected;
  write_json(dir / ("extract" + suffix + ".json"), report);
  out << "reactions " << corpus.size() << ", assigned " << assignment.template_of.size() << ", templates "
      << assignment.table.size() << ", skipped " << assignment.skipped.size() << "\n";
  return kExitOk;
}

// ---- split ------------------------------------------------------------------------------------

struct SplitArgs {
  Common common;
  std::string kind = "label_retro";
  double ood_fraction = 0.1;
  int min_class_size = 10;
};

int manifest_radius(SplitKind kind) { return kind == SplitKind::kLabelRetro ? 1 : 0; }

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const SplitKind kind = split_kind_from_name(a.kind);
  const std::vector<Reaction> corpus = load_corpus(a.common.corpus);
  const int radius = manifest_radius(kind);
  const TemplateAssignment assignment = assign_corpus_templates(corpus, radius);
  SplitManifest m;
  if (is_label_split(kind)) {
    m = make_label_split(corpus, assignment.template_of, radius, a.ood_fraction, a.common.seed);
  } else {
    const CovariateCriterion c =
        kind == SplitKind::kCovariateSize ? CovariateCriterion::kSize : CovariateCriterion::kScaffold;
    m = make_covariate_split(corpus, assignment.template_of, c, a.min_class_size, a.ood_fraction, a.common.seed);
  }
  const ValidationReport report = validate_manifest(m, corpus, assignment.template_of);
  const ShiftSummary summary = summarize_shift(m, corpus, assignment.template_of);
  const fs::path dir = output_dir(a.common);
  const std::string name = "split_" + a.kind;
  write_file(dir / (name + "_validation.json"), report_to_json(report));
  if (!report.ok()) {
    for (const ValidationCheck& c : report.checks) {
      if (!c.passed) out << "check failed: " << c.name << " " << c.detail << "\n";
    }
    throw InvariantBreach("split manifest failed validation");
  }
  write_manifest(dir / (name + ".json"), m);
  write_file(dir / (name + "_summary.json"), summary_to_json(summary));
  out << "split " << a.kind << " seed " << m.seed << "\n";
  out << "partition   reactions  templates  mean_size\n";
  for (const char* p : {"train", "val", "test_id", "test_ood"}) {
    const auto it = summary.partitions.find(p);
    if (it == summary.partitions.end()) continue;
    out << std::left << std::setw(12) << p << std::setw(11) << it->second.reactions << std::setw(11)
        << it->second.template_counts.size() << fixed(it->second.mean_size, 2) << "\n";
  }
  out << "discarded   " << m.discarded.size() << "\nshared templates " << summary.shared_templates << "\n";
  return kExitOk;
}

// ---- enhance ----------------------------------------------------------------------------------

struct EnhanceArgs {
  Common common;
  std::string split;
  EnhanceConfig cfg;
  std::string encoder = "fingerprint";
};

int cmd_enhance(EnhanceArgs a, std::ostream& out) {
  EnhanceConfig& cfg = a.cfg;
  cfg.seed = a.common.seed;
  if (a.encoder == "mpnn") {
    cfg.energy.encoder = EncoderKind::kMpnn;
  } else if (a.encoder != "fingerprint") {
    throw FormatError("unknown encoder '" + a.encoder + "'");
  }
  if (cfg.hops < 1 || cfg.top_n < 0 || cfg.negative_cutoff < 1) {
    throw FormatError("need hops >= 1, top-n >= 0 and negative cutoff >= 1");
  }
  const std::vector<Reaction> corpus = load_corpus(a.common.corpus);
  std::string manifest_text;
  const SplitManifest m = load_split(a.split, corpus, &manifest_text);
  // only the train partition is read
  const std::vector<Reaction> train = partition(corpus, m.train);
  const TemplateAssignment assignment = assign_corpus_templates(train, 1);
  const EnhanceData data = build_bipartite_graph(train, assignment);
  if (data.graph.edge_count() == 0) throw EmptyOutput("bipartite graph has no edges");
  const StageAResult stage_a = stage_a_filter(data);
  const NodeFeatures nodes = node_features(data, cfg.energy);
  TrainResult trained = train_ebm(stage_a.filtered, nodes, data.template_frequency, cfg);
  const StageCResult stage_c =
      denoise_top_n(stage_a.filtered, trained.model, nodes, cfg.top_n, cfg.hops, cfg.highest_energy);
  const SandwichReport sandwich = check_sandwich(data.graph, stage_a.filtered, stage_c.enhanced, cfg.top_n);

  const fs::path dir = output_dir(a.common);
  ordered_json report = run_header("enhance", a.common);
  report["split"] = a.split;
  report["manifest_hash"] = fnv1a_hex(manifest_text);
  report["config"] = {{"hops", cfg.hops},
                      {"negative_cutoff", cfg.negative_cutoff},
                      {"top_n", cfg.top_n},
                      {"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"lr", cfg.lr},
                      {"max_steps", cfg.max_steps},
                      {"selection", cfg.highest_energy ? "highest_energy" : "lowest_energy"},
                      {"encoder", a.encoder},
                      {"hidden", cfg.energy.hidden},
                      {"dropout", cfg.energy.dropout},
                      {"fingerprint_bits", cfg.energy.fingerprint_bits},
                      {"mpnn_depth", cfg.energy.mpnn_depth},
                      {"tau", cfg.energy.tau},
                      {"include_positive", cfg.energy.include_positive}};
  report["graph"] = {{"molecules", data.graph.molecule_count()},
                     {"templates", data.graph.template_count()},
                     {"e_full", data.graph.edge_count()},
                     {"e_gt", data.graph.gt_edges().size()},
                     {"e_filtered", stage_a.filtered.edge_count()},
                     {"e_fail", stage_a.failed.size()},
                     {"gt_failures", stage_a.gt_failures.size()},
                     {"e_enh", stage_c.enhanced.size()},
                     {"selected", stage_c.selected.size()}};
  report["training"] = ordered_json::array();
  for (const EpochLog& e : trained.log) {
    report["training"].push_back({{"epoch", e.epoch},
                                  {"mean_loss", e.mean_loss},
                                  {"mean_positive_energy", e.mean_positive_energy},
                                  {"mean_negative_energy", e.mean_negative_energy},
                                  {"samples", e.samples},
                                  {"skipped", e.skipped}});
  }
  report["steps"] = trained.steps;
  report["sandwich"] = {{"gt_in_enhanced", sandwich.gt_in_enhanced},
                        {"enhanced_in_filtered", sandwich.enhanced_in_filtered},
                        {"filtered_in_full", sandwich.filtered_in_full},
                        {"within_bound", sandwich.within_bound},
                        {"detail", sandwich.detail}};
  for (const EdgeRef& e : stage_a.gt_failures) {
    out << "warning: gt edge " << data.graph.molecule_id(e.m) << " / " << data.graph.template_id(e.t)
        << " does not re-apply; kept\n";
  }
  write_json(dir / "enhance_report.json", report);
  if (!sandwich.ok()) throw InvariantBreach("sandwich invariant violated: " + sandwich.detail);

  write_edge_list(dir / "graph_full.tsv", data.graph, data.graph.edges(), EdgeLabel::kCandidate);
  write_edge_list(dir / "graph_filtered.tsv", stage_a.filtered, stage_a.filtered.edges(), EdgeLabel::kCandidate);
  write_edge_list(dir / "graph_enhanced.tsv", stage_a.filtered, stage_c.enhanced, EdgeLabel::kEnhanced,
                  &stage_c.energy);
  const ordered_json header = {{"kind", "ebm"}, {"seed", cfg.seed}, {"config", report["config"]}};
  write_checkpoint(dir / "ebm.ckpt", trained.model.parameters(), header.dump());
  std::vector<Reaction> enhanced_corpus = train;
  for (Reaction& r : materialize_enhanced(data, stage_a, stage_c.selected)) enhanced_corpus.push_back(std::move(r));
  write_corpus(dir / "enhanced_corpus.tsv", enhanced_corpus, true);

  out << "E_full " << data.graph.edge_count() << ", E'_enh " << stage_a.filtered.edge_count() << ", E_enh "
      << stage_c.enhanced.size() << ", E_gt " << data.graph.gt_edges().size() << "\n";
  out << "enhanced records " << enhanced_corpus.size() - train.size() << " (n=" << cfg.top_n << ", seed "
      << cfg.seed << ")\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string split;
  std::string enhanced;
  std::string mode = "erm";
  std::string bin = "size";
  std::string penalty_target = "template";
  int radius = -1;
  ClassifierConfig cfg;
  IrmConfig irm;
};

int cmd_train(TrainArgs a, std::ostream& out) {
  ClassifierConfig& cfg = a.cfg;
  cfg.seed = a.common.seed;
  const TrainMode mode = train_mode_from_name(a.mode);
  a.irm.criterion = bin_criterion_from_name(a.bin);
  if (a.penalty_target == "center") {
    a.irm.target = PenaltyTarget::kCenterHead;
    cfg.center_head = true;
  } else if (a.penalty_target != "template") {
    throw FormatError("unknown penalty target '" + a.penalty_target + "'");
  }
  const std::vector<Reaction> corpus = load_corpus(a.common.corpus);
  std::string manifest_text;
  const SplitManifest m = load_split(a.split, corpus, &manifest_text);
  const int radius = a.radius >= 0 ? a.radius : m.template_radius;
  const std::vector<Reaction> train = partition(corpus, m.train);
  const TemplateAssignment assignment = assign_corpus_templates(train, radius);

  std::vector<Reaction> rows;
  if (!a.enhanced.empty()) {
    for (Reaction& r : read_corpus(a.enhanced)) {
      if (r.provenance != Provenance::kEnhanced) continue;
      if (!assignment.find(r.template_id)) {
        throw FormatError("enhanced record " + r.id + " uses template " + r.template_id +
                          " outside the radius-" + std::to_string(radius) + " training table");
      }
      rows.push_back(std::move(r));
    }
  }
  const std::size_t enhanced_rows = rows.size();
  rows.insert(rows.end(), train.begin(), train.end());

  const std::vector<std::string> vocab = template_vocabulary(rows, assignment.template_of);
  if (vocab.empty()) throw EmptyOutput("training partition has no assigned templates");
  ClassifierData data = classifier_data(rows, assignment.template_of, vocab, cfg);
  std::vector<std::string> center_vocab;
  if (cfg.center_head) {
    const TemplateAssignment minimal = assign_corpus_templates(train, 0);
    center_vocab = template_vocabulary(train, minimal.template_of);
    // enhanced records have no atom maps, so no centre label
    data.center_labels = label_indices(rows, minimal.template_of, center_vocab);
    for (std::size_t i = 0; i < enhanced_rows; ++i) data.center_labels[i] = -1;
  }
  if (mode == TrainMode::kIrm) {
    const std::map<std::string, int> env = bin_environments(rows, a.irm.criterion, a.irm.environments);
    for (const Reaction& r : rows) data.environments.push_back(env.at(r.id));
  }
  TemplateClassifier model(cfg, cfg.fingerprint_bits, vocab, center_vocab);
  TrainedClassifier trained = train_classifier(std::move(model), data, mode, a.irm);

  const fs::path dir = output_dir(a.common);
  ordered_json report = run_header("train", a.common);
  report["split"] = a.split;
  report["manifest_hash"] = fnv1a_hex(manifest_text);
  report["mode"] = a.mode;
  report["radius"] = radius;
  report["enhanced"] = a.enhanced;
  report["rows"] = {{"observed", train.size()}, {"enhanced", enhanced_rows}};
  report["vocabulary"] = vocab.size();
  report["irm"] = {{"lambda", a.irm.lambda},
                   {"environments", a.irm.environments},
                   {"criterion", a.bin},
                   {"warmup_epochs", a.irm.warmup_epochs},
                   {"penalty_target", a.penalty_target}};
  report["config"] = {{"fingerprint_bits", cfg.fingerprint_bits}, {"fingerprint_radius", cfg.fingerprint_radius},
                      {"hidden", cfg.hidden},   {"dropout", cfg.dropout},
                      {"epochs", cfg.epochs},   {"batch_size", cfg.batch_size},
                      {"lr", cfg.lr},           {"center_head", cfg.center_head}};
  report["log"] = ordered_json::array();
  for (const ClassifierEpoch& e : trained.log) {
    report["log"].push_back({{"epoch", e.epoch},
                             {"loss", e.loss},
                             {"risk", e.risk},
                             {"penalty", e.penalty},
                             {"lambda", e.lambda},
                             {"environment_risks", e.environment_risks}});
  }
  write_json(dir / "train_report.json", report);
  save_classifier(dir / "classifier.ckpt", trained.model, "seed=" + std::to_string(cfg.seed));
  std::vector<Template> table;
  for (const std::string& id : vocab) table.push_back(*assignment.find(id));
  write_template_table(dir / "templates.tsv", table);
  out << "trained " << a.mode << " on " << rows.size() << " rows (" << enhanced_rows << " enhanced), "
      << vocab.size() << " templates, final loss " << fixed(trained.log.empty() ? 0.0 : trained.log.back().loss)
      << ", seed " << cfg.seed << "\n";
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string split;
  std::string model_dir;
  bool include_train = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const std::vector<Reaction> corpus = load_corpus(a.common.corpus);
  std::string manifest_text;
  const SplitManifest m = load_split(a.split, corpus, &manifest_text);
  const fs::path model_path = fs::path(a.model_dir) / "classifier.ckpt";
  TemplateClassifier model = load_classifier(model_path);
  const std::vector<Template> table = read_template_table(fs::path(a.model_dir) / "templates.tsv");

  std::vector<std::pair<std::string, const std::vector<std::string>*>> parts;
  if (a.include_train) parts.emplace_back("train", &m.train);
  parts.emplace_back("test_id", &m.test_id);
  parts.emplace_back("test_ood", &m.test_ood);

  ordered_json report = run_header("eval", a.common);
  report["split"] = a.split;
  report["split_kind"] = split_kind_name(m.kind);
  report["manifest_hash"] = fnv1a_hex(manifest_text);
  report["test_hash"] = ids_hash(m.test_id) + ids_hash(m.test_ood);
  report["model_hash"] = fnv1a_hex(read_file(model_path));
  ordered_json metrics = ordered_json::object(), counts = ordered_json::object();
  bool monotone = true;
  out << "partition   n     top1    top3    top5    top10\n";
  for (const auto& [name, ids] : parts) {
    const std::vector<Reaction> reactions = partition(corpus, *ids);
    const EvalResult r = evaluate_topk(model, table, reactions);
    ordered_json row = ordered_json::object();
    double previous = 0.0;
    for (int k : kTopK) {
      row[std::to_string(k)] = r.topk.at(k);
      monotone = monotone && r.topk.at(k) >= previous;
      previous = r.topk.at(k);
    }
    metrics[name] = row;
    counts[name] = reactions.size();
    out << std::left << std::setw(12) << name << std::setw(6) << reactions.size();
    for (int k : kTopK) out << std::setw(8) << fixed(r.topk.at(k));
    out << "\n";
  }
  report["metrics"] = metrics;
  report["counts"] = counts;
  report["monotone"] = monotone;
  const fs::path dir = output_dir(a.common);
  write_json(dir / "eval_report.json", report);
  if (!monotone) throw InvariantBreach("top-k accuracy is not monotone in k");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Template-based retrosynthesis benchmark pipeline"};
  app.require_subcommand(1);

  ExtractArgs ex;
  CLI::App* extract = app.add_subcommand("extract-templates", "extract and assign templates");
  add_common(extract, ex.common);
  extract->add_option("--radius", ex.radius, "template radius")->check(CLI::Range(0, 6));

  SplitArgs sp;
  CLI::App* split = app.add_subcommand("split", "build an OOD split manifest");
  add_common(split, sp.common);
  split->add_option("--kind", sp.kind, "label_minimal, label_retro, covariate_size or covariate_scaffold");
  split->add_option("--ood-fraction", sp.ood_fraction, "OOD share");
  split->add_option("--min-class-size", sp.min_class_size, "covariate splits: smallest kept class");

  EnhanceArgs en;
  CLI::App* enhance = app.add_subcommand("enhance", "build, filter and denoise the template graph");
  add_common(enhance, en.common);
  enhance->add_option("--split", en.split, "split manifest")->required();
  enhance->add_option("--hops", en.cfg.hops);
  enhance->add_option("--negative-cutoff", en.cfg.negative_cutoff);
  enhance->add_option("--top-n", en.cfg.top_n);
  enhance->add_option("--epochs", en.cfg.epochs);
  enhance->add_option("--batch-size", en.cfg.batch_size);
  enhance->add_option("--lr", en.cfg.lr);
  enhance->add_option("--max-steps", en.cfg.max_steps, "0 = no cap");
  enhance->add_flag("--highest-energy", en.cfg.highest_energy, "Stage C keeps the highest energies");
  enhance->add_option("--encoder", en.encoder, "fingerprint or mpnn");
  enhance->add_option("--hidden", en.cfg.energy.hidden);
  enhance->add_option("--dropout", en.cfg.energy.dropout);
  enhance->add_option("--bits", en.cfg.energy.fingerprint_bits);
  enhance->add_option("--mpnn-depth", en.cfg.energy.mpnn_depth);
  enhance->add_option("--tau", en.cfg.energy.tau);
  enhance->add_flag("--include-positive", en.cfg.energy.include_positive);

  TrainArgs tr;
  CLI::App* train = app.add_subcommand("train", "train the template classifier");
  add_common(train, tr.common);
  train->add_option("--split", tr.split, "split manifest")->required();
  train->add_option("--enhanced", tr.enhanced, "enhanced corpus from the enhance command");
  train->add_option("--mode", tr.mode, "erm or irm");
  train->add_option("--lambda", tr.irm.lambda);
  train->add_option("--environments", tr.irm.environments);
  train->add_option("--bin", tr.bin, "size or scaffold");
  train->add_option("--warmup", tr.irm.warmup_epochs);
  train->add_option("--penalty-target", tr.penalty_target, "template or center");
  train->add_option("--radius", tr.radius, "template radius (default: the manifest's)");
  train->add_option("--hidden", tr.cfg.hidden);
  train->add_option("--dropout", tr.cfg.dropout);
  train->add_option("--epochs", tr.cfg.epochs);
  train->add_option("--batch-size", tr.cfg.batch_size);
  train->add_option("--lr", tr.cfg.lr);
  train->add_option("--bits", tr.cfg.fingerprint_bits);
  train->add_option("--fp-radius", tr.cfg.fingerprint_radius);
  train->add_flag("--center-head", tr.cfg.center_head);

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "top-k exact-match evaluation");
  add_common(eval, ev.common);
  eval->add_option("--split", ev.split, "split manifest")->required();
  eval->add_option("--model", ev.model_dir, "directory written by train")->required();
  eval->add_flag("--include-train", ev.include_train);

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(ex, out);
    if (*split) return cmd_split(sp, out);
    if (*enhance) return cmd_enhance(en, out);
    if (*train) return cmd_train(tr, out);
    if (*eval) return cmd_eval(ev, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const EmptyOutput& e) {
    err << "error: " << e.what() << "\n";
    return kExitEmpty;
  } catch (const InfeasibleSplit& e) {
    err << "infeasible split: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InvariantBreach& e) {
    err << "invariant breach: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const NonFinite& e) {
    err << "non-finite training state: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace retro
