#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <artlens.hpp>

#include "manifest.hpp"

namespace fs = std::filesystem;

namespace artlens::cli {
namespace {

struct Common {
  std::uint64_t seed = 42;
  std::string task;
  fs::path out = ".";
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c, bool task_required) {
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  auto* task = sub->add_option("--task", c.task, "Label task (style, genre, ...)");
  if (task_required) task->required();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "Scan threads (0 = all cores)")->capture_default_str();
}

fs::path prepare_out(const Common& c) {
  fs::create_directories(c.out);
  return c.out;
}

/// --labelspace if given, else the store's companion file, else derived from
/// the store itself.
LabelSpace resolve_labelspace(const std::string& flag, const fs::path& store_path,
                              const EmbeddingSet& store, const std::string& task,
                              RunManifest& manifest) {
  if (!flag.empty()) {
    manifest.add_input(flag);
    return read_labelspace(flag, task);
  }
  const auto companion = labelspace_path_for(store_path);
  if (fs::exists(companion)) {
    auto spaces = read_labelspaces(companion);
    if (auto it = spaces.find(task); it != spaces.end()) {
      manifest.add_input(companion);
      return it->second;
    }
  }
  return derive_labelspace(store, task);
}

EmbeddingSet load_store(const fs::path& path, RunManifest& manifest) {
  manifest.add_input(path);
  return read_store(path);
}

std::optional<std::string> gold_of(const EmbeddingSet& set, std::size_t row,
                                   const std::string& task) {
  const auto& labels = set.meta(row).labels;
  auto it = labels.find(task);
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

/// Writes predictions.jsonl and, when any row is labeled, report.json; prints
/// the one-row report table.
void emit_predictions(const std::vector<Prediction>& preds, const LabelSpace& ls,
                      const std::string& model, const fs::path& dir, RunManifest& manifest,
                      std::ostream& out) {
  const auto pred_path = dir / "predictions.jsonl";
  write_predictions(preds, pred_path);
  manifest.add_output(pred_path);
  const bool labeled =
      std::any_of(preds.begin(), preds.end(), [](const Prediction& p) { return p.gold; });
  if (!labeled) {
    out << "wrote " << preds.size() << " predictions to " << pred_path.string() << "\n";
    return;
  }
  const auto report = evaluate_predictions(preds, ls, model);
  const auto report_path = dir / "report.json";
  detail::write_file(report_path, to_json(report).dump(2) + "\n");
  manifest.add_output(report_path);
  out << render_report({report}, {model});
}

std::string html_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::vector<float> parse_vector(const nlohmann::json& j) {
  return j.get<std::vector<float>>();
}

// ---------------------------------------------------------------------------

int cmd_ingest(const fs::path& input, const std::string& name, bool as_bank,
               const std::string& tmpl, const Common& c, RunManifest& manifest, std::ostream& out) {
  manifest.add_input(input);
  const auto text = detail::read_file(input);
  std::optional<EmbeddingSet> set;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto vec = parse_vector(j.at("vector"));
      if (!set) set.emplace(vec.size());
      RowMeta m;
      m.id = j.at("id").get<std::string>();
      if (j.contains("labels")) m.labels = j.at("labels").get<std::map<std::string, std::string>>();
      if (as_bank) m.labels = {{c.task, m.id}};
      set->add(std::move(m), vec);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(input.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!set) throw InvariantError("ingest input " + input.string() + " has no rows");

  const auto dir = prepare_out(c);
  const auto stem = name.empty() ? input.stem().string() : name;
  const auto store_path = dir / (stem + ".emb");
  if (as_bank) {
    std::vector<std::string> classes;
    for (const auto& m : set->meta()) classes.push_back(m.id);
    PromptBank bank(LabelSpace(c.task, classes), tmpl.empty() ? default_template(c.task) : tmpl,
                    set->vectors());
    write_bank(bank, store_path);
    out << "prompt bank: " << bank.labelspace().size() << " classes, dim " << bank.dim() << "\n";
    for (std::size_t k = 0; k < bank.prompts().size(); ++k)
      out << "  " << k << "  " << bank.prompts()[k] << "\n";
  } else {
    write_store(*set, store_path);
    const auto ls_path = labelspace_path_for(store_path);
    write_labelspaces(derive_labelspaces(*set), ls_path);
    manifest.add_output(ls_path);
    out << "ingested " << set->count() << " rows of dim " << set->dim() << "\n";
  }
  manifest.add_output(store_path);
  return kExitOk;
}

int cmd_split(const fs::path& input, const std::string& ratios_text, const Common& c,
              RunManifest& manifest, std::ostream& out, std::ostream& err) {
  std::vector<double> r;
  std::stringstream ss(ratios_text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      r.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ArgumentError("bad ratio '" + tok + "'");
    }
  }
  if (r.size() != 3) throw ArgumentError("--ratios needs three comma-separated values");
  const auto set = load_store(input, manifest);
  const auto assignment = split_dataset(set, {r[0], r[1], r[2]}, c.seed, c.task);
  for (const auto& w : assignment.warnings) err << "warning: " << w << "\n";

  const auto dir = prepare_out(c);
  const auto split_path = dir / "split.json";
  detail::write_file(split_path, to_json(assignment).dump(2) + "\n");
  manifest.add_output(split_path);

  const auto companion = labelspace_path_for(input);
  for (auto tag : {SplitTag::train, SplitTag::val, SplitTag::test}) {
    const auto rows = assignment.rows(tag);
    const auto path = dir / (std::string(to_string(tag)) + ".emb");
    write_store(set.select(rows), path);
    manifest.add_output(path);
    if (fs::exists(companion)) {
      fs::copy_file(companion, labelspace_path_for(path), fs::copy_options::overwrite_existing);
      manifest.add_output(labelspace_path_for(path));
    }
  }
  const auto n = assignment.sizes();
  out << "train " << n[0] << "  val " << n[1] << "  test " << n[2] << "\n";
  return kExitOk;
}

int cmd_filter(const fs::path& input, const std::vector<std::string>& exclude,
               const std::string& name, const Common& c, RunManifest& manifest,
               std::ostream& out) {
  const auto set = load_store(input, manifest);
  const std::set<std::string> excluded(exclude.begin(), exclude.end());
  const auto kept = filter_labels(set, c.task, excluded);
  const auto dir = prepare_out(c);
  const auto path = dir / ((name.empty() ? input.stem().string() + ".filtered" : name) + ".emb");
  write_store(kept, path);
  manifest.add_output(path);

  // Label spaces: the filtered task drops the excluded classes, others carry over.
  std::map<std::string, LabelSpace> spaces;
  const auto companion = labelspace_path_for(input);
  if (fs::exists(companion)) {
    manifest.add_input(companion);
    spaces = read_labelspaces(companion);
  } else {
    spaces = derive_labelspaces(set);
  }
  if (auto it = spaces.find(c.task); it != spaces.end()) {
    std::vector<std::string> classes;
    for (const auto& cls : it->second.classes())
      if (!excluded.contains(cls)) classes.push_back(cls);
    it->second = LabelSpace(c.task, classes);
  }
  write_labelspaces(spaces, labelspace_path_for(path));
  manifest.add_output(labelspace_path_for(path));
  out << "kept " << kept.count() << " of " << set.count() << " rows\n";
  return kExitOk;
}

int cmd_zeroshot(const fs::path& bank_path, const fs::path& query_path,
                 const std::string& ls_flag, std::string model, const Common& c,
                 RunManifest& manifest, std::ostream& out) {
  manifest.add_input(bank_path);
  auto bank = read_bank(bank_path);
  if (bank.task() != c.task)
    throw InvariantError("prompt bank is for task '" + bank.task() + "', not '" + c.task + "'");
  const auto query = load_store(query_path, manifest);
  if (!ls_flag.empty() || fs::exists(labelspace_path_for(query_path)))
    bank = bank.aligned_to(resolve_labelspace(ls_flag, query_path, query, c.task, manifest));
  std::vector<Prediction> preds;
  preds.reserve(query.count());
  for (std::size_t i = 0; i < query.count(); ++i) {
    const auto hit = score_zero_shot(query.vector(i), bank);
    preds.push_back({query.meta(i).id, gold_of(query, i, c.task),
                     bank.labelspace().name(hit.row_index), hit.score});
  }
  emit_predictions(preds, bank.labelspace(), model.empty() ? "zeroshot" : model, prepare_out(c),
                   manifest, out);
  return kExitOk;
}

int cmd_knn(const fs::path& ref_path, const fs::path& query_path, std::size_t k,
            const std::string& ls_flag, std::string model, const Common& c, RunManifest& manifest,
            std::ostream& out) {
  const auto ref_set = load_store(ref_path, manifest);
  const auto query = load_store(query_path, manifest);
  const auto ls = resolve_labelspace(ls_flag, ref_path, ref_set, c.task, manifest);
  const auto ref = build_reference(ref_set, c.task, ls);
  ScanOptions scan{.threads = c.threads};
  std::vector<Prediction> preds;
  preds.reserve(query.count());
  for (std::size_t i = 0; i < query.count(); ++i) {
    const auto vote = vote_knn(query.vector(i), ref, k, scan);
    preds.push_back({query.meta(i).id, gold_of(query, i, c.task), ls.name(vote.label), vote.score});
  }
  emit_predictions(preds, ls, model.empty() ? "knn" : model, prepare_out(c), manifest, out);
  return kExitOk;
}

int cmd_probe_train(const fs::path& train_path, const fs::path& val_path,
                    const std::string& ls_flag, TrainConfig cfg, const Common& c,
                    RunManifest& manifest, std::ostream& out) {
  cfg.seed = c.seed;
  const auto train = load_store(train_path, manifest);
  const auto val = load_store(val_path, manifest);
  const auto ls = resolve_labelspace(ls_flag, train_path, train, c.task, manifest);
  const auto result = train_probe(train, val, c.task, ls, cfg, [&](const EpochRecord& e) {
    char line[160];
    std::snprintf(line, sizeof line,
                  "epoch %3zu  train_loss %.6f  train_acc %.4f  val_loss %.6f  val_acc %.4f\n",
                  e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy);
    out << line;
  });
  const auto dir = prepare_out(c);
  const auto probe_path = dir / "probe.prb";
  write_probe(result.probe, cfg, probe_path, {{"best_epoch", result.history.best_epoch}});
  const auto hist_path = dir / "history.json";
  detail::write_file(hist_path, to_json(result.history).dump(2) + "\n");
  manifest.add_output(probe_path);
  manifest.add_output(hist_path);
  out << "best epoch " << result.history.best_epoch << " of " << result.history.epochs_run()
      << (result.history.stopped_early ? " (early stop)" : "") << "\n";
  return kExitOk;
}

int cmd_probe_predict(const fs::path& probe_path, const fs::path& query_path, std::string model,
                      const Common& c, RunManifest& manifest, std::ostream& out) {
  manifest.add_input(probe_path);
  const auto ckpt = read_probe(probe_path);
  const auto& ls = ckpt.probe.labelspace();
  if (!c.task.empty() && c.task != ls.task())
    throw InvariantError("probe was trained for task '" + ls.task() + "', not '" + c.task + "'");
  const auto query = load_store(query_path, manifest);
  std::vector<Prediction> preds;
  preds.reserve(query.count());
  for (std::size_t i = 0; i < query.count(); ++i) {
    const auto z = forward(ckpt.probe, query.vector(i));
    const auto y = argmax(z);
    preds.push_back({query.meta(i).id, gold_of(query, i, ls.task()), ls.name(y), softmax(z)[y]});
  }
  emit_predictions(preds, ls, model.empty() ? "linear" : model, prepare_out(c), manifest, out);
  return kExitOk;
}

int cmd_retrieve(const fs::path& index_path, const std::string& query_path,
                 const std::string& query_id, std::size_t k, bool exclude_self,
                 const std::string& html, const Common& c, RunManifest& manifest,
                 std::ostream& out) {
  const auto indexed = load_store(index_path, manifest);
  const auto index = build_index(indexed);
  struct Query {
    std::string id;
    std::vector<float> vec;
  };
  std::vector<Query> queries;
  if (!query_path.empty()) {
    const auto q = load_store(query_path, manifest);
    for (std::size_t i = 0; i < q.count(); ++i) {
      auto v = q.vector(i);
      queries.push_back({q.meta(i).id, {v.begin(), v.end()}});
    }
  }
  if (!query_id.empty()) {
    const auto& meta = indexed.meta();
    auto it = std::find_if(meta.begin(), meta.end(), [&](const RowMeta& m) { return m.id == query_id; });
    if (it == meta.end()) throw ArgumentError("no indexed row with id '" + query_id + "'");
    auto v = indexed.vector(static_cast<std::size_t>(it - meta.begin()));
    queries.push_back({query_id, {v.begin(), v.end()}});
  }
  if (queries.empty()) throw ArgumentError("retrieve needs --query or --query-id");

  const auto dir = prepare_out(c);
  std::string jsonl;
  std::string sheet = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>retrieval</title>"
                      "<style>td{vertical-align:top;font:12px sans-serif}img{max-height:160px}</style>"
                      "</head><body><table>\n";
  auto image_of = [](const RowMeta& m) {
    auto it = m.labels.find("path");
    return it == m.labels.end() ? m.id : it->second;
  };
  for (const auto& q : queries) {
    RetrieveOptions opt;
    opt.exclude_self = exclude_self;
    opt.query_id = q.id;
    opt.scan.threads = c.threads;
    const auto hits = retrieve(index, q.vec, k, opt);
    nlohmann::json arr = nlohmann::json::array();
    sheet += "<tr><td><b>query</b><br>" + html_escape(q.id) + "</td>";
    for (std::size_t r = 0; r < hits.size(); ++r) {
      const auto& h = hits[r];
      arr.push_back({{"rank", r + 1},
                     {"id", h.id},
                     {"style", h.label("style")},
                     {"genre", h.label("genre")},
                     {"score", h.score}});
      char score[32];
      std::snprintf(score, sizeof score, "%.4f", h.score);
      sheet += "<td><img src=\"" + html_escape(image_of(index.meta()[h.row_index])) + "\"><br>" +
               std::to_string(r + 1) + ". " + html_escape(h.id) + "<br>" +
               html_escape(h.label("style")) + " / " + html_escape(h.label("genre")) + "<br>" +
               score + "</td>";
    }
    sheet += "</tr>\n";
    jsonl += nlohmann::json{{"query", q.id}, {"hits", arr}}.dump() + "\n";
  }
  sheet += "</table></body></html>\n";
  const auto path = dir / "retrieval.jsonl";
  detail::write_file(path, jsonl);
  manifest.add_output(path);
  if (!html.empty()) {
    detail::write_file(html, sheet);
    manifest.add_output(html);
  }
  out << jsonl;
  return kExitOk;
}

int cmd_eval(const fs::path& pred_path, const fs::path& ls_path, const std::string& model,
             bool weighted, const Common& c, RunManifest& manifest, std::ostream& out) {
  manifest.add_input(pred_path);
  manifest.add_input(ls_path);
  const auto preds = read_predictions(pred_path);
  const auto ls = read_labelspace(ls_path, c.task);
  const auto report =
      evaluate_predictions(preds, ls, model, weighted ? Averaging::weighted : Averaging::macro);
  const auto dir = prepare_out(c);
  const auto path = dir / "report.json";
  detail::write_file(path, to_json(report).dump(2) + "\n");
  manifest.add_output(path);
  out << render_report({report}, {model});
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& files, std::vector<std::string> models,
               const Common& c, RunManifest& manifest, std::ostream& out) {
  std::vector<EvalReport> reports;
  for (const auto& f : files) {
    manifest.add_input(f);
    try {
      reports.push_back(report_from_json(nlohmann::json::parse(detail::read_file(f))));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(f + ": " + e.what());
    }
  }
  if (models.empty())
    for (const auto& r : reports)
      if (std::find(models.begin(), models.end(), r.model) == models.end())
        models.push_back(r.model);
  const auto table = render_report(reports, models);
  const auto dir = prepare_out(c);
  const auto path = dir / "report.txt";
  detail::write_file(path, table);
  manifest.add_output(path);
  out << table;
  return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"artlens: classify and retrieve artworks in embedding space", "artlens"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML-like key = value file mirroring the flags");
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  std::string ls_flag, model, name, tmpl, ratios = "0.8,0.1,0.1", query_id, html;
  fs::path input, ref, query, bank, train, val, probe, index, pred;
  std::vector<std::string> exclude, files, models;
  std::size_t k = 1, retrieve_k = 5;
  bool as_bank = false, exclude_self = false, weighted = false;
  TrainConfig cfg;

  auto* ingest = app.add_subcommand("ingest", "Convert JSON-lines vectors into an EMB1 store");
  ingest->add_option("input", input, "JSON lines: {\"id\", \"labels\", \"vector\"}")->required()->check(CLI::ExistingFile);
  ingest->add_option("--name", name, "Output stem (default: input stem)");
  ingest->add_flag("--prompt-bank", as_bank, "Treat rows as per-class prompt embeddings (id = class)");
  ingest->add_option("--template", tmpl, "Prompt template with one <placeholder>");
  add_common(ingest, common, false);

  auto* split = app.add_subcommand("split", "Seeded train/val/test split");
  split->add_option("input", input)->required()->check(CLI::ExistingFile);
  split->add_option("--ratios", ratios, "train,val,test fractions")->capture_default_str();
  add_common(split, common, false);

  auto* filter = app.add_subcommand("filter", "Drop rows whose task label is excluded");
  filter->add_option("input", input)->required()->check(CLI::ExistingFile);
  filter->add_option("--exclude", exclude, "Label to remove (repeatable)")->required();
  filter->add_option("--name", name, "Output stem");
  add_common(filter, common, true);

  auto* zs = app.add_subcommand("zeroshot", "Prompt-bank zero-shot classification");
  zs->add_option("--bank", bank)->required()->check(CLI::ExistingFile);
  zs->add_option("--query", query)->required()->check(CLI::ExistingFile);
  zs->add_option("--labelspace", ls_flag);
  zs->add_option("--model", model, "Model name for the report");
  add_common(zs, common, true);

  auto* knn = app.add_subcommand("knn", "Nearest-neighbour classification against a reference set");
  knn->add_option("--ref", ref)->required()->check(CLI::ExistingFile);
  knn->add_option("--query", query)->required()->check(CLI::ExistingFile);
  knn->add_option("--k", k, "Neighbours (1 = nearest reference label)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  knn->add_option("--labelspace", ls_flag);
  knn->add_option("--model", model);
  add_common(knn, common, true);

  auto* ptrain = app.add_subcommand("probe-train", "Train a linear probe");
  ptrain->add_option("--train", train)->required()->check(CLI::ExistingFile);
  ptrain->add_option("--val", val)->required()->check(CLI::ExistingFile);
  ptrain->add_option("--labelspace", ls_flag);
  ptrain->add_option("--lr", cfg.learning_rate)->capture_default_str();
  ptrain->add_option("--weight-decay", cfg.weight_decay)->capture_default_str();
  ptrain->add_option("--batch-size", cfg.batch_size)->capture_default_str();
  ptrain->add_option("--max-epochs", cfg.max_epochs)->capture_default_str();
  ptrain->add_option("--patience", cfg.patience)->capture_default_str();
  add_common(ptrain, common, true);

  auto* ppred = app.add_subcommand("probe-predict", "Classify with a trained probe");
  ppred->add_option("--probe", probe)->required()->check(CLI::ExistingFile);
  ppred->add_option("--query", query)->required()->check(CLI::ExistingFile);
  ppred->add_option("--model", model);
  add_common(ppred, common, false);

  auto* ret = app.add_subcommand("retrieve", "Exact top-K cosine retrieval");
  ret->add_option("--index", index)->required()->check(CLI::ExistingFile);
  ret->add_option("--query", query, "EMB1 store of query embeddings")->check(CLI::ExistingFile);
  ret->add_option("--query-id", query_id, "Use an indexed row as the query");
  ret->add_option("--k", retrieve_k)->capture_default_str()->check(CLI::PositiveNumber);
  ret->add_flag("--exclude-self", exclude_self, "Drop the query's own row from its results");
  ret->add_option("--html", html, "Write an HTML contact sheet");
  add_common(ret, common, false);

  auto* ev = app.add_subcommand("eval", "Score a predictions file");
  ev->add_option("--pred", pred)->required()->check(CLI::ExistingFile);
  ev->add_option("--labelspace", ls_flag)->required()->check(CLI::ExistingFile);
  ev->add_option("--model", model)->required();
  ev->add_flag("--weighted", weighted, "Support-weighted instead of macro averages");
  add_common(ev, common, true);

  auto* rep = app.add_subcommand("report", "Render evaluation reports as a table");
  rep->add_option("reports", files)->required()->check(CLI::ExistingFile);
  rep->add_option("--models", models, "Row order (default: order of appearance)");
  add_common(rep, common, false);

  std::vector<const char*> argv{"artlens"};
  for (const auto& a : args) argv.push_back(a.c_str());

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  RunManifest manifest(sub->get_name());
  manifest.set_seed(common.seed);
  manifest.set_config({{"args", args}, {"resolved", sub->config_to_str(true, false)}});

  try {
    int rc = kExitOk;
    if (sub == ingest) {
      if (as_bank && common.task.empty()) throw ArgumentError("--prompt-bank needs --task");
      rc = cmd_ingest(input, name, as_bank, tmpl, common, manifest, out);
    } else if (sub == split) {
      rc = cmd_split(input, ratios, common, manifest, out, err);
    } else if (sub == filter) {
      rc = cmd_filter(input, exclude, name, common, manifest, out);
    } else if (sub == zs) {
      rc = cmd_zeroshot(bank, query, ls_flag, model, common, manifest, out);
    } else if (sub == knn) {
      rc = cmd_knn(ref, query, k, ls_flag, model, common, manifest, out);
    } else if (sub == ptrain) {
      rc = cmd_probe_train(train, val, ls_flag, cfg, common, manifest, out);
    } else if (sub == ppred) {
      rc = cmd_probe_predict(probe, query, model, common, manifest, out);
    } else if (sub == ret) {
      rc = cmd_retrieve(index, query.string(), query_id, retrieve_k, exclude_self, html, common,
                        manifest, out);
    } else if (sub == ev) {
      rc = cmd_eval(pred, ls_flag, model, weighted, common, manifest, out);
    } else if (sub == rep) {
      rc = cmd_report(files, models, common, manifest, out);
    }
    manifest.write(prepare_out(common));
    return rc;
  } catch (const Error& e) {
    err << "artlens " << sub->get_name() << ": " << e.what() << "\n";
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "artlens " << sub->get_name() << ": " << e.what() << "\n";
    return kExitDomain;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

} // namespace artlens::cli
