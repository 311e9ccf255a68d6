// Copyright 2026 The divproxy Authors
// SPDX-License-Identifier: Apache-2.0

#include "divproxy/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "divproxy/analysis.hpp"
#include "divproxy/config.hpp"
#include "divproxy/datasets.hpp"
#include "divproxy/embedding.hpp"
#include "divproxy/error.hpp"
#include "divproxy/hashing.hpp"
#include "divproxy/measures.hpp"
#include "divproxy/predictor.hpp"
#include "divproxy/providers.hpp"
#include "divproxy/selection.hpp"

namespace divproxy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t derive(std::uint64_t seed, std::string_view purpose) {
  return mix_seed({seed, fnv1a64(purpose)});
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) throw DataError("cannot write " + path.string());
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    auto item = s.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

// Global options shared by every subcommand.
struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> cache;
  bool replay_only = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) {
    if (fs::path(g.config_path).extension() == ".json") {
      // A previous run's manifest: reuse its config echo.
      json doc;
      try {
        doc = json::parse(read_file(g.config_path));
      } catch (const json::exception& e) {
        throw UsageError("cannot parse manifest " + g.config_path + ": " + e.what());
      }
      if (!doc.contains("config")) throw UsageError(g.config_path + " has no config section");
      cfg = RunConfig::from_json(doc.at("config"));
    } else {
      cfg = RunConfig::load(g.config_path);
    }
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out = *g.out;
  if (g.cache) cfg.cache = *g.cache;
  if (g.replay_only) cfg.replay_only = true;
  cfg.validate();
  return cfg;
}

// Provider and embedder stack for one run, built after validation.
class Runtime {
 public:
  explicit Runtime(const RunConfig& cfg) : cfg_(cfg) {
    const bool replay = cfg.replay_only;
    if (!cfg.cache.empty()) cache_ = std::make_unique<ResponseCache>(cfg.cache);
    const auto mode = replay ? CacheMode::replay_only : CacheMode::read_write;

    std::string provider_id;
    std::string model;
    if (cfg.provider.kind == "simulator") {
      provider_id = "simulator";
      model = "simulator-v1";
      if (!replay) {
        auto sim = std::make_unique<SimulatedProvider>(
            SimulatorConfig{cfg.simulator.correct_prob, cfg.simulator.distractor_count,
                            cfg.simulator.noanswer_prob, derive(cfg.seed, "simulator")});
        sim->set_cot_delta(cfg.simulator.cot_delta);
        simulator_ = sim.get();
        inner_ = std::move(sim);
      }
    } else {
      provider_id = "openai_chat";
      model = cfg.provider.model;
      if (!replay)
        inner_ = std::make_unique<ChatProvider>(ChatProviderConfig{
            cfg.provider.base_url, cfg.provider.model, cfg.api_key(),
            std::chrono::seconds(cfg.provider.timeout_s), cfg.sampling.retry});
    }
    if (cache_)
      caching_ = std::make_unique<CachingProvider>(inner_.get(), *cache_, mode, provider_id, model);

    if (cfg.embedder.kind == "deterministic") {
      embedder_ = std::make_unique<DeterministicEmbedder>(cfg.embedder.dim, derive(cfg.seed, "embedder"));
    } else if (cfg.embedder.kind == "http") {
      if (!replay)
        embedder_ = std::make_unique<HttpEmbedder>(HttpEmbedderConfig{
            cfg.embedder.url, cfg.embedder.model, cfg.api_key(), cfg.sampling.max_concurrency,
            cfg.embedder.batch_size, std::chrono::seconds(cfg.provider.timeout_s), cfg.sampling.retry});
      if (cache_)
        caching_embedder_ = std::make_unique<CachingEmbedder>(
            embedder_.get(), *cache_, mode, cfg.embedder.url + "|" + cfg.embedder.model);
    }
  }

  const Provider& provider() const {
    if (caching_) return *caching_;
    return *inner_;
  }

  const Embedder* embedder() const {
    if (caching_embedder_) return caching_embedder_.get();
    return embedder_.get();
  }

  // Registers a question with the simulator (no-op for other providers).
  // With a correct_prob grid, each question draws its level from the grid.
  void register_question(const DatasetRecord& r) {
    if (simulator_ == nullptr) return;
    std::optional<double> cp;
    const auto& grid = cfg_.simulator.correct_prob_grid;
    if (!grid.empty()) cp = grid[mix_seed({derive(cfg_.seed, "grid"), fnv1a64(r.id)}) % grid.size()];
    simulator_->add_question(r.question, r.truth, r.task, cp);
  }

  void set_prompt_correct_prob(const std::string& prompt_id, double p) {
    if (simulator_ != nullptr) simulator_->set_prompt_correct_prob(prompt_id, p);
  }

 private:
  const RunConfig& cfg_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<Provider> inner_;
  SimulatedProvider* simulator_ = nullptr;
  std::unique_ptr<CachingProvider> caching_;
  std::unique_ptr<Embedder> embedder_;
  std::unique_ptr<CachingEmbedder> caching_embedder_;
};

// Run manifest: everything needed to repeat the run, and no timestamps.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& args, const RunConfig& cfg)
      : doc_{{"tool", "divproxy"},
             {"version", DIVPROXY_VERSION},
             {"command", std::move(command)},
             {"args", args},
             {"seed", cfg.seed},
             {"config", cfg.to_json()},
             {"inputs", json::array()},
             {"outputs", json::object()}} {}

  void input(const fs::path& path, std::string_view content) {
    doc_["inputs"].push_back({{"path", path.string()}, {"fingerprint", fingerprint_hex(content)}});
  }

  void output(const fs::path& dir, const std::string& name, std::string_view content) {
    write_file(dir / name, content);
    doc_["outputs"][name] = fingerprint_hex(content);
  }

  void write(const fs::path& dir) const { write_file(dir / "manifest.json", doc_.dump(2) + "\n"); }

 private:
  json doc_;
};

std::vector<DatasetRecord> load_input_dataset(const std::string& path, const std::string& format,
                                              Manifest& manifest) {
  const auto fmt = parse_dataset_format(format);
  const auto content = read_file(path);
  manifest.input(path, content);
  return parse_dataset(content, fmt);
}

// ---- measure --------------------------------------------------------------

struct MeasureArgs {
  std::string dataset;
  std::string format;
  std::size_t limit = 0;
  std::vector<double> temperatures;
};

int cmd_measure(const MeasureArgs& a, const RunConfig& cfg, const std::vector<std::string>& args,
                std::ostream& out) {
  Manifest manifest("measure", args, cfg);
  auto records = load_input_dataset(a.dataset, a.format, manifest);
  if (a.limit > 0 && records.size() > a.limit) records.resize(a.limit);
  if (records.empty()) throw DataError("dataset " + a.dataset + " has no records");

  Runtime rt(cfg);
  for (const auto& r : records) rt.register_question(r);
  const PromptSpec prompt{"zero-shot", std::string(kDefaultInstruction), {}, false};
  auto temperatures = a.temperatures;
  if (temperatures.empty()) temperatures.push_back(cfg.sampling.temperature);

  std::string jsonl;
  std::string csv = "question_id,temperature,prompt_id,m,entropy,gini,centroid,majority_answer,"
                    "majority_share,truth,correct\n";
  std::size_t failures = 0;
  for (double t : temperatures) {
    SamplingConfig sc = cfg.sampling;
    sc.temperature = t;
    for (const auto& r : records) {
      const auto batch = sample(rt.provider(), prompt, Query{r.id, r.question}, r.task, sc);
      const auto report = diversity_report(batch, rt.embedder(), cfg.diversity);
      const bool correct = grade(report.majority_answer, r.truth, r.task);
      failures += correct ? 0 : 1;
      const auto majority = render_elements(report.majority_answer);
      const auto truth = render_elements(r.truth.answer);
      json row = {{"question_id", r.id},
                  {"temperature", t},
                  {"prompt_id", prompt.id},
                  {"m", sc.m},
                  {"entropy", report.entropy},
                  {"gini", report.gini},
                  {"centroid", report.centroid_distance ? json(*report.centroid_distance) : json(nullptr)},
                  {"majority_answer", majority},
                  {"majority_share", report.majority_share},
                  {"truth", truth},
                  {"correct", correct}};
      jsonl += row.dump() + "\n";
      csv += csv_field(r.id) + "," + format_double(t) + "," + prompt.id + "," + std::to_string(sc.m) + "," +
             format_double(report.entropy) + "," + format_double(report.gini) + "," +
             (report.centroid_distance ? format_double(*report.centroid_distance) : std::string{}) + "," +
             csv_field(majority) + "," + format_double(report.majority_share) + "," + csv_field(truth) + "," +
             (correct ? "true" : "false") + "\n";
    }
  }
  const fs::path dir = cfg.out;
  manifest.output(dir, "measure.jsonl", jsonl);
  manifest.output(dir, "measure.csv", csv);
  manifest.write(dir);
  const auto rows = records.size() * temperatures.size();
  out << "measured " << rows << " rows, failure rate "
      << format_double(static_cast<double>(failures) / static_cast<double>(rows)) << ", wrote "
      << (dir / "measure.jsonl").string() << "\n";
  return kExitOk;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateArgs {
  std::vector<std::string> inputs;
  std::size_t min_bucket = kDefaultMinBucket;
  std::string directions = "max,min";
  std::string measures;
};

std::vector<MeasureRow> parse_measure_rows(std::string_view content, const std::string& path) {
  std::vector<MeasureRow> rows;
  std::size_t line_no = 0;
  std::istringstream in{std::string(content)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      MeasureRow row;
      row.question_id = j.at("question_id").get<std::string>();
      row.temperature = j.at("temperature").get<double>();
      for (const char* key : {"entropy", "gini", "centroid"})
        if (j.contains(key) && !j.at(key).is_null()) row.measures[key] = j.at(key).get<double>();
      row.failed = !j.at("correct").get<bool>();
      rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw ParseError(path + ": " + e.what(), line_no);
    }
  }
  return rows;
}

std::vector<MeasureRow> load_measure_rows(const std::vector<std::string>& inputs, Manifest& manifest) {
  std::vector<MeasureRow> rows;
  for (const auto& path : inputs) {
    const auto content = read_file(path);
    manifest.input(path, content);
    auto part = parse_measure_rows(content, path);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return rows;
}

std::vector<std::string> available_measures(std::span<const MeasureRow> rows) {
  std::vector<std::string> out = {"entropy", "gini"};
  const bool centroid = !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const MeasureRow& r) {
    return r.measures.contains("centroid");
  });
  if (centroid) out.emplace_back("centroid");
  return out;
}

int cmd_calibrate(const CalibrateArgs& a, const RunConfig& cfg, const std::vector<std::string>& args,
                  std::ostream& out) {
  Manifest manifest("calibrate", args, cfg);
  const auto rows = load_measure_rows(a.inputs, manifest);
  std::vector<Direction> directions;
  for (const auto& d : split_list(a.directions, ',')) directions.push_back(parse_direction(d));
  const auto measures = a.measures.empty() ? available_measures(rows) : split_list(a.measures, ',');
  for (const auto& m : measures)
    if (m != "entropy" && m != "gini" && m != "centroid") throw UsageError("unknown measure '" + m + "'");
  if (a.min_bucket == 0) throw UsageError("--min-bucket must be >= 1");

  const auto report = calibration_suite(rows, measures, directions, a.min_bucket);
  const fs::path dir = cfg.out;
  manifest.output(dir, "calibration.csv", report.to_csv());
  manifest.output(dir, "calibration.json", report.summary_json().dump(2) + "\n");
  // One small CSV per curve, ready for plotting.
  for (const auto& e : report.entries) {
    std::string csv = "threshold,failure_probability,support\n";
    for (const auto& p : e.curve.points)
      csv += format_double(p.threshold) + "," + format_double(p.failure_probability) + "," +
             std::to_string(p.support) + "\n";
    const auto name = "plots/" + e.measure + "_" + std::string(to_string(e.curve.direction)) + "_T" +
                      format_double(e.temperature) + ".csv";
    manifest.output(dir, name, csv);
  }
  manifest.write(dir);
  for (const auto& e : report.entries) {
    out << e.measure << " T=" << format_double(e.temperature) << " " << to_string(e.curve.direction) << ": "
        << e.curve.points.size() << " points";
    if (e.curve.fit) out << ", R^2 " << format_double(e.curve.fit->r_squared);
    out << "\n";
  }
  return kExitOk;
}

// ---- select ---------------------------------------------------------------

struct SelectArgs {
  std::string dataset;
  std::string format;
  std::string pool;
  std::string pool_format;
  std::size_t prompts = 20;
  std::size_t shots = 30;
  std::size_t test_count = 100;
  std::string criterion = "entropy";
  bool cot = false;
};

int cmd_select(const SelectArgs& a, const RunConfig& cfg, const std::vector<std::string>& args,
               std::ostream& out) {
  const auto criterion = parse_criterion(a.criterion);
  if (criterion == Criterion::centroid && cfg.embedder.kind == "none")
    throw UsageError("criterion centroid needs an embedder ([embedder] kind)");
  if (a.test_count == 0) throw UsageError("--test-count must be >= 1");

  Manifest manifest("select", args, cfg);
  auto records = load_input_dataset(a.dataset, a.format, manifest);
  std::mt19937_64 rng(derive(cfg.seed, "test-split"));
  std::shuffle(records.begin(), records.end(), rng);

  std::vector<DatasetRecord> test;
  std::vector<DatasetRecord> pool_records;
  if (!a.pool.empty()) {
    pool_records = load_input_dataset(a.pool, a.pool_format.empty() ? a.format : a.pool_format, manifest);
    test.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(std::min(a.test_count, records.size())));
    std::set<std::string> test_ids;
    for (const auto& r : test) test_ids.insert(r.id);
    for (const auto& r : pool_records)
      if (test_ids.contains(r.id))
        throw UsageError("prompt pool and test questions share id '" + r.id + "'");
  } else {
    if (records.size() <= a.test_count)
      throw UsageError("dataset has " + std::to_string(records.size()) + " records; need more than --test-count " +
                       std::to_string(a.test_count) + " to leave a prompt pool");
    test.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(a.test_count));
    pool_records.assign(records.begin() + static_cast<std::ptrdiff_t>(a.test_count), records.end());
  }
  if (test.size() < a.test_count)
    throw UsageError("dataset has only " + std::to_string(test.size()) + " test questions");

  const auto pool = to_pool(pool_records);
  const auto prompt_seed = derive(cfg.seed, "prompts");
  const auto prompts = a.cot ? build_cot_prompts(pool, a.prompts, a.shots, prompt_seed)
                             : build_fewshot_prompts(pool, a.prompts, a.shots, prompt_seed);

  Runtime rt(cfg);
  for (const auto& r : test) rt.register_question(r);
  const auto& probs = cfg.simulator.prompt_correct_probs;
  for (std::size_t i = 0; i < prompts.size() && i < probs.size(); ++i)
    rt.set_prompt_correct_prob(prompts[i].id, probs[i]);

  SelectionOptions options;
  options.criterion = criterion;
  options.diversity = cfg.diversity;
  const auto sweep = selection_sweep(prompts, test, rt.provider(), cfg.sampling, options, rt.embedder());

  const fs::path dir = cfg.out;
  manifest.output(dir, "sweep.json", sweep.to_json().dump(2) + "\n");
  manifest.output(dir, "sweep.csv", sweep.to_csv());
  manifest.write(dir);
  const auto worst = *std::max_element(sweep.individual_failure.begin(), sweep.individual_failure.end());
  out << "selection failure " << format_double(sweep.selection_failure) << ", mean prompt failure "
      << format_double(sweep.mean_individual_failure) << ", worst prompt failure " << format_double(worst)
      << "\n";
  return kExitOk;
}

// ---- train-predictor ------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> inputs;
  std::string masks;
  MlpConfig mlp;
  double test_fraction = 0.3;
  std::string balance = "oversample";
};

std::vector<FeatureMask> default_masks(bool with_centroid) {
  // The full set, each of entropy and Gini removed, and both removed.
  if (with_centroid)
    return {FeatureMask{true, true, true}, FeatureMask{false, true, true}, FeatureMask{true, false, true},
            FeatureMask{false, false, true}};
  return {FeatureMask{true, true, false}, FeatureMask{false, true, false}, FeatureMask{true, false, false}};
}

int cmd_train_predictor(const TrainArgs& a, const RunConfig& cfg, const std::vector<std::string>& args,
                        std::ostream& out) {
  BalanceStrategy strategy;
  if (a.balance == "oversample") {
    strategy = BalanceStrategy::oversample_minority;
  } else if (a.balance == "undersample") {
    strategy = BalanceStrategy::undersample_majority;
  } else {
    throw UsageError("--balance must be oversample or undersample");
  }
  if (!(a.test_fraction > 0.0 && a.test_fraction < 1.0)) throw UsageError("--test-fraction must be in (0, 1)");
  MlpConfig mlp = a.mlp;
  mlp.seed = derive(cfg.seed, "mlp");
  mlp.validate();

  Manifest manifest("train-predictor", args, cfg);
  const auto rows = load_measure_rows(a.inputs, manifest);
  const auto measures = available_measures(rows);
  const bool with_centroid = measures.size() == 3;

  std::vector<FeatureMask> masks;
  if (a.masks.empty()) {
    masks = default_masks(with_centroid);
  } else {
    for (const auto& m : split_list(a.masks, ';')) masks.push_back(FeatureMask::parse(m));
  }
  for (const auto& m : masks) {
    if (m.count() == 0) throw UsageError("feature mask 'none' has nothing to train on");
    if (m.centroid && !with_centroid) throw UsageError("mask " + m.name() + " needs centroid values in every row");
  }

  const FeatureMask full{true, true, with_centroid};
  std::vector<LabeledExample> data;
  data.reserve(rows.size());
  std::size_t positives = 0;
  for (const auto& r : rows) {
    for (const char* key : {"entropy", "gini"})
      if (!r.measures.contains(key)) throw DataError("row " + r.question_id + " lacks " + key);
    FeatureVector f;
    f.mask = full;
    f.values = {r.measures.at("entropy"), r.measures.at("gini")};
    if (with_centroid) f.values.push_back(r.measures.at("centroid"));
    data.push_back(LabeledExample{std::move(f), r.failed});
    positives += r.failed ? 1 : 0;
  }
  if (positives == 0 || positives == data.size())
    throw DataError("training data has a single class (" + std::to_string(positives) + " failures in " +
                    std::to_string(data.size()) + " rows)");

  const auto split = split_train_test(data, a.test_fraction, derive(cfg.seed, "split"));
  auto has_both = [](std::span<const LabeledExample> s) {
    std::size_t pos = 0;
    for (const auto& e : s) pos += e.failed ? 1 : 0;
    return pos > 0 && pos < s.size();
  };
  if (!has_both(split.train)) throw DataError("training split has a single class");
  if (!has_both(split.test)) throw DataError("test split has a single class");

  const auto balance_seed = derive(cfg.seed, "balance");
  const auto rows_out = ablation_study(split.train, split.test, masks, mlp, balance_seed, strategy);

  // The primary model uses the first mask, with the same seeds as its
  // ablation row.
  std::vector<LabeledExample> train_proj;
  std::vector<LabeledExample> test_proj;
  for (const auto& e : split.train) train_proj.push_back({project(e.features, masks.front()), e.failed});
  for (const auto& e : split.test) test_proj.push_back({project(e.features, masks.front()), e.failed});
  const auto balanced = balance(train_proj, balance_seed, strategy);
  const auto model = train_failure_model(balanced, mlp);
  const auto curve = pr_curve(model, test_proj);

  const fs::path dir = cfg.out;
  json model_doc = model.to_json();
  model_doc["features"] = masks.front().name();
  model_doc["config"] = mlp.to_json();
  manifest.output(dir, "model.json", model_doc.dump(2) + "\n");
  manifest.output(dir, "pr_curve.csv", curve.to_csv());
  manifest.output(dir, "ablation.csv", ablation_csv(rows_out));
  manifest.output(dir, "ablation.json", to_json(rows_out).dump(2) + "\n");
  manifest.write(dir);

  out << "features " << masks.front().name() << ": AUPRC " << format_double(curve.auprc) << " (baseline "
      << format_double(curve.baseline) << ")\n";
  for (const auto& r : rows_out)
    out << "  " << r.mask.name() << ": accuracy " << format_double(r.metrics.accuracy) << ", precision "
        << format_double(r.metrics.precision) << ", recall " << format_double(r.metrics.recall) << ", f1 "
        << format_double(r.metrics.f1) << ", auprc " << format_double(r.auprc) << "\n";
  return kExitOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
  std::string kind = "choice";
  std::size_t count = 100;
  std::size_t words_per_name = 2;
  std::size_t options = 4;
};

int cmd_simulate(const SimulateArgs& a, const RunConfig& cfg, const std::vector<std::string>& args,
                 std::ostream& out) {
  if (a.count == 0) throw UsageError("--count must be >= 1");
  const auto seed = derive(cfg.seed, "dataset");
  std::vector<DatasetRecord> records;
  if (a.kind == "ll") {
    records = synthesize_ll(a.count, a.words_per_name, seed);
  } else if (a.kind == "choice") {
    records = synthesize_choice(a.count, a.options, seed);
  } else if (a.kind == "arithmetic") {
    records = synthesize_arithmetic(a.count, seed);
  } else {
    throw UsageError("--kind must be ll, choice or arithmetic");
  }
  Manifest manifest("simulate", args, cfg);
  const fs::path dir = cfg.out;
  manifest.output(dir, "dataset.jsonl", dump_records(records));
  manifest.write(dir);
  out << "wrote " << records.size() << " records to " << (dir / "dataset.jsonl").string()
      << " (format records_jsonl)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diversity measures as a proxy for LLM failure", "divproxy"};
  app.set_version_flag("--version", std::string(DIVPROXY_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Run config (TOML subset) or a previous manifest.json");
  app.add_option("--seed", g.seed, "Run seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory (overrides the config)");
  app.add_option("--cache", g.cache, "Record/replay cache file (JSONL)");
  app.add_flag("--replay-only", g.replay_only, "Serve every response from the cache; never call a provider");

  MeasureArgs ma;
  auto* measure = app.add_subcommand("measure", "Sample each question and write diversity measures");
  measure->add_option("--dataset", ma.dataset, "Dataset file")->required();
  measure->add_option("--format", ma.format, "csqa_json | draw1k_json | ll_json | records_jsonl")->required();
  measure->add_option("--limit", ma.limit, "Use only the first N records");
  measure->add_option("--temperatures", ma.temperatures, "Comma-separated temperatures")->delimiter(',');

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Cumulative failure curves from measure output");
  calibrate->add_option("--input", ca.inputs, "measure.jsonl file (repeatable)")->required();
  calibrate->add_option("--min-bucket", ca.min_bucket, "Minimum support per curve point");
  calibrate->add_option("--directions", ca.directions, "Comma-separated: max, min");
  calibrate->add_option("--measures", ca.measures, "Comma-separated: entropy, gini, centroid");

  SelectArgs sa;
  auto* select = app.add_subcommand("select", "Diversity-based prompt selection sweep");
  select->add_option("--dataset", sa.dataset, "Dataset file")->required();
  select->add_option("--format", sa.format, "Dataset format")->required();
  select->add_option("--pool", sa.pool, "Separate exemplar pool file");
  select->add_option("--pool-format", sa.pool_format, "Pool format (default: --format)");
  select->add_option("--prompts", sa.prompts, "Number of prompts");
  select->add_option("--shots", sa.shots, "Exemplars per prompt");
  select->add_option("--test-count", sa.test_count, "Number of test questions");
  select->add_option("--criterion", sa.criterion, "entropy | gini | centroid");
  select->add_flag("--cot", sa.cot, "Chain-of-thought exemplars");

  TrainArgs ta;
  auto* train = app.add_subcommand("train-predictor", "Train and ablate a failure predictor");
  train->add_option("--input", ta.inputs, "measure.jsonl file (repeatable)")->required();
  train->add_option("--masks", ta.masks, "';'-separated feature masks, e.g. entropy+gini+centroid;centroid");
  train->add_option("--hidden-layers", ta.mlp.hidden_layers, "Hidden layers")->capture_default_str();
  train->add_option("--hidden-width", ta.mlp.hidden_width, "Units per hidden layer")->capture_default_str();
  train->add_option("--epochs", ta.mlp.epochs, "Training epochs")->capture_default_str();
  train->add_option("--learning-rate", ta.mlp.learning_rate, "Adam step size")->capture_default_str();
  train->add_option("--batch-size", ta.mlp.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--test-fraction", ta.test_fraction, "Held-out share of questions")->capture_default_str();
  train->add_option("--balance", ta.balance, "oversample | undersample");

  SimulateArgs sia;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--kind", sia.kind, "ll | choice | arithmetic");
  simulate->add_option("--count", sia.count, "Number of records")->capture_default_str();
  simulate->add_option("--words-per-name", sia.words_per_name, "Words per name (ll)")->capture_default_str();
  simulate->add_option("--options", sia.options, "Options per question (choice)")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const auto cfg = resolve_config(g);
    if (measure->parsed()) return cmd_measure(ma, cfg, args, out);
    if (calibrate->parsed()) return cmd_calibrate(ca, cfg, args, out);
    if (select->parsed()) return cmd_select(sa, cfg, args, out);
    if (train->parsed()) return cmd_train_predictor(ta, cfg, args, out);
    if (simulate->parsed()) return cmd_simulate(sia, cfg, args, out);
    err << "error: no command\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProviderError& e) {
    err << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace divproxy
