// proteotask: corpus generation, curriculum sampling, anchor export, grading,
// and design evaluation for protein-structure instruction tasks.
//
// Exit codes: 0 ok, 1 check failure or usage error, 2 config error,
// 3 data error, 4 join failure.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "proteotask/anchors.hpp"
#include "proteotask/complex_json.hpp"
#include "proteotask/corpus_io.hpp"
#include "proteotask/curriculum.hpp"
#include "proteotask/design_eval.hpp"
#include "proteotask/grader.hpp"
#include "proteotask/labels.hpp"
#include "proteotask/readers.hpp"
#include "proteotask/tasks.hpp"

namespace fs = std::filesystem;
namespace pt = proteotask;
using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Run configuration: one versioned JSON document; flags override keys.
// ---------------------------------------------------------------------------

struct RunConfig {
  std::string structures_dir;
  std::string annotations_dir;
  std::string hidden_vectors;
  std::string params_file;
  std::string corpus_file;
  std::string model_outputs;
  std::string pairs_file;
  std::string output_dir = ".";
  uint64_t seed = 0;
  int stage = 0;  // 0 = all stages
  std::string phase;
  int per_type = 1;
  std::map<std::string, long long> counts;
  long long replay_capacity = 100000;
  int workers = 0;  // 0 = hardware concurrency
  bool skip_errors = false;
  int responses_per_query = 1;
  size_t d_gen = 0;
  size_t d_llm = 0;

  Json to_json() const {
    Json j;
    j["format_version"] = 1;
    j["structures_dir"] = structures_dir;
    j["annotations_dir"] = annotations_dir;
    j["hidden_vectors"] = hidden_vectors;
    j["params_file"] = params_file;
    j["corpus_file"] = corpus_file;
    j["model_outputs"] = model_outputs;
    j["pairs_file"] = pairs_file;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    j["stage"] = stage;
    j["phase"] = phase;
    j["per_type"] = per_type;
    Json c;
    for (const auto& [k, v] : counts) c[k] = v;
    j["counts"] = std::move(c);
    j["replay_capacity"] = replay_capacity;
    j["skip_errors"] = skip_errors;
    j["responses_per_query"] = responses_per_query;
    j["d_gen"] = d_gen;
    j["d_llm"] = d_llm;
    return j;
  }
};

[[noreturn]] void config_fail(const std::string& msg) {
  pt::fail(pt::Errc::config_error, msg);
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;

  std::ifstream in(path, std::ios::binary);
  if (!in) config_fail("cannot open config " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) config_fail(path + ": config is not a JSON object");

  static const std::set<std::string> known = {
      "format_version", "structures_dir", "annotations_dir", "hidden_vectors",
      "params_file",    "corpus_file",    "model_outputs",   "pairs_file",
      "output_dir",     "seed",           "stage",           "phase",
      "per_type",       "counts",         "replay_capacity", "workers",
      "skip_errors",    "responses_per_query",               "d_gen",
      "d_llm",          "bin_rules"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) config_fail(path + ": unknown config key \"" + key + "\"");

  try {
    if (j.value("format_version", 0) != 1)
      config_fail(path + ": format_version must be 1");
    cfg.structures_dir = j.value("structures_dir", cfg.structures_dir);
    cfg.annotations_dir = j.value("annotations_dir", cfg.annotations_dir);
    cfg.hidden_vectors = j.value("hidden_vectors", cfg.hidden_vectors);
    cfg.params_file = j.value("params_file", cfg.params_file);
    cfg.corpus_file = j.value("corpus_file", cfg.corpus_file);
    cfg.model_outputs = j.value("model_outputs", cfg.model_outputs);
    cfg.pairs_file = j.value("pairs_file", cfg.pairs_file);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.stage = j.value("stage", cfg.stage);
    cfg.phase = j.value("phase", cfg.phase);
    cfg.per_type = j.value("per_type", cfg.per_type);
    if (j.contains("counts")) {
      if (!j["counts"].is_object()) config_fail(path + ": counts must be an object");
      for (const auto& [k, v] : j["counts"].items()) cfg.counts[k] = v.get<long long>();
    }
    cfg.replay_capacity = j.value("replay_capacity", cfg.replay_capacity);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.skip_errors = j.value("skip_errors", cfg.skip_errors);
    cfg.responses_per_query = j.value("responses_per_query", cfg.responses_per_query);
    cfg.d_gen = j.value("d_gen", cfg.d_gen);
    cfg.d_llm = j.value("d_llm", cfg.d_llm);
    if (j.contains("bin_rules") && !(j["bin_rules"].is_object() && j["bin_rules"].empty()))
      config_fail(path + ": bin_rules is reserved; only {} is accepted");
  } catch (const nlohmann::json::exception& e) {
    config_fail(path + ": " + e.what());
  }

  if (cfg.stage < 0 || cfg.stage > 3) config_fail(path + ": stage must be 0..3");
  if (cfg.per_type < 0) config_fail(path + ": per_type must be >= 0");
  if (cfg.workers < 0) config_fail(path + ": workers must be >= 0");
  if (cfg.replay_capacity < 0) config_fail(path + ": replay_capacity must be >= 0");
  if (cfg.responses_per_query < 1) config_fail(path + ": responses_per_query must be >= 1");
  for (const auto& [k, v] : cfg.counts)
    if (v < 0) config_fail(path + ": counts." + k + " must be >= 0");
  return cfg;
}

struct Overrides {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> stage;
  std::optional<std::string> phase;
  std::optional<int> workers;
  bool skip_errors = false;
  std::optional<std::string> output_dir;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "global seed (overrides config)");
  cmd->add_option("--stage", o.stage, "task stage: 1, 2, 3, or all");
  cmd->add_option("--phase", o.phase, "curriculum phase name (M0..M3)");
  cmd->add_option("--workers", o.workers, "worker thread count (0 = hardware)");
  cmd->add_flag("--skip-errors", o.skip_errors, "skip structures that fail instead of aborting");
  cmd->add_option("--output-dir", o.output_dir, "directory for generated files");
}

RunConfig effective_config(const Overrides& o) {
  RunConfig cfg = load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.stage) {
    if (*o.stage == "all")
      cfg.stage = 0;
    else if (*o.stage == "1" || *o.stage == "2" || *o.stage == "3")
      cfg.stage = (*o.stage)[0] - '0';
    else
      config_fail("--stage must be 1, 2, 3, or all");
  }
  if (o.phase) cfg.phase = *o.phase;
  if (o.workers) {
    if (*o.workers < 0) config_fail("--workers must be >= 0");
    cfg.workers = *o.workers;
  }
  if (o.skip_errors) cfg.skip_errors = true;
  if (o.output_dir) cfg.output_dir = *o.output_dir;
  return cfg;
}

// ---------------------------------------------------------------------------
// Structure loading: sorted directory scan plus an optional parsed cache.
// ---------------------------------------------------------------------------

struct StructureJob {
  fs::path path;
  std::string id;
};

bool structure_ext(const fs::path& p) {
  auto e = p.extension().string();
  return e == ".pdb" || e == ".ent" || e == ".cif" || e == ".mmcif";
}

std::vector<StructureJob> list_structures(const std::string& dir) {
  if (dir.empty()) config_fail("structures_dir is not set");
  if (!fs::is_directory(dir)) config_fail("structures_dir does not exist: " + dir);
  std::vector<StructureJob> jobs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !structure_ext(entry.path())) continue;
    jobs.push_back({entry.path(), pt::structure_id_from_path(entry.path().string())});
  }
  std::sort(jobs.begin(), jobs.end(), [](const StructureJob& a, const StructureJob& b) {
    return a.id != b.id ? a.id < b.id : a.path < b.path;
  });
  for (size_t i = 1; i < jobs.size(); ++i)
    if (jobs[i].id == jobs[i - 1].id)
      pt::fail(pt::Errc::parse_error, "duplicate structure id " + jobs[i].id + " (" +
                                          jobs[i - 1].path.string() + ", " + jobs[i].path.string() +
                                          ")");
  if (jobs.empty()) pt::fail(pt::Errc::empty_results, "no structure files in " + dir);
  return jobs;
}

pt::Complex parse_structure_text(const fs::path& path, const std::string& text,
                                 const std::string& id) {
  auto e = path.extension().string();
  if (e == ".cif" || e == ".mmcif") return pt::read_mmcif_string(text, id);
  if (e == ".pdb" || e == ".ent") return pt::read_pdb_string(text, id);
  pt::fail(pt::Errc::parse_error, "unrecognized structure extension: " + path.string());
}

// PROTEO_TASKGEN_CACHE keys parsed structures by content hash, so edits to a
// file invalidate its entry and two files with one id cannot collide.
pt::Complex load_structure(const StructureJob& job) {
  std::string text = pt::read_text_file(job.path.string());
  const char* cache_dir = std::getenv("PROTEO_TASKGEN_CACHE");
  if (!cache_dir || !*cache_dir) return parse_structure_text(job.path, text, job.id);

  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(pt::fnv1a64(text)));
  fs::path entry = fs::path(cache_dir) / (job.id + "-" + hex + ".json");
  if (fs::exists(entry)) {
    try {
      return pt::complex_from_json(Json::parse(pt::read_text_file(entry.string())));
    } catch (...) {
      // stale or corrupt entry: fall through and reparse
    }
  }
  pt::Complex cx = parse_structure_text(job.path, text, job.id);
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  std::ofstream out(entry, std::ios::binary);
  if (out) out << pt::complex_to_json(cx).dump();
  return cx;
}

std::optional<pt::CdrAnnotation> load_annotation(const std::string& dir, const std::string& id) {
  if (dir.empty()) return std::nullopt;
  fs::path p = fs::path(dir) / (id + ".json");
  if (!fs::exists(p)) return std::nullopt;
  Json j = Json::parse(pt::read_text_file(p.string()), nullptr, false);
  if (j.is_discarded()) pt::fail(pt::Errc::parse_error, p.string() + ": invalid JSON");
  return pt::annotation_from_json(j);
}

// Parallel map over structures with a deterministic merge: results land in
// job order no matter which worker produced them.
template <typename R, typename F>
std::vector<R> map_structures(const std::vector<StructureJob>& jobs, const RunConfig& cfg, F&& fn) {
  std::vector<std::optional<R>> slots(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<size_t> next{0};

  size_t n = cfg.workers > 0 ? static_cast<size_t>(cfg.workers)
                             : std::max(1u, std::thread::hardware_concurrency());
  n = std::min(n, jobs.size());
  auto run = [&] {
    for (size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      try {
        slots[i] = fn(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (n <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }

  std::vector<R> out;
  out.reserve(jobs.size());
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) {
      if (!cfg.skip_errors) std::rethrow_exception(errors[i]);
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        std::cerr << "skip " << jobs[i].id << ": " << e.what() << "\n";
      }
      continue;
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (!fs::is_directory(cfg.output_dir))
    config_fail("cannot create output_dir " + cfg.output_dir);
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg) {
  auto jobs = list_structures(cfg.structures_dir);
  pt::GenOptions opt;
  opt.stage = cfg.stage;
  opt.per_type = cfg.per_type;

  auto per_structure = [&](const StructureJob& job) {
    pt::StructureContext ctx = pt::make_context(load_structure(job),
                                                load_annotation(cfg.annotations_dir, job.id));
    return pt::generate_for_structure(ctx, cfg.seed, opt);
  };
  auto blocks = map_structures<std::vector<pt::TaskInstance>>(jobs, cfg, per_structure);

  std::vector<pt::TaskInstance> corpus;
  for (auto& b : blocks)
    for (auto& inst : b) corpus.push_back(std::move(inst));

  ensure_output_dir(cfg);
  std::string hash = pt::config_hash_hex(cfg.to_json());
  fs::path corpus_path = fs::path(cfg.output_dir) / "corpus.jsonl";
  fs::path manifest_path = fs::path(cfg.output_dir) / "manifest.json";
  pt::write_corpus_jsonl(corpus_path.string(), corpus);
  pt::write_manifest(manifest_path.string(), pt::make_manifest(corpus, hash, cfg.seed));
  std::cerr << "config_hash=" << hash << " structures=" << blocks.size()
            << " instances=" << corpus.size() << " -> " << corpus_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

int cmd_sample(const RunConfig& cfg) {
  auto jobs = list_structures(cfg.structures_dir);
  pt::GenOptions opt;
  opt.stage = 2;
  opt.per_type = cfg.per_type;

  auto per_structure = [&](const StructureJob& job) {
    pt::StructureContext ctx = pt::make_context(load_structure(job),
                                                load_annotation(cfg.annotations_dir, job.id));
    return pt::generate_for_structure(ctx, cfg.seed, opt);
  };
  auto blocks = map_structures<std::vector<pt::TaskInstance>>(jobs, cfg, per_structure);

  pt::TaskPools pools;
  for (auto& b : blocks)
    for (auto& inst : b) pools[pt::task_type_from_name(inst.task_type)].push_back(std::move(inst));

  const auto& phases = pt::curriculum_phases();
  std::vector<size_t> selected;
  for (size_t i = 0; i < phases.size(); ++i)
    if (cfg.phase.empty() || phases[i].name == cfg.phase) selected.push_back(i);
  if (selected.empty()) config_fail("unknown curriculum phase: " + cfg.phase);

  ensure_output_dir(cfg);
  std::string hash = pt::config_hash_hex(cfg.to_json());
  for (size_t pi : selected) {
    const auto& phase = phases[pi];
    long long n = phase.total;
    if (auto it = cfg.counts.find(phase.name); it != cfg.counts.end()) n = it->second;

    // The replay buffer is rebuilt from the pools of every strictly earlier
    // phase's active types, so a single-phase run draws the same replay
    // stream as a full curriculum run.
    pt::ReplayBuffer buffer;
    buffer.capacity = static_cast<size_t>(cfg.replay_capacity);
    std::set<pt::TaskType> earlier;
    for (size_t q = 0; q < pi; ++q)
      for (const auto& [type, w] : phases[q].weights)
        if (earlier.insert(type).second)
          for (const auto& inst : pools[type]) buffer.push(inst);

    uint64_t phase_seed = pt::instance_seed(cfg.seed, "curriculum", phase.name, 0);
    auto sampled =
        pt::sample_curriculum(phase, buffer, static_cast<size_t>(n), phase_seed, pools);

    Json pj;
    pj["name"] = phase.name;
    pj["requested"] = n;
    Json w, r;
    for (const auto& [type, frac] : phase.weights) w[pt::task_type_name(type)] = frac;
    for (const auto& [type, frac] : phase.replay) r[pt::task_type_name(type)] = frac;
    pj["weights"] = std::move(w);
    pj["replay"] = std::move(r);

    fs::path corpus_path = fs::path(cfg.output_dir) / ("corpus_" + phase.name + ".jsonl");
    fs::path manifest_path = fs::path(cfg.output_dir) / ("manifest_" + phase.name + ".json");
    pt::write_corpus_jsonl(corpus_path.string(), sampled);
    pt::CorpusManifest m = pt::make_manifest(sampled, hash, cfg.seed);
    m.phase = std::move(pj);
    pt::write_manifest(manifest_path.string(), m);
    std::cerr << "config_hash=" << hash << " phase=" << phase.name
              << " sampled=" << sampled.size() << " -> " << corpus_path.string() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// anchors
// ---------------------------------------------------------------------------

int cmd_anchors(const RunConfig& cfg) {
  if (cfg.annotations_dir.empty()) config_fail("annotations_dir is not set");
  if (!fs::is_directory(cfg.annotations_dir))
    config_fail("annotations_dir does not exist: " + cfg.annotations_dir);
  if (cfg.hidden_vectors.empty()) config_fail("hidden_vectors is not set");
  if (!fs::exists(cfg.hidden_vectors))
    config_fail("hidden_vectors does not exist: " + cfg.hidden_vectors);

  pt::AnchorParams params;
  bool initialized = false;
  if (!cfg.params_file.empty()) {
    if (cfg.d_gen || cfg.d_llm)
      params = pt::load_or_init_params(cfg.params_file, cfg.d_gen, cfg.d_llm, cfg.seed);
    else
      params = pt::load_params(cfg.params_file);
  } else {
    if (!cfg.d_gen || !cfg.d_llm)
      config_fail("anchors needs params_file or both d_gen and d_llm");
    params = pt::init_params(cfg.d_gen, cfg.d_llm, cfg.seed);
    initialized = true;
  }

  auto sidecar = pt::load_hidden_sidecar(cfg.hidden_vectors);
  auto jobs = list_structures(cfg.structures_dir);
  ensure_output_dir(cfg);

  auto per_structure = [&](const StructureJob& job) -> size_t {
    auto ann = load_annotation(cfg.annotations_dir, job.id);
    if (!ann) {
      std::cerr << "skip " << job.id << ": no annotation\n";
      return 0;
    }
    pt::Complex cx = load_structure(job);
    pt::HiddenMap hidden;
    if (auto it = sidecar.find(job.id); it != sidecar.end()) hidden = it->second;
    pt::AnchorSpec spec = pt::make_anchor_spec(cx, *ann, hidden);
    pt::AnchorOutput out =
        pt::build_anchors(pt::flattened_identities(cx), spec, params.table, params.proj);
    fs::path path = fs::path(cfg.output_dir) / (job.id + ".anchors.jsonl");
    pt::export_anchor_output(path.string(), pt::flattened_refs(cx), out);
    return 1;
  };
  auto done = map_structures<size_t>(jobs, cfg, per_structure);

  std::string hash = pt::config_hash_hex(cfg.to_json());
  if (initialized) {
    fs::path ppath = fs::path(cfg.output_dir) / "anchor_params.bin";
    pt::save_params(ppath.string(), params, "f64");
    std::cerr << "initialized params d_gen=" << cfg.d_gen << " d_llm=" << cfg.d_llm << " -> "
              << ppath.string() << "\n";
  }
  size_t exported = 0;
  for (size_t d : done) exported += d;
  std::cerr << "config_hash=" << hash << " anchored=" << exported << "/" << jobs.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// grade
// ---------------------------------------------------------------------------

int cmd_grade(const RunConfig& cfg) {
  if (cfg.corpus_file.empty()) config_fail("corpus_file is not set");
  if (cfg.model_outputs.empty()) config_fail("model_outputs is not set");

  auto corpus = pt::read_corpus_jsonl(cfg.corpus_file);
  auto responses = pt::read_model_outputs(cfg.model_outputs);
  auto results = pt::grade_outputs(corpus, responses);
  auto report = pt::aggregate_report(results, static_cast<size_t>(cfg.responses_per_query));

  size_t parse_failures = 0;
  for (const auto& r : results)
    if (!r.parse_ok) ++parse_failures;

  Json j = pt::report_to_json(report);
  j["parse_failures"] = parse_failures;
  std::string text = pt::report_to_text(report);
  text += "parse failures: " + std::to_string(parse_failures) + "\n";

  ensure_output_dir(cfg);
  fs::path jpath = fs::path(cfg.output_dir) / "report.json";
  fs::path tpath = fs::path(cfg.output_dir) / "report.txt";
  std::ofstream(jpath, std::ios::binary) << j.dump(2) << "\n";
  std::ofstream(tpath, std::ios::binary) << text;
  std::cout << text;
  std::cerr << "config_hash=" << pt::config_hash_hex(cfg.to_json()) << " graded=" << results.size()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const RunConfig& cfg) {
  if (cfg.pairs_file.empty()) config_fail("pairs_file is not set");
  Json manifest = Json::parse(pt::read_text_file(cfg.pairs_file), nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("pairs") ||
      !manifest["pairs"].is_array())
    pt::fail(pt::Errc::parse_error, cfg.pairs_file + ": expected {\"pairs\": [...]}");
  if (manifest["pairs"].empty())
    pt::fail(pt::Errc::empty_results, cfg.pairs_file + ": no pairs listed");

  Json per_pair;
  std::vector<Json> reports;
  for (const auto& entry : manifest["pairs"]) {
    std::string id = entry.at("id").get<std::string>();
    std::string ref_path = entry.at("reference").get<std::string>();
    std::string gen_path = entry.at("generated").get<std::string>();
    std::string ann_path = entry.at("annotation").get<std::string>();

    pt::Complex ref = pt::read_structure_file(ref_path);
    pt::Complex gen = pt::read_structure_file(gen_path);
    Json aj = Json::parse(pt::read_text_file(ann_path), nullptr, false);
    if (aj.is_discarded()) pt::fail(pt::Errc::parse_error, ann_path + ": invalid JSON");
    pt::CdrAnnotation ann = pt::annotation_from_json(aj);

    pt::EvalOptions opt;
    if (entry.contains("prediction")) {
      std::string ppath = entry["prediction"].get<std::string>();
      Json pj = Json::parse(pt::read_text_file(ppath), nullptr, false);
      if (pj.is_discarded()) pt::fail(pt::Errc::parse_error, ppath + ": invalid JSON");
      opt.prediction = pt::prediction_from_json(pj);
    }
    if (entry.contains("if_aar")) opt.if_aar = entry["if_aar"].get<double>();

    Json rep = pt::evaluate_pair(ref, gen, ann, opt);
    reports.push_back(rep);
    per_pair[id] = std::move(rep);
  }

  Json agg = pt::aggregate_eval(reports);
  Json out;
  out["pairs"] = std::move(per_pair);
  out["aggregate"] = agg;
  std::string text = pt::eval_report_text(agg);

  ensure_output_dir(cfg);
  fs::path jpath = fs::path(cfg.output_dir) / "eval.json";
  fs::path tpath = fs::path(cfg.output_dir) / "eval.txt";
  std::ofstream(jpath, std::ios::binary) << out.dump(2) << "\n";
  std::ofstream(tpath, std::ios::binary) << text;
  std::cout << text;
  std::cerr << "config_hash=" << pt::config_hash_hex(cfg.to_json())
            << " pairs=" << reports.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify-fixtures: recompute golden values on locally downloaded PDB entries.
// ---------------------------------------------------------------------------

struct CheckResult {
  std::string name;
  std::string status;  // ok | fail | skip
  double score = 0.0;
  std::string detail;
};

struct FixtureSet {
  std::map<std::string, pt::Complex> complexes;
  std::map<std::string, pt::LabelSet> labels;
  std::set<std::string> missing;

  const pt::Complex& cx(const std::string& id) const { return complexes.at(id); }
  const pt::LabelSet& ls(const std::string& id) const { return labels.at(id); }
  bool has(const std::string& id) const { return complexes.count(id) > 0; }
};

FixtureSet load_fixtures(const std::string& dir, const std::vector<std::string>& ids) {
  FixtureSet set;
  for (const auto& id : ids) {
    fs::path found;
    for (const char* ext : {".cif", ".mmcif", ".pdb", ".ent"}) {
      fs::path p = fs::path(dir) / (id + ext);
      if (fs::exists(p)) {
        found = p;
        break;
      }
    }
    if (found.empty()) {
      set.missing.insert(id);
      continue;
    }
    pt::Complex cx = pt::read_structure_file(found.string());
    set.labels[id] = pt::compute_labels(cx);
    set.complexes[id] = std::move(cx);
  }
  return set;
}

std::string ss_window(const FixtureSet& fx, const std::string& id, const std::string& chain,
                      int lo, int hi) {
  const auto& cx = fx.cx(id);
  const auto& ls = fx.ls(id);
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    if (cx.chains[ci].id != chain) continue;
    std::string out;
    for (int pos = lo; pos <= hi; ++pos)
      out += pt::ss3_token(ls.ss3.at(ci).at(static_cast<size_t>(pos) - 1));
    return out;
  }
  pt::fail(pt::Errc::unknown_chain, id + " has no chain " + chain);
}

std::string rsa_window(const FixtureSet& fx, const std::string& id, const std::string& chain,
                       int lo, int hi) {
  const auto& cx = fx.cx(id);
  const auto& ls = fx.ls(id);
  for (size_t ci = 0; ci < cx.chains.size(); ++ci) {
    if (cx.chains[ci].id != chain) continue;
    std::string out;
    for (int pos = lo; pos <= hi; ++pos)
      out += pt::rsa_token(ls.rsa.bin.at(ci).at(static_cast<size_t>(pos) - 1));
    return out;
  }
  pt::fail(pt::Errc::unknown_chain, id + " has no chain " + chain);
}

double window_agreement(const std::string& got, const std::string& want) {
  if (want.empty()) return 0.0;
  size_t hit = 0;
  for (size_t i = 0; i < want.size() && i < got.size(); ++i)
    if (got[i] == want[i]) ++hit;
  return static_cast<double>(hit) / want.size();
}

double list_overlap(const std::vector<int>& got, const std::vector<int>& want) {
  if (want.empty()) return 0.0;
  std::set<int> g(got.begin(), got.end());
  size_t hit = 0;
  for (int v : want)
    if (g.count(v)) ++hit;
  return static_cast<double>(hit) / want.size();
}

template <typename F>
void run_check(std::vector<CheckResult>& out, const FixtureSet& fx, const std::string& fixture,
               const std::string& name, F&& fn) {
  CheckResult r;
  r.name = name;
  if (!fx.has(fixture)) {
    r.status = "skip";
    r.detail = fixture + " not downloaded";
    out.push_back(std::move(r));
    return;
  }
  try {
    r.score = fn(r.detail);
    r.status = r.score == 1.0 ? "ok" : "fail";
  } catch (const std::exception& e) {
    r.score = 0.0;
    r.status = "fail";
    r.detail = e.what();
  }
  out.push_back(std::move(r));
}

const char* kSchema8af7 = R"({
  "task_type": "ALIGNMENT_SCHEMA_B1_V2",
  "global": {"num_chains": 1},
  "chains": [
    {
      "chain_id": "A",
      "length_bin": "200-300",
      "secondary_structure_fraction_bins": {"H": "40-50", "E": "20-30", "C": "20-30"},
      "major_secondary_structure": "H",
      "secondary_structure_longest_run_bins": {"H": "9-15", "E": "16-30", "C": "5-8"},
      "secondary_structure_segment_count_bins": {"H": ">5", "E": ">5"}
    }
  ]
})";

const char* kSchema7atf = R"({
  "task_type": "ALIGNMENT_SCHEMA_B1_V2",
  "global": {"num_chains": 2},
  "chains": [
    {
      "chain_id": "A",
      "length_bin": "200-300",
      "secondary_structure_fraction_bins": {"H": "50-60", "E": "20-30", "C": "20-30"},
      "major_secondary_structure": "H",
      "secondary_structure_longest_run_bins": {"H": "16-30", "E": "9-15", "C": "9-15"},
      "secondary_structure_segment_count_bins": {"H": ">5", "E": ">5"}
    },
    {
      "chain_id": "B",
      "length_bin": "200-300",
      "secondary_structure_fraction_bins": {"H": "50-60", "E": "20-30", "C": "20-30"},
      "major_secondary_structure": "H",
      "secondary_structure_longest_run_bins": {"H": "16-30", "E": "9-15", "C": "9-15"},
      "secondary_structure_segment_count_bins": {"H": ">5", "E": ">5"}
    }
  ]
})";

int cmd_verify_fixtures(const std::string& dir, bool json_mode) {
  if (!fs::is_directory(dir)) pt::fail(pt::Errc::io_error, "fixtures dir not found: " + dir);
  FixtureSet fx =
      load_fixtures(dir, {"8jrk", "6sw1", "7ran", "8af7", "7atf"});

  auto residue_check = [&](const std::string& id, const std::string& chain, int pos,
                           char want) {
    return [&fx, id, chain, pos, want](std::string& detail) {
      char got = fx.cx(id).residue_at({chain, pos}).aa;
      detail = std::string("got ") + got + ", want " + want;
      return got == want ? 1.0 : 0.0;
    };
  };

  std::vector<CheckResult> hard;
  run_check(hard, fx, "8jrk", "8jrk residue D22", residue_check("8jrk", "D", 22, 'E'));
  run_check(hard, fx, "6sw1", "6sw1 residue A143", residue_check("6sw1", "A", 143, 'Q'));
  run_check(hard, fx, "7ran", "7ran residue C25", residue_check("7ran", "C", 25, 'C'));
  run_check(hard, fx, "8jrk", "8jrk pair C74-D21 contact bin", [&](std::string& detail) {
    auto g = pt::pair_geometry(fx.cx("8jrk"), {"C", 74}, {"D", 21});
    detail = "contact=" + std::string(g.contact ? "yes" : "no") + " bin=" + g.dist_bin;
    return g.contact && g.dist_bin == "4-6" ? 1.0 : 0.0;
  });
  run_check(hard, fx, "6sw1", "6sw1 pair A70-A223 dist bin", [&](std::string& detail) {
    auto g = pt::pair_geometry(fx.cx("6sw1"), {"A", 70}, {"A", 223});
    detail = "bin=" + g.dist_bin;
    return g.dist_bin == ">16" ? 1.0 : 0.0;
  });
  auto schema_check = [&](const std::string& id, const char* golden) {
    return [&fx, id, golden](std::string& detail) {
      pt::StructureContext ctx = pt::make_context(fx.cx(id));
      pt::TaskInstance inst =
          pt::generate_one(ctx, pt::TaskType::alignment_schema_b1, 1);
      Json want = Json::parse(golden);
      if (inst.target == want) {
        detail = "schema matches";
        return 1.0;
      }
      detail = "schema differs: " + inst.target.dump();
      return 0.0;
    };
  };
  run_check(hard, fx, "8af7", "8af7 schema", schema_check("8af7", kSchema8af7));
  run_check(hard, fx, "7atf", "7atf schema", schema_check("7atf", kSchema7atf));

  auto window_check = [&](const std::string& id, const std::string& chain, int lo, int hi,
                          const std::string& want, bool rsa) {
    return [&fx, id, chain, lo, hi, want, rsa](std::string& detail) {
      std::string got =
          rsa ? rsa_window(fx, id, chain, lo, hi) : ss_window(fx, id, chain, lo, hi);
      detail = "got " + got + ", want " + want;
      return window_agreement(got, want);
    };
  };
  auto graph_check = [&](const std::string& id, const std::string& ci, const std::string& cj) {
    return [&fx, id, ci, cj](std::string& detail) {
      const auto& g = fx.ls(id).graph;
      std::string got;
      for (const auto& p : g.interacting) got += "(" + p.chain_i + "," + p.chain_j + ")";
      detail = "got " + (got.empty() ? "none" : got);
      return g.interacting.size() == 1 && g.interacting[0].chain_i == ci &&
                     g.interacting[0].chain_j == cj
                 ? 1.0
                 : 0.0;
    };
  };
  auto top_check = [&](const std::string& id, const std::string& ci, const std::string& cj) {
    return [&fx, id, ci, cj](std::string& detail) {
      const auto& top = fx.ls(id).graph.top;
      if (!top) {
        detail = "no chain pairs";
        return 0.0;
      }
      detail = "got (" + top->chain_i + "," + top->chain_j + ")";
      return top->chain_i == ci && top->chain_j == cj ? 1.0 : 0.0;
    };
  };
  auto rank_check = [&](const std::string& id, const std::string& ci, const std::string& cj,
                        bool side_i, int k, pt::RankMode mode, std::vector<int> want) {
    return [&fx, id, ci, cj, side_i, k, mode, want](std::string& detail) {
      auto scores = pt::interface_scores(fx.cx(id), {ci, cj});
      auto got = pt::rank_side(side_i ? scores.side_i : scores.side_j, k, mode);
      detail = "got [";
      for (size_t i = 0; i < got.size(); ++i)
        detail += (i ? "," : "") + std::to_string(got[i]);
      detail += "]";
      return list_overlap(got, want);
    };
  };
  auto salt_check = [&](const std::string& id, const std::string& ci, const std::string& cj,
                        const std::string& want) {
    return [&fx, id, ci, cj, want](std::string& detail) {
      std::string got = pt::salt_bridge_bin(fx.cx(id), ci, cj);
      detail = "got " + got + ", want " + want;
      return got == want ? 1.0 : 0.0;
    };
  };

  std::vector<CheckResult> info;
  run_check(info, fx, "8jrk", "8jrk ss window B48-52",
            window_check("8jrk", "B", 48, 52, "EECCH", false));
  run_check(info, fx, "8jrk", "8jrk rsa window E1-5",
            window_check("8jrk", "E", 1, 5, "EEBEM", true));
  run_check(info, fx, "8jrk", "8jrk chain graph", graph_check("8jrk", "C", "D"));
  run_check(info, fx, "8jrk", "8jrk top chain pair", top_check("8jrk", "C", "D"));
  run_check(info, fx, "8jrk", "8jrk interface top10 side C",
            rank_check("8jrk", "C", "D", true, 10, pt::RankMode::interface,
                       {73, 52, 9, 5, 82, 7, 96, 69, 51, 143}));
  run_check(info, fx, "8jrk", "8jrk interface top10 side D",
            rank_check("8jrk", "C", "D", false, 10, pt::RankMode::interface,
                       {6, 7, 9, 8, 11, 20, 89, 33, 151, 13}));
  run_check(info, fx, "8jrk", "8jrk hotspot top5 side C",
            rank_check("8jrk", "C", "D", true, 5, pt::RankMode::hotspot, {73, 52, 82, 7, 9}));
  run_check(info, fx, "8jrk", "8jrk hotspot top5 side D",
            rank_check("8jrk", "C", "D", false, 5, pt::RankMode::hotspot, {6, 7, 8, 9, 11}));
  run_check(info, fx, "8jrk", "8jrk salt bridge bin C-D", salt_check("8jrk", "C", "D", "6-10"));
  run_check(info, fx, "6sw1", "6sw1 ss window A277-281",
            window_check("6sw1", "A", 277, 281, "EECCC", false));
  run_check(info, fx, "6sw1", "6sw1 rsa window A195-199",
            window_check("6sw1", "A", 195, 199, "MMEMB", true));
  run_check(info, fx, "6sw1", "6sw1 pair A58-A201 no contact", [&](std::string& detail) {
    auto g = pt::pair_geometry(fx.cx("6sw1"), {"A", 58}, {"A", 201});
    detail = "contact=" + std::string(g.contact ? "yes" : "no");
    return g.contact ? 0.0 : 1.0;
  });
  run_check(info, fx, "7ran", "7ran ss window B29-33",
            window_check("7ran", "B", 29, 33, "HHHCE", false));
  run_check(info, fx, "7ran", "7ran rsa window B99-103",
            window_check("7ran", "B", 99, 103, "BBMEB", true));
  run_check(info, fx, "7ran", "7ran pair B105-C11 bin", [&](std::string& detail) {
    auto g = pt::pair_geometry(fx.cx("7ran"), {"B", 105}, {"C", 11});
    detail = "contact=" + std::string(g.contact ? "yes" : "no") + " bin=" + g.dist_bin;
    return !g.contact && g.dist_bin == ">14" ? 1.0 : 0.0;
  });
  run_check(info, fx, "7ran", "7ran chain graph", graph_check("7ran", "C", "E"));
  run_check(info, fx, "7ran", "7ran top chain pair", top_check("7ran", "C", "E"));
  run_check(info, fx, "7ran", "7ran interface top10 side C",
            rank_check("7ran", "C", "E", true, 10, pt::RankMode::interface,
                       {283, 281, 284, 279, 282, 324, 280, 40, 298, 300}));
  run_check(info, fx, "7ran", "7ran interface top10 side E",
            rank_check("7ran", "C", "E", false, 10, pt::RankMode::interface,
                       {25, 23, 24, 1, 4, 26, 8, 21, 28, 22}));
  run_check(info, fx, "7ran", "7ran hotspot top5 side C",
            rank_check("7ran", "C", "E", true, 5, pt::RankMode::hotspot, {283, 281, 279, 284, 40}));
  run_check(info, fx, "7ran", "7ran hotspot top5 side E",
            rank_check("7ran", "C", "E", false, 5, pt::RankMode::hotspot, {25, 23, 24, 1, 4}));
  run_check(info, fx, "7ran", "7ran salt bridge bin C-E", salt_check("7ran", "C", "E", "1-2"));

  size_t hard_failed = 0, hard_passed = 0, hard_skipped = 0;
  for (const auto& c : hard) {
    if (c.status == "ok") ++hard_passed;
    if (c.status == "fail") ++hard_failed;
    if (c.status == "skip") ++hard_skipped;
  }
  double info_sum = 0;
  size_t info_run = 0;
  for (const auto& c : info) {
    if (c.status == "skip") continue;
    info_sum += c.score;
    ++info_run;
  }
  double agreement = info_run ? info_sum / info_run : 0.0;

  if (json_mode) {
    auto dump_checks = [](const std::vector<CheckResult>& v) {
      Json arr = Json::array();
      for (const auto& c : v)
        arr.push_back({{"name", c.name}, {"status", c.status}, {"score", c.score},
                       {"detail", c.detail}});
      return arr;
    };
    Json j;
    j["fixtures_dir"] = dir;
    Json missing = Json::array();
    for (const auto& id : fx.missing) missing.push_back(id);
    j["missing"] = std::move(missing);
    j["hard"] = {{"passed", hard_passed},
                 {"failed", hard_failed},
                 {"skipped", hard_skipped},
                 {"checks", dump_checks(hard)}};
    j["informational"] = {{"agreement", agreement},
                          {"evaluated", info_run},
                          {"checks", dump_checks(info)}};
    std::cout << j.dump(2) << "\n";
  } else {
    auto print = [](const std::vector<CheckResult>& v) {
      for (const auto& c : v) {
        std::string tag = c.status == "ok" ? "[ OK ]" : c.status == "fail" ? "[FAIL]" : "[SKIP]";
        std::printf("%s %-34s %s\n", tag.c_str(), c.name.c_str(), c.detail.c_str());
      }
    };
    std::printf("hard checks:\n");
    print(hard);
    std::printf("informational checks:\n");
    print(info);
    std::printf("hard: %zu passed, %zu failed, %zu skipped\n", hard_passed, hard_failed,
                hard_skipped);
    std::printf("informational agreement: %.1f%% over %zu checks\n", 100.0 * agreement, info_run);
  }
  return hard_failed ? 1 : 0;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const pt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case pt::Errc::config_error:
        return 2;
      case pt::Errc::join_failure:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protein structure task corpus generator and evaluation harness"};
  app.require_subcommand(1);

  Overrides gen_o, sample_o, anchors_o, grade_o, eval_o;
  std::optional<int> gen_per_type;
  std::optional<long long> sample_count;
  std::string grade_corpus, grade_outputs_path, eval_pairs;
  std::optional<int> grade_rpq;
  std::string anchors_params, anchors_hidden;
  std::optional<size_t> anchors_dgen, anchors_dllm;
  std::string fixtures_dir = "tests/fixtures/pdb";
  bool fixtures_json = false;

  CLI::App* c_gen = app.add_subcommand("generate", "emit a task corpus over a structure set");
  add_common_flags(c_gen, gen_o);
  c_gen->add_option("--per-type", gen_per_type, "instances per task type per structure");

  CLI::App* c_sample = app.add_subcommand("sample", "draw curriculum phases from pooled tasks");
  add_common_flags(c_sample, sample_o);
  c_sample->add_option("--count", sample_count, "instances to sample per selected phase");

  CLI::App* c_anchors = app.add_subcommand("anchors", "export clamped residue embeddings");
  add_common_flags(c_anchors, anchors_o);
  c_anchors->add_option("--params", anchors_params, "anchor parameter tensor file");
  c_anchors->add_option("--hidden", anchors_hidden, "hidden-state sidecar JSONL");
  c_anchors->add_option("--d-gen", anchors_dgen, "embedding width when initializing");
  c_anchors->add_option("--d-llm", anchors_dllm, "hidden width when initializing");

  CLI::App* c_grade = app.add_subcommand("grade", "score model outputs against a corpus");
  add_common_flags(c_grade, grade_o);
  c_grade->add_option("--corpus", grade_corpus, "corpus JSONL to grade against");
  c_grade->add_option("--outputs", grade_outputs_path, "model outputs JSONL");
  c_grade->add_option("--responses-per-query", grade_rpq, "responses averaged per query");

  CLI::App* c_eval = app.add_subcommand("eval", "evaluate designed structures against references");
  add_common_flags(c_eval, eval_o);
  c_eval->add_option("--pairs", eval_pairs, "pairs manifest JSON");

  CLI::App* c_verify = app.add_subcommand("verify-fixtures",
                                          "recompute golden values on downloaded PDB entries");
  c_verify->add_option("--fixtures", fixtures_dir, "directory holding the fixture files");
  c_verify->add_flag("--json", fixtures_json, "machine-readable output");

  CLI11_PARSE(app, argc, argv);

  if (c_gen->parsed())
    return guarded([&] {
      RunConfig cfg = effective_config(gen_o);
      if (gen_per_type) {
        if (*gen_per_type < 0) config_fail("--per-type must be >= 0");
        cfg.per_type = *gen_per_type;
      }
      return cmd_generate(cfg);
    });
  if (c_sample->parsed())
    return guarded([&] {
      RunConfig cfg = effective_config(sample_o);
      if (sample_count) {
        if (*sample_count < 0) config_fail("--count must be >= 0");
        for (const auto& p : pt::curriculum_phases()) cfg.counts[p.name] = *sample_count;
      }
      return cmd_sample(cfg);
    });
  if (c_anchors->parsed())
    return guarded([&] {
      RunConfig cfg = effective_config(anchors_o);
      if (!anchors_params.empty()) cfg.params_file = anchors_params;
      if (!anchors_hidden.empty()) cfg.hidden_vectors = anchors_hidden;
      if (anchors_dgen) cfg.d_gen = *anchors_dgen;
      if (anchors_dllm) cfg.d_llm = *anchors_dllm;
      return cmd_anchors(cfg);
    });
  if (c_grade->parsed())
    return guarded([&] {
      RunConfig cfg = effective_config(grade_o);
      if (!grade_corpus.empty()) cfg.corpus_file = grade_corpus;
      if (!grade_outputs_path.empty()) cfg.model_outputs = grade_outputs_path;
      if (grade_rpq) {
        if (*grade_rpq < 1) config_fail("--responses-per-query must be >= 1");
        cfg.responses_per_query = *grade_rpq;
      }
      return cmd_grade(cfg);
    });
  if (c_eval->parsed())
    return guarded([&] {
      RunConfig cfg = effective_config(eval_o);
      if (!eval_pairs.empty()) cfg.pairs_file = eval_pairs;
      return cmd_eval(cfg);
    });
  if (c_verify->parsed())
    return guarded([&] { return cmd_verify_fixtures(fixtures_dir, fixtures_json); });
  return 1;
}
