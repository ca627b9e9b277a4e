#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "proteotask/errors.hpp"
#include "proteotask/rng.hpp"
#include "proteotask/tasks.hpp"

namespace proteotask {

// Corpus line with fixed key order {task_type, structure_id, seed, prompt, target}.
inline Json instance_to_json(const TaskInstance& inst) {
  Json j;
  j["task_type"] = inst.task_type;
  j["structure_id"] = inst.structure_id;
  j["seed"] = inst.seed;
  j["prompt"] = inst.prompt;
  j["target"] = inst.target;
  return j;
}

inline TaskInstance instance_from_json(const Json& j) {
  try {
    TaskInstance inst;
    inst.task_type = j.at("task_type").get<std::string>();
    inst.structure_id = j.at("structure_id").get<std::string>();
    inst.seed = j.at("seed").get<uint64_t>();
    inst.prompt = j.at("prompt");
    inst.target = j.at("target");
    return inst;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("bad corpus record: ") + e.what());
  }
}

inline void write_corpus_jsonl(const std::string& path, const std::vector<TaskInstance>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  for (const auto& inst : corpus) out << instance_to_json(inst).dump() << '\n';
}

inline std::vector<TaskInstance> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot read " + path);
  std::vector<TaskInstance> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": invalid JSON");
    out.push_back(instance_from_json(j));
  }
  return out;
}

struct CorpusManifest {
  int format_version = 1;
  std::string config_hash;
  uint64_t global_seed = 0;
  std::map<std::string, long long> counts_by_task_type;
  Json phase;  // optional curriculum phase description

  long long total() const {
    long long t = 0;
    for (const auto& [k, v] : counts_by_task_type) t += v;
    return t;
  }
};

inline CorpusManifest make_manifest(const std::vector<TaskInstance>& corpus,
                                    const std::string& config_hash, uint64_t global_seed) {
  CorpusManifest m;
  m.config_hash = config_hash;
  m.global_seed = global_seed;
  for (const auto& inst : corpus) ++m.counts_by_task_type[inst.task_type];
  return m;
}

inline Json manifest_to_json(const CorpusManifest& m) {
  Json j;
  j["format_version"] = m.format_version;
  j["config_hash"] = m.config_hash;
  j["global_seed"] = m.global_seed;
  j["total_instances"] = m.total();
  Json counts;
  for (const auto& [k, v] : m.counts_by_task_type) counts[k] = v;
  j["counts_by_task_type"] = std::move(counts);
  if (!m.phase.is_null()) j["phase"] = m.phase;
  return j;
}

inline void write_manifest(const std::string& path, const CorpusManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << manifest_to_json(m).dump(2) << '\n';
}

inline std::string config_hash_hex(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

}  // namespace proteotask
