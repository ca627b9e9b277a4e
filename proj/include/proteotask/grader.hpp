#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "proteotask/corpus_io.hpp"
#include "proteotask/tasks.hpp"

namespace proteotask {

struct GradeResult {
  std::string task_type;
  bool parse_ok = false;
  double score = 0.0;
  std::map<std::string, double> field_scores;
  std::optional<std::string> failure;
};

inline bool is_caption_type(TaskType t) {
  return t == TaskType::alignment_caption_b1 || t == TaskType::alignment_caption_b2;
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// Window labels are one letter per position except NA; greedy split is
// unambiguous because bare N is not a valid label in either alphabet.
inline std::vector<std::string> window_tokens(const std::string& s) {
  std::vector<std::string> out;
  for (size_t i = 0; i < s.size();) {
    if (s[i] == 'N' && i + 1 < s.size() && s[i + 1] == 'A') {
      out.push_back("NA");
      i += 2;
    } else {
      out.push_back(std::string(1, s[i]));
      ++i;
    }
  }
  return out;
}

inline const Json* field(const Json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline std::optional<std::string> str_field(const Json& j, const std::string& key) {
  const Json* v = field(j, key);
  if (!v || !v->is_string()) return std::nullopt;
  return v->get<std::string>();
}

inline bool same_unordered_pair(const Json& a, const Json& b) {
  auto ai = str_field(a, "chain_i"), aj = str_field(a, "chain_j");
  auto bi = str_field(b, "chain_i"), bj = str_field(b, "chain_j");
  if (!ai || !aj || !bi || !bj) return false;
  return (*ai == *bi && *aj == *bj) || (*ai == *bj && *aj == *bi);
}

inline std::set<int> int_set(const Json* arr) {
  std::set<int> out;
  if (!arr || !arr->is_array()) return out;
  for (const auto& v : *arr)
    if (v.is_number_integer()) out.insert(v.get<int>());
  return out;
}

inline double equality_score(const Json& target, const Json& output,
                             const std::vector<std::string>& keys) {
  double hit = 0;
  for (const auto& k : keys) {
    const Json* t = field(target, k);
    const Json* o = field(output, k);
    if (t && o && *t == *o) hit += 1;
  }
  return keys.empty() ? 1.0 : hit / keys.size();
}

}  // namespace detail

struct ParsedOutput {
  bool ok = false;
  Json payload;
  std::string reason;
};

// Strict format: exactly one JSON object, tolerating only surrounding
// whitespace. Caption tasks are the exception, graded on the raw text.
// Letter codes (aa, window labels) are upper-cased; bin labels are not.
inline ParsedOutput parse_model_output(TaskType type, const std::string& text) {
  ParsedOutput out;
  std::string body = detail::trim(text);
  if (is_caption_type(type)) {
    out.ok = true;
    out.payload = body;
    return out;
  }
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    out.reason = "output is not a single JSON object";
    return out;
  }

  auto need_string = [&](const char* key) -> bool {
    if (detail::str_field(j, key)) return true;
    out.reason = std::string("missing string field '") + key + "'";
    return false;
  };
  auto need_array_of_objects = [&](const char* key) -> bool {
    const Json* arr = detail::field(j, key);
    if (arr && arr->is_array() &&
        std::all_of(arr->begin(), arr->end(), [](const Json& v) { return v.is_object(); }))
      return true;
    out.reason = std::string("missing object array '") + key + "'";
    return false;
  };

  switch (type) {
    case TaskType::residue_retrieval:
      if (!need_string("aa")) return out;
      j["aa"] = detail::upper(j["aa"].get<std::string>());
      break;
    case TaskType::dssp_seq:
    case TaskType::rsa_seq:
      if (!need_string("labels")) return out;
      j["labels"] = detail::upper(j["labels"].get<std::string>());
      break;
    case TaskType::pair_dist_bin:
      if (!need_string("dist_bin")) return out;
      break;
    case TaskType::pair_contact_yn:
      if (!need_string("choice")) return out;
      break;
    case TaskType::pair_batch:
      if (!need_array_of_objects("pairs")) return out;
      break;
    case TaskType::saltbridge_bin:
      if (!need_string("salt_bridge_bin")) return out;
      break;
    case TaskType::chainpair_graph:
      if (!need_array_of_objects("pairs")) return out;
      break;
    case TaskType::top_chainpair:
      if (!detail::field(j, "top_chain_pair") || !detail::field(j, "top_chain_pair")->is_object()) {
        out.reason = "missing object field 'top_chain_pair'";
        return out;
      }
      break;
    case TaskType::interface_topk:
    case TaskType::hotspot_topk:
      if (!detail::field(j, "chain_pair") || !detail::field(j, "chain_pair")->is_object()) {
        out.reason = "missing object field 'chain_pair'";
        return out;
      }
      break;
    case TaskType::lddt_bin:
      if (!need_string("lddt_bin")) return out;
      break;
    case TaskType::alignment_schema_b1:
      if (!detail::field(j, "global") || !need_array_of_objects("chains")) {
        if (out.reason.empty()) out.reason = "missing object field 'global'";
        return out;
      }
      break;
    case TaskType::alignment_schema_b2:
      if (!detail::field(j, "chain_profile") || !detail::field(j, "chain_profile")->is_object()) {
        out.reason = "missing object field 'chain_profile'";
        return out;
      }
      break;
    case TaskType::ab_cdr_redesign:
      if (!detail::field(j, "answer") || !detail::field(j, "answer")->is_object()) {
        out.reason = "missing object field 'answer'";
        return out;
      }
      break;
    default:
      break;
  }
  out.ok = true;
  out.payload = std::move(j);
  return out;
}

namespace detail {

inline double grade_window(const Json& target, const Json& output) {
  auto gt = window_tokens(target.at("labels").get<std::string>());
  auto pred = window_tokens(str_field(output, "labels").value_or(""));
  if (gt.empty()) return 1.0;
  double hit = 0;
  for (size_t i = 0; i < gt.size() && i < pred.size(); ++i)
    if (gt[i] == pred[i]) hit += 1;
  return hit / gt.size();
}

inline double grade_batch(const Json& target, const Json& output,
                          std::map<std::string, double>& fields) {
  std::map<std::string, std::string> pred;
  const Json* parr = field(output, "pairs");
  if (parr && parr->is_array()) {
    for (const auto& p : *parr) {
      auto id = str_field(p, "pair_id");
      auto bin = str_field(p, "dist_bin");
      if (id && bin && !pred.count(*id)) pred[*id] = *bin;
    }
  }
  const Json& gt = target.at("pairs");
  double hit = 0;
  for (const auto& p : gt) {
    std::string id = p.at("pair_id").get<std::string>();
    bool good = pred.count(id) && pred[id] == p.at("dist_bin").get<std::string>();
    if (good) hit += 1;
  }
  fields["pairs_correct"] = gt.empty() ? 1.0 : hit / gt.size();
  return fields["pairs_correct"];
}

inline double grade_chain_graph(const Json& target, const Json& output) {
  auto canon = [](const Json* arr) {
    std::set<std::pair<std::string, std::string>> out;
    if (!arr || !arr->is_array()) return out;
    for (const auto& p : *arr) {
      auto i = str_field(p, "chain_i"), j = str_field(p, "chain_j");
      if (!i || !j) continue;
      out.insert({std::min(*i, *j), std::max(*i, *j)});
    }
    return out;
  };
  return canon(field(target, "pairs")) == canon(field(output, "pairs")) ? 1.0 : 0.0;
}

// Per-chain overlap against the ranked ground truth; the denominator caps at
// the ground-truth size so structures with short qualifying lists still grade
// to 1.0 when reproduced exactly.
inline double grade_topk(const Json& target, const Json& output,
                         std::map<std::string, double>& fields) {
  int k = target.at("topk").get<int>();
  std::string ci = target.at("chain_pair").at("chain_i").get<std::string>();
  std::string cj = target.at("chain_pair").at("chain_j").get<std::string>();
  double total = 0;
  for (const std::string& chain : {ci, cj}) {
    auto gt = int_set(field(target, chain));
    auto pred = int_set(field(output, chain));
    double s;
    if (gt.empty()) {
      s = pred.empty() ? 1.0 : 0.0;
    } else {
      std::vector<int> inter;
      std::set_intersection(gt.begin(), gt.end(), pred.begin(), pred.end(),
                            std::back_inserter(inter));
      s = static_cast<double>(inter.size()) /
          std::min<size_t>(static_cast<size_t>(k), gt.size());
    }
    fields["chain_" + chain] = s;
    total += s;
  }
  return total / 2.0;
}

inline double grade_schema_b1(const Json& target, const Json& output,
                              std::map<std::string, double>& fields) {
  const Json* tg = field(target, "global");
  const Json* og = field(output, "global");
  fields["num_chains"] =
      (tg && og && field(*tg, "num_chains") && field(*og, "num_chains") &&
       *field(*tg, "num_chains") == *field(*og, "num_chains"))
          ? 1.0
          : 0.0;

  std::map<std::string, const Json*> out_chains;
  const Json* oc = field(output, "chains");
  if (oc && oc->is_array())
    for (const auto& c : *oc) {
      auto id = str_field(c, "chain_id");
      if (id && !out_chains.count(*id)) out_chains[*id] = &c;
    }

  double len = 0, major = 0, frac = 0, run = 0, seg = 0;
  const Json& tc = target.at("chains");
  static const Json empty = Json::object();
  for (const auto& c : tc) {
    std::string id = c.at("chain_id").get<std::string>();
    const Json& o = out_chains.count(id) ? *out_chains[id] : empty;
    len += equality_score(c, o, {"length_bin"});
    major += equality_score(c, o, {"major_secondary_structure"});
    auto sub = [&](const char* key, const std::vector<std::string>& axes) {
      const Json* ts = field(c, key);
      const Json* os = field(o, key);
      return ts && os ? equality_score(*ts, *os, axes) : 0.0;
    };
    frac += sub("secondary_structure_fraction_bins", {"H", "E", "C"});
    run += sub("secondary_structure_longest_run_bins", {"H", "E", "C"});
    seg += sub("secondary_structure_segment_count_bins", {"H", "E"});
  }
  double n = tc.empty() ? 1.0 : static_cast<double>(tc.size());
  fields["length_bin"] = len / n;
  fields["major_ss"] = major / n;
  fields["ss_fraction"] = frac / n;
  fields["longest_run"] = run / n;
  fields["segments"] = seg / n;
  return (fields["num_chains"] + fields["length_bin"] + fields["major_ss"] +
          fields["ss_fraction"] + fields["longest_run"] + fields["segments"]) /
         6.0;
}

inline double grade_schema_b2(const Json& target, const Json& output,
                              std::map<std::string, double>& fields) {
  fields["num_chains"] = equality_score(target, output, {"num_chains"});
  const Json& tp = target.at("chain_profile");
  const Json* op = field(output, "chain_profile");
  static const Json empty = Json::object();
  double len = 0, major = 0;
  for (const auto& [id, tc] : tp.items()) {
    const Json* ocp = op ? field(*op, id) : nullptr;
    const Json& o = ocp ? *ocp : empty;
    len += equality_score(tc, o, {"length_bin"});
    major += equality_score(tc, o, {"major_secondary_structure"});
  }
  double n = tp.empty() ? 1.0 : static_cast<double>(tp.size());
  fields["length_bin"] = len / n;
  fields["major_ss"] = major / n;
  return (fields["num_chains"] + fields["length_bin"] + fields["major_ss"]) / 3.0;
}

}  // namespace detail

// output must come from parse_model_output; categorical comparisons are exact.
inline GradeResult grade_instance(const TaskInstance& inst, const Json& output) {
  TaskType type = task_type_from_name(inst.task_type);
  GradeResult r;
  r.task_type = inst.task_type;
  r.parse_ok = true;

  auto exact = [&](const char* key) {
    auto got = detail::str_field(output, key);
    return got && *got == inst.target.at(key).get<std::string>() ? 1.0 : 0.0;
  };

  switch (type) {
    case TaskType::residue_retrieval:
      r.score = exact("aa");
      break;
    case TaskType::dssp_seq:
    case TaskType::rsa_seq:
      r.score = detail::grade_window(inst.target, output);
      break;
    case TaskType::pair_dist_bin:
      r.score = exact("dist_bin");
      break;
    case TaskType::pair_contact_yn:
      r.score = exact("choice");
      break;
    case TaskType::pair_batch:
      r.score = detail::grade_batch(inst.target, output, r.field_scores);
      break;
    case TaskType::saltbridge_bin:
      r.score = exact("salt_bridge_bin");
      break;
    case TaskType::chainpair_graph:
      r.score = detail::grade_chain_graph(inst.target, output);
      break;
    case TaskType::top_chainpair: {
      const Json* got = detail::field(output, "top_chain_pair");
      r.score = got && detail::same_unordered_pair(inst.target.at("top_chain_pair"), *got) ? 1.0 : 0.0;
      break;
    }
    case TaskType::interface_topk:
    case TaskType::hotspot_topk:
      r.score = detail::grade_topk(inst.target, output, r.field_scores);
      break;
    case TaskType::lddt_bin:
      r.score = exact("lddt_bin");
      break;
    case TaskType::alignment_schema_b1:
      r.score = detail::grade_schema_b1(inst.target, output, r.field_scores);
      break;
    case TaskType::alignment_schema_b2:
      r.score = detail::grade_schema_b2(inst.target, output, r.field_scores);
      break;
    case TaskType::alignment_caption_b1:
    case TaskType::alignment_caption_b2:
      r.score = output.is_string() && output.get<std::string>() ==
                                          inst.target.get<std::string>()
                    ? 1.0
                    : 0.0;
      break;
    case TaskType::ab_cdr_redesign:
      r.score = detail::field(output, "answer") &&
                        *detail::field(output, "answer") == inst.target.at("answer")
                    ? 1.0
                    : 0.0;
      break;
  }
  return r;
}

inline GradeResult grade_text(const TaskInstance& inst, const std::string& response) {
  TaskType type = task_type_from_name(inst.task_type);
  ParsedOutput parsed = parse_model_output(type, response);
  if (!parsed.ok) {
    GradeResult r;
    r.task_type = inst.task_type;
    r.parse_ok = false;
    r.score = 0.0;
    r.failure = parsed.reason;
    return r;
  }
  return grade_instance(inst, parsed.payload);
}

// The target rendered the way a perfect model would answer: caption tasks
// reply with the caption text, everything else with the target JSON.
inline std::string self_response(const TaskInstance& inst) {
  if (is_caption_type(task_type_from_name(inst.task_type)))
    return inst.target.get<std::string>();
  return inst.target.dump();
}

// ---------------------------------------------------------------------------
// Aggregation: per-task accuracies plus the schema-task field breakdown.
// ---------------------------------------------------------------------------

struct TaskAccuracy {
  size_t count = 0;
  double accuracy = 0.0;
};

struct GradeReport {
  size_t responses_per_query = 1;
  size_t total = 0;
  std::map<std::string, TaskAccuracy> per_task;
  std::map<std::string, double> stage1_fields;
  std::optional<double> stage1_overall;
};

inline const std::vector<std::string>& stage1_field_names() {
  static const std::vector<std::string> names = {"num_chains", "length_bin", "major_ss",
                                                 "ss_fraction", "longest_run", "segments"};
  return names;
}

inline GradeReport aggregate_report(const std::vector<GradeResult>& results,
                                    size_t responses_per_query = 1) {
  if (results.empty()) fail(Errc::empty_results, "no grade results to aggregate");
  GradeReport rep;
  rep.responses_per_query = responses_per_query == 0 ? 1 : responses_per_query;
  rep.total = results.size();

  std::map<std::string, std::pair<size_t, double>> sums;
  std::map<std::string, std::pair<size_t, double>> field_sums;
  for (const auto& r : results) {
    auto& s = sums[r.task_type];
    s.first += 1;
    s.second += r.score;
    TaskType type = task_type_from_name(r.task_type);
    if (type == TaskType::alignment_schema_b1 || type == TaskType::alignment_schema_b2) {
      for (const auto& name : stage1_field_names()) {
        auto it = r.field_scores.find(name);
        if (!r.parse_ok) {
          auto& f = field_sums[name];
          f.first += 1;
        } else if (it != r.field_scores.end()) {
          auto& f = field_sums[name];
          f.first += 1;
          f.second += it->second;
        }
      }
    }
  }
  for (const auto& [name, s] : sums)
    rep.per_task[name] = {s.first, s.second / s.first};
  if (!field_sums.empty()) {
    double total = 0;
    size_t n = 0;
    for (const auto& name : stage1_field_names()) {
      auto it = field_sums.find(name);
      if (it == field_sums.end()) continue;
      double acc = it->second.second / it->second.first;
      rep.stage1_fields[name] = acc;
      total += acc;
      ++n;
    }
    rep.stage1_overall = total / n;
  }
  return rep;
}

inline Json report_to_json(const GradeReport& rep) {
  Json j;
  j["responses_per_query"] = rep.responses_per_query;
  j["total_responses"] = rep.total;
  Json tasks;
  for (const auto& [type, _] : task_type_table()) {
    auto it = rep.per_task.find(task_type_name(type));
    if (it == rep.per_task.end()) continue;
    tasks[it->first] = Json{{"responses", it->second.count}, {"accuracy", it->second.accuracy}};
  }
  j["tasks"] = std::move(tasks);
  if (rep.stage1_overall) {
    Json fields;
    for (const auto& name : stage1_field_names()) {
      auto it = rep.stage1_fields.find(name);
      if (it != rep.stage1_fields.end()) fields[name] = it->second;
    }
    fields["overall"] = *rep.stage1_overall;
    j["schema_fields"] = std::move(fields);
  }
  return j;
}

inline std::string report_to_text(const GradeReport& rep) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-28s %10s %10s\n", "task", "responses", "accuracy");
  out += buf;
  out += std::string(50, '-') + "\n";
  for (const auto& [type, _] : task_type_table()) {
    auto it = rep.per_task.find(task_type_name(type));
    if (it == rep.per_task.end()) continue;
    std::snprintf(buf, sizeof buf, "%-28s %10zu %9.2f%%\n", it->first.c_str(),
                  it->second.count, 100.0 * it->second.accuracy);
    out += buf;
  }
  if (rep.stage1_overall) {
    out += "\nschema fields\n" + std::string(50, '-') + "\n";
    for (const auto& name : stage1_field_names()) {
      auto it = rep.stage1_fields.find(name);
      if (it == rep.stage1_fields.end()) continue;
      std::snprintf(buf, sizeof buf, "%-28s %20.2f%%\n", name.c_str(), 100.0 * it->second);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-28s %20.2f%%\n", "overall", 100.0 * *rep.stage1_overall);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\n%zu responses, %zu per query\n", rep.total,
                rep.responses_per_query);
  out += buf;
  return out;
}

// ---------------------------------------------------------------------------
// Joining model outputs to corpus lines. The ordinal is the zero-based line
// index within the instance's structure block, in corpus file order.
// ---------------------------------------------------------------------------

struct ModelResponse {
  std::string structure_id;
  int ordinal = 0;
  std::string response;
};

inline std::vector<ModelResponse> read_model_outputs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot read " + path);
  std::vector<ModelResponse> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": invalid JSON");
    try {
      ModelResponse r;
      r.structure_id = j.at("structure_id").get<std::string>();
      r.ordinal = j.at("ordinal").get<int>();
      if (j.at("response").is_string())
        r.response = j.at("response").get<std::string>();
      else
        r.response = j.at("response").dump();
      out.push_back(std::move(r));
    } catch (const Json::exception& e) {
      fail(Errc::parse_error, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::map<std::pair<std::string, int>, size_t> ordinal_index(
    const std::vector<TaskInstance>& corpus) {
  std::map<std::pair<std::string, int>, size_t> index;
  std::map<std::string, int> next;
  for (size_t i = 0; i < corpus.size(); ++i)
    index[{corpus[i].structure_id, next[corpus[i].structure_id]++}] = i;
  return index;
}

inline std::vector<GradeResult> grade_outputs(const std::vector<TaskInstance>& corpus,
                                              const std::vector<ModelResponse>& responses) {
  auto index = ordinal_index(corpus);
  std::vector<GradeResult> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    auto it = index.find({r.structure_id, r.ordinal});
    if (it == index.end())
      fail(Errc::join_failure, "no corpus line for (" + r.structure_id + ", " +
                                   std::to_string(r.ordinal) + ")");
    out.push_back(grade_text(corpus[it->second], r.response));
  }
  return out;
}

}  // namespace proteotask
