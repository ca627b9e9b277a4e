#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "proteotask/errors.hpp"
#include "proteotask/rng.hpp"
#include "proteotask/tasks.hpp"

namespace proteotask {

// One mid-training phase: an active task mixture plus a low-rate replay of
// earlier local-labeling tasks. Fractions over active + replay sum to 1.
struct CurriculumPhase {
  std::string name;
  long long total = 0;
  std::vector<std::pair<TaskType, double>> weights;
  std::vector<std::pair<TaskType, double>> replay;

  double replay_fraction() const {
    double r = 0;
    for (const auto& [t, w] : replay) r += w;
    return r;
  }
};

inline void validate_phase(const CurriculumPhase& phase) {
  double sum = 0;
  for (const auto& [t, w] : phase.weights) {
    if (w < 0) fail(Errc::config_error, phase.name + ": negative weight");
    sum += w;
  }
  for (const auto& [t, w] : phase.replay) {
    if (w < 0) fail(Errc::config_error, phase.name + ": negative replay weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    fail(Errc::config_error, phase.name + ": weights sum to " + std::to_string(sum));
}

inline const std::vector<CurriculumPhase>& curriculum_phases() {
  static const std::vector<CurriculumPhase> phases = {
      {"M0",
       2000000,
       {{TaskType::residue_retrieval, 0.40},
        {TaskType::dssp_seq, 0.35},
        {TaskType::rsa_seq, 0.25}},
       {}},
      {"M1",
       3000000,
       {{TaskType::pair_dist_bin, 0.45},
        {TaskType::pair_contact_yn, 0.40},
        {TaskType::pair_batch, 0.05}},
       {{TaskType::dssp_seq, 0.05}, {TaskType::rsa_seq, 0.05}}},
      {"M2",
       2640000,
       {{TaskType::pair_dist_bin, 0.55},
        {TaskType::pair_batch, 0.20},
        {TaskType::pair_contact_yn, 0.17}},
       {{TaskType::dssp_seq, 0.04}, {TaskType::rsa_seq, 0.04}}},
      {"M3",
       1450000,
       {{TaskType::chainpair_graph, 0.10},
        {TaskType::top_chainpair, 0.10},
        {TaskType::interface_topk, 0.10},
        {TaskType::hotspot_topk, 0.10},
        {TaskType::saltbridge_bin, 0.10},
        {TaskType::pair_dist_bin, 0.16},
        {TaskType::pair_contact_yn, 0.10},
        {TaskType::pair_batch, 0.18}},
       {{TaskType::dssp_seq, 0.03}, {TaskType::rsa_seq, 0.03}}},
  };
  return phases;
}

inline const CurriculumPhase& phase_by_name(const std::string& name) {
  for (const auto& p : curriculum_phases())
    if (p.name == name) return p;
  fail(Errc::config_error, "unknown curriculum phase: " + name);
}

// FIFO buffer of instances from strictly earlier phases.
struct ReplayBuffer {
  size_t capacity = 0;
  std::deque<TaskInstance> entries;

  void push(TaskInstance inst) {
    entries.push_back(std::move(inst));
    while (capacity > 0 && entries.size() > capacity) entries.pop_front();
  }
};

using TaskPools = std::map<TaskType, std::vector<TaskInstance>>;

// Multinomial draw over the phase mixture, with replacement. Active types
// draw uniformly from their pool; replay draws uniformly from the buffer,
// whatever its composition. One RNG stream keyed by the seed makes the
// output sequence a pure function of (phase, buffer, pools, n, seed).
inline std::vector<TaskInstance> sample_curriculum(const CurriculumPhase& phase,
                                                   const ReplayBuffer& buffer, size_t n,
                                                   uint64_t seed, const TaskPools& pools) {
  validate_phase(phase);
  if (phase.replay_fraction() > 0 && buffer.entries.empty())
    fail(Errc::empty_buffer_with_replay, phase.name + " requires a non-empty replay buffer");

  std::vector<std::pair<double, const std::vector<TaskInstance>*>> cumulative;
  double edge = 0;
  for (const auto& [type, w] : phase.weights) {
    auto it = pools.find(type);
    if (it == pools.end() || it->second.empty())
      fail(Errc::empty_results, phase.name + ": no instances pooled for " + task_type_name(type));
    edge += w;
    cumulative.push_back({edge, &it->second});
  }
  double active_total = edge;

  Rng rng(seed);
  std::vector<TaskInstance> out;
  out.reserve(n);
  std::vector<TaskInstance> buffer_vec(buffer.entries.begin(), buffer.entries.end());
  for (size_t k = 0; k < n; ++k) {
    double u = rng.uniform();
    if (u >= active_total && !buffer_vec.empty()) {
      out.push_back(buffer_vec[rng.index(buffer_vec.size())]);
      continue;
    }
    const std::vector<TaskInstance>* pool = cumulative.back().second;
    for (const auto& [e, p] : cumulative)
      if (u < e) {
        pool = p;
        break;
      }
    out.push_back((*pool)[rng.index(pool->size())]);
  }
  return out;
}

}  // namespace proteotask
