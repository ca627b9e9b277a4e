#pragma once

#include <stdexcept>
#include <string>

namespace proteotask {

enum class Errc {
  parse_error,
  empty_complex,
  unknown_chain,
  out_of_range,
  overlapping_loops,
  missing_annotation,
  missing_reference_atom,
  no_chain_pairs,
  task_not_applicable,
  dim_mismatch,
  key_outside_cdr,
  missing_hidden,
  empty_buffer_with_replay,
  empty_results,
  empty_ground_truth,
  empty_region,
  too_few_points,
  insufficient_backbone,
  join_failure,
  config_error,
  io_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::parse_error: return "ParseError";
    case Errc::empty_complex: return "EmptyComplex";
    case Errc::unknown_chain: return "UnknownChain";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::overlapping_loops: return "OverlappingLoops";
    case Errc::missing_annotation: return "MissingAnnotation";
    case Errc::missing_reference_atom: return "MissingReferenceAtom";
    case Errc::no_chain_pairs: return "NoChainPairs";
    case Errc::task_not_applicable: return "TaskNotApplicable";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::key_outside_cdr: return "KeyOutsideCdr";
    case Errc::missing_hidden: return "MissingHidden";
    case Errc::empty_buffer_with_replay: return "EmptyBufferWithReplay";
    case Errc::empty_results: return "EmptyResults";
    case Errc::empty_ground_truth: return "EmptyGroundTruth";
    case Errc::empty_region: return "EmptyRegion";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::insufficient_backbone: return "InsufficientBackbone";
    case Errc::join_failure: return "JoinFailure";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace proteotask
