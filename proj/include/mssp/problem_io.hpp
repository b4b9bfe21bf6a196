#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mssp/model.hpp"
#include "mssp/risk.hpp"

namespace mssp::io {

/// Everything a problem file can carry: the linear multistage model with
/// its optional lattice, optional per-stage risk measures (one entry =
/// shared across stages), and an optional state-optimization block.
struct ProblemFile {
  MultistageProblem problem;
  std::vector<CoherentRisk> stage_risks;
  std::optional<SocProblem> soc;
};

/// Parses the JSON problem document. Matrices are dense row-major arrays
/// or {"rows", "cols", "triplets"} objects; B is null at stage 1; upper
/// bound entries may be null for +infinity. Throws std::runtime_error
/// with the offending location on malformed input.
ProblemFile parse_problem(const std::string& text);

ProblemFile load_problem(const std::string& path);

/// Deterministic emission; parse(emit(f)) reproduces f exactly.
std::string emit_problem(const ProblemFile& file);

/// Risk list in the same schema as the problem file's risk block, read
/// from its own document (the CLI's --risk-file).
std::vector<CoherentRisk> parse_risk_document(const std::string& text);

}  // namespace mssp::io
