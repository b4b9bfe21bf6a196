#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mssp/problem_io.hpp"

using namespace mssp;
using testutil::mat1;
using testutil::vec1;

namespace {

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same(const Vector& a, const Vector& b) {
  return a.size() == b.size() && a == b;
}

bool same(const StageRealization& a, const StageRealization& b) {
  return same(a.c, b.c) && same(a.A, b.A) && same(a.B, b.B) && same(a.b, b.b) &&
         a.p == b.p;
}

bool same(const MultistageProblem& a, const MultistageProblem& b) {
  if (a.horizon != b.horizon || a.stages.size() != b.stages.size() ||
      a.dependence != b.dependence ||
      a.lattice.has_value() != b.lattice.has_value())
    return false;
  for (std::size_t t = 0; t < a.stages.size(); ++t) {
    if (!same(a.stages[t].lower, b.stages[t].lower) ||
        !same(a.stages[t].upper, b.stages[t].upper))
      return false;
    if (a.stages[t].realizations.size() != b.stages[t].realizations.size())
      return false;
    for (std::size_t r = 0; r < a.stages[t].realizations.size(); ++r)
      if (!same(a.stages[t].realizations[r], b.stages[t].realizations[r]))
        return false;
  }
  if (a.lattice) {
    if (a.lattice->nodes.size() != b.lattice->nodes.size() ||
        a.lattice->transitions.size() != b.lattice->transitions.size())
      return false;
    for (std::size_t t = 0; t < a.lattice->nodes.size(); ++t) {
      if (a.lattice->nodes[t].size() != b.lattice->nodes[t].size())
        return false;
      for (std::size_t i = 0; i < a.lattice->nodes[t].size(); ++i)
        if (!same(a.lattice->nodes[t][i].center,
                  b.lattice->nodes[t][i].center) ||
            !same(a.lattice->nodes[t][i].data, b.lattice->nodes[t][i].data))
          return false;
    }
    for (std::size_t t = 0; t < a.lattice->transitions.size(); ++t)
      if (!same(a.lattice->transitions[t], b.lattice->transitions[t]))
        return false;
  }
  return true;
}

bool same(const SocProblem& a, const SocProblem& b) {
  if (a.horizon != b.horizon || !same(a.x1, b.x1) ||
      a.stages.size() != b.stages.size() ||
      a.terminal_cost.size() != b.terminal_cost.size())
    return false;
  auto same_piece = [](const AffinePiece& x, const AffinePiece& y) {
    return same(x.wx, y.wx) && same(x.wu, y.wu) && x.w0 == y.w0;
  };
  for (std::size_t k = 0; k < a.terminal_cost.size(); ++k)
    if (!same_piece(a.terminal_cost[k], b.terminal_cost[k])) return false;
  for (std::size_t t = 0; t < a.stages.size(); ++t) {
    if (!same(a.stages[t].u_lower, b.stages[t].u_lower) ||
        !same(a.stages[t].u_upper, b.stages[t].u_upper) ||
        a.stages[t].realizations.size() != b.stages[t].realizations.size())
      return false;
    for (std::size_t r = 0; r < a.stages[t].realizations.size(); ++r) {
      const auto& x = a.stages[t].realizations[r];
      const auto& y = b.stages[t].realizations[r];
      if (!same(x.A, y.A) || !same(x.B, y.B) || !same(x.b, y.b) ||
          x.p != y.p || x.cost.size() != y.cost.size())
        return false;
      for (std::size_t k = 0; k < x.cost.size(); ++k)
        if (!same_piece(x.cost[k], y.cost[k])) return false;
    }
  }
  return true;
}

bool same(const io::ProblemFile& a, const io::ProblemFile& b) {
  if (!same(a.problem, b.problem)) return false;
  if (a.stage_risks.size() != b.stage_risks.size()) return false;
  for (std::size_t t = 0; t < a.stage_risks.size(); ++t)
    if (a.stage_risks[t].kind != b.stage_risks[t].kind ||
        a.stage_risks[t].lambda != b.stage_risks[t].lambda ||
        a.stage_risks[t].alpha != b.stage_risks[t].alpha)
      return false;
  if (a.soc.has_value() != b.soc.has_value()) return false;
  if (a.soc && !same(*a.soc, *b.soc)) return false;
  return true;
}

}  // namespace

TEST_CASE("round trip preserves a random instance exactly") {
  RngStream rng(31, "io-suite");
  for (int trial = 0; trial < 5; ++trial) {
    io::ProblemFile file;
    file.problem = testutil::random_recourse_instance(rng, 3, 2);
    std::string text = io::emit_problem(file);
    auto back = io::parse_problem(text);
    CHECK(same(file, back));
    CHECK(io::emit_problem(back) == text);
    CHECK(validate(back.problem).empty());
  }
}

TEST_CASE("round trip preserves risk and state-optimization blocks") {
  io::ProblemFile file;
  file.problem = testutil::newsvendor();
  file.stage_risks = {CoherentRisk::expectation(),
                      CoherentRisk::combo(0.3, 0.9)};
  file.soc = testutil::soc_scalar_chain(true);
  auto back = io::parse_problem(io::emit_problem(file));
  CHECK(same(file, back));

  file.stage_risks = {CoherentRisk::avar(0.25)};  // shared, scalar block
  back = io::parse_problem(io::emit_problem(file));
  CHECK(same(file, back));
}

TEST_CASE("round trip preserves a lattice block") {
  io::ProblemFile file;
  file.problem = testutil::newsvendor();
  MarkovLattice lattice;
  for (int t = 0; t < 2; ++t) {
    std::vector<LatticeNode> nodes;
    for (std::size_t i = 0; i < file.problem.stages[t].realizations.size();
         ++i) {
      LatticeNode node;
      node.center = vec1(static_cast<double>(i));
      node.data = file.problem.stages[t].realizations[i];
      node.data.p = 1.0;
      nodes.push_back(node);
    }
    lattice.nodes.push_back(nodes);
  }
  lattice.transitions.push_back(Matrix::Constant(1, 2, 0.5));
  file.problem.lattice = lattice;
  file.problem.dependence = Dependence::MarkovChain;
  auto back = io::parse_problem(io::emit_problem(file));
  CHECK(back.problem.dependence == Dependence::MarkovChain);
  CHECK(same(file, back));
}

TEST_CASE("sparse triplets, null B, and null bounds parse") {
  std::string text = R"({
    "horizon": 2,
    "stages": [
      {"realizations": [{"c": [1.0], "A": {"rows": 0, "cols": 1, "triplets": []},
                         "b": [], "B": null, "p": 1.0}],
       "lb": [0.0], "ub": [null]},
      {"realizations": [{"c": [1.0, 0.0],
                         "A": {"rows": 1, "cols": 2, "triplets": [[0, 0, 1.0], [0, 1, -1.0]]},
                         "B": [[1.0]], "b": [2.0], "p": 1.0}],
       "lb": [0.0, 0.0], "ub": [null, 5.0]}
    ]
  })";
  auto file = io::parse_problem(text);
  CHECK(validate(file.problem).empty());
  CHECK(file.problem.stages[0].upper[0] == kInf);
  CHECK(file.problem.stages[1].upper[1] == 5.0);
  CHECK(file.problem.stages[1].realizations[0].A(0, 1) == -1.0);
  CHECK(file.problem.stages[0].realizations[0].B.size() == 0);
  CHECK(file.stage_risks.empty());
  CHECK(!file.soc);
}

TEST_CASE("malformed documents fail with a located message") {
  CHECK_THROWS_WITH_AS(io::parse_problem("{nope"), doctest::Contains("JSON"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(io::parse_problem("{\"horizon\": 2}"),
                       doctest::Contains("stages"), std::runtime_error);
  std::string bad_entry = R"({"horizon": 2, "stages": [
    {"realizations": [{"c": ["x"], "A": null, "b": []}], "lb": [0], "ub": [1]}
  ]})";
  CHECK_THROWS_WITH_AS(io::parse_problem(bad_entry),
                       doctest::Contains("stages[0].realizations[0].c"),
                       std::runtime_error);
}

TEST_CASE("risk documents parse standalone") {
  auto shared = io::parse_risk_document(R"({"kind": "avar", "alpha": 0.4})");
  REQUIRE(shared.size() == 1);
  CHECK(shared[0].kind == RiskKind::AVaR);
  CHECK(shared[0].alpha == 0.4);

  auto wrapped = io::parse_risk_document(
      R"({"risk": [{"kind": "expectation"}, {"kind": "combo", "lambda": 0.5, "alpha": 0.9}]})");
  REQUIRE(wrapped.size() == 2);
  CHECK(wrapped[1].lambda == 0.5);

  CHECK_THROWS(io::parse_risk_document(R"({"kind": "tvar", "alpha": 0.4})"));
}
