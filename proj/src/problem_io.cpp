#include "mssp/problem_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mssp::io {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::runtime_error("problem file: " + where + ": " + what);
}

double number_at(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

Vector parse_vector(const ordered_json& j, const std::string& where,
                    bool null_is_inf = false) {
  if (!j.is_array()) fail(where, "expected an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null()) {
      if (!null_is_inf) fail(where, "null entry");
      v[i] = kInf;
    } else {
      v[i] = number_at(j[i], where);
    }
  }
  return v;
}

Matrix parse_matrix(const ordered_json& j, const std::string& where) {
  if (j.is_null()) return Matrix();
  if (j.is_object()) {
    if (!j.contains("rows") || !j.contains("cols") || !j.contains("triplets"))
      fail(where, "sparse matrix needs rows, cols, triplets");
    Matrix m = Matrix::Zero(j["rows"].get<int>(), j["cols"].get<int>());
    for (const auto& t : j["triplets"]) {
      if (!t.is_array() || t.size() != 3) fail(where, "bad triplet");
      int r = t[0].get<int>(), c = t[1].get<int>();
      if (r < 0 || r >= m.rows() || c < 0 || c >= m.cols())
        fail(where, "triplet index out of range");
      m(r, c) = number_at(t[2], where);
    }
    return m;
  }
  if (!j.is_array()) fail(where, "expected a matrix");
  if (j.empty()) return Matrix();
  Matrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != static_cast<std::size_t>(m.cols()))
      fail(where, "ragged matrix rows");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(r, c) = number_at(j[r][c], where);
  }
  return m;
}

StageRealization parse_realization(const ordered_json& j,
                                   const std::string& where) {
  StageRealization re;
  if (!j.contains("c") || !j.contains("A") || !j.contains("b"))
    fail(where, "realization needs c, A, b");
  re.c = parse_vector(j["c"], where + ".c");
  re.A = parse_matrix(j["A"], where + ".A");
  if (j.contains("B")) re.B = parse_matrix(j["B"], where + ".B");
  re.b = parse_vector(j["b"], where + ".b");
  if (j.contains("p")) re.p = number_at(j["p"], where + ".p");
  return re;
}

CoherentRisk parse_risk(const ordered_json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) fail(where, "risk needs a kind");
  std::string kind = j["kind"].get<std::string>();
  if (kind == "expectation") return CoherentRisk::expectation();
  if (kind == "avar") {
    if (!j.contains("alpha")) fail(where, "avar needs alpha");
    return CoherentRisk::avar(number_at(j["alpha"], where + ".alpha"));
  }
  if (kind == "combo") {
    if (!j.contains("lambda") || !j.contains("alpha"))
      fail(where, "combo needs lambda and alpha");
    return CoherentRisk::combo(number_at(j["lambda"], where + ".lambda"),
                               number_at(j["alpha"], where + ".alpha"));
  }
  fail(where, "unknown risk kind " + kind);
}

std::vector<CoherentRisk> parse_risk_block(const ordered_json& j,
                                           const std::string& where) {
  std::vector<CoherentRisk> out;
  if (j.is_array()) {
    for (std::size_t t = 0; t < j.size(); ++t)
      out.push_back(parse_risk(j[t], where + "[" + std::to_string(t) + "]"));
  } else {
    out.push_back(parse_risk(j, where));
  }
  return out;
}

AffinePiece parse_piece(const ordered_json& j, const std::string& where) {
  AffinePiece piece;
  if (!j.contains("wx")) fail(where, "cost piece needs wx");
  piece.wx = parse_vector(j["wx"], where + ".wx");
  if (j.contains("wu")) piece.wu = parse_vector(j["wu"], where + ".wu");
  if (j.contains("w0")) piece.w0 = number_at(j["w0"], where + ".w0");
  return piece;
}

SocProblem parse_soc(const ordered_json& j) {
  SocProblem soc;
  if (!j.contains("x1") || !j.contains("stages") || !j.contains("terminal"))
    fail("soc", "needs x1, stages, terminal");
  soc.x1 = parse_vector(j["x1"], "soc.x1");
  soc.horizon = static_cast<int>(j["stages"].size());
  for (std::size_t t = 0; t < j["stages"].size(); ++t) {
    const auto& js = j["stages"][t];
    std::string where = "soc.stages[" + std::to_string(t) + "]";
    SocStage stage;
    stage.u_lower = parse_vector(js.at("u_lb"), where + ".u_lb");
    stage.u_upper = parse_vector(js.at("u_ub"), where + ".u_ub", true);
    for (std::size_t r = 0; r < js.at("realizations").size(); ++r) {
      const auto& jr = js["realizations"][r];
      std::string rw = where + ".realizations[" + std::to_string(r) + "]";
      SocRealization re;
      re.A = parse_matrix(jr.at("A"), rw + ".A");
      re.B = parse_matrix(jr.at("B"), rw + ".B");
      re.b = parse_vector(jr.at("b"), rw + ".b");
      if (jr.contains("p")) re.p = number_at(jr["p"], rw + ".p");
      for (const auto& jp : jr.at("cost"))
        re.cost.push_back(parse_piece(jp, rw + ".cost"));
      stage.realizations.push_back(std::move(re));
    }
    soc.stages.push_back(std::move(stage));
  }
  for (const auto& jp : j["terminal"])
    soc.terminal_cost.push_back(parse_piece(jp, "soc.terminal"));
  return soc;
}

ordered_json emit_vector(const Vector& v, bool inf_as_null = false) {
  ordered_json out = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (inf_as_null && v[i] == kInf)
      out.push_back(nullptr);
    else
      out.push_back(v[i]);
  }
  return out;
}

ordered_json emit_matrix(const Matrix& m) {
  if (m.size() == 0 && m.cols() == 0) return nullptr;
  if (m.rows() == 0) {
    // dimensions are not recoverable from an empty array of rows
    ordered_json out;
    out["rows"] = 0;
    out["cols"] = m.cols();
    out["triplets"] = ordered_json::array();
    return out;
  }
  ordered_json out = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

ordered_json emit_realization(const StageRealization& re) {
  ordered_json out;
  out["c"] = emit_vector(re.c);
  out["A"] = emit_matrix(re.A);
  out["B"] = emit_matrix(re.B);
  out["b"] = emit_vector(re.b);
  out["p"] = re.p;
  return out;
}

ordered_json emit_risk(const CoherentRisk& r) {
  ordered_json out;
  switch (r.kind) {
    case RiskKind::Expectation:
      out["kind"] = "expectation";
      break;
    case RiskKind::AVaR:
      out["kind"] = "avar";
      out["alpha"] = r.alpha;
      break;
    case RiskKind::Combo:
      out["kind"] = "combo";
      out["lambda"] = r.lambda;
      out["alpha"] = r.alpha;
      break;
  }
  return out;
}

ordered_json emit_piece(const AffinePiece& p) {
  ordered_json out;
  out["wx"] = emit_vector(p.wx);
  if (p.wu.size() > 0) out["wu"] = emit_vector(p.wu);
  out["w0"] = p.w0;
  return out;
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("problem file: bad JSON: ") +
                             e.what());
  }
  ProblemFile file;
  if (!j.contains("horizon") || !j.contains("stages"))
    fail("root", "needs horizon and stages");
  file.problem.horizon = j["horizon"].get<int>();
  for (std::size_t t = 0; t < j["stages"].size(); ++t) {
    const auto& js = j["stages"][t];
    std::string where = "stages[" + std::to_string(t) + "]";
    StageBlock block;
    block.lower = parse_vector(js.at("lb"), where + ".lb");
    block.upper = parse_vector(js.at("ub"), where + ".ub", true);
    if (!js.contains("realizations")) fail(where, "needs realizations");
    for (std::size_t r = 0; r < js["realizations"].size(); ++r)
      block.realizations.push_back(parse_realization(
          js["realizations"][r],
          where + ".realizations[" + std::to_string(r) + "]"));
    file.problem.stages.push_back(std::move(block));
  }
  if (j.contains("lattice") && !j["lattice"].is_null()) {
    const auto& jl = j["lattice"];
    MarkovLattice lattice;
    for (std::size_t t = 0; t < jl.at("nodes").size(); ++t) {
      std::vector<LatticeNode> stage_nodes;
      for (std::size_t i = 0; i < jl["nodes"][t].size(); ++i) {
        const auto& jn = jl["nodes"][t][i];
        std::string where = "lattice.nodes[" + std::to_string(t) + "][" +
                            std::to_string(i) + "]";
        LatticeNode node;
        node.center = parse_vector(jn.at("center"), where + ".center");
        node.data = parse_realization(jn, where);
        stage_nodes.push_back(std::move(node));
      }
      lattice.nodes.push_back(std::move(stage_nodes));
    }
    for (std::size_t t = 0; t < jl.at("transitions").size(); ++t)
      lattice.transitions.push_back(parse_matrix(
          jl["transitions"][t],
          "lattice.transitions[" + std::to_string(t) + "]"));
    file.problem.lattice = std::move(lattice);
    file.problem.dependence = Dependence::MarkovChain;
  }
  if (j.contains("risk") && !j["risk"].is_null())
    file.stage_risks = parse_risk_block(j["risk"], "risk");
  if (j.contains("soc") && !j["soc"].is_null()) file.soc = parse_soc(j["soc"]);
  return file;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

std::string emit_problem(const ProblemFile& file) {
  ordered_json j;
  j["horizon"] = file.problem.horizon;
  j["stages"] = ordered_json::array();
  for (const StageBlock& block : file.problem.stages) {
    ordered_json js;
    js["realizations"] = ordered_json::array();
    for (const StageRealization& re : block.realizations)
      js["realizations"].push_back(emit_realization(re));
    js["lb"] = emit_vector(block.lower);
    js["ub"] = emit_vector(block.upper, true);
    j["stages"].push_back(std::move(js));
  }
  if (file.problem.lattice) {
    const MarkovLattice& lattice = *file.problem.lattice;
    ordered_json jl;
    jl["nodes"] = ordered_json::array();
    for (const auto& stage_nodes : lattice.nodes) {
      ordered_json row = ordered_json::array();
      for (const LatticeNode& node : stage_nodes) {
        ordered_json jn = emit_realization(node.data);
        jn["center"] = emit_vector(node.center);
        row.push_back(std::move(jn));
      }
      jl["nodes"].push_back(std::move(row));
    }
    jl["transitions"] = ordered_json::array();
    for (const Matrix& p : lattice.transitions)
      jl["transitions"].push_back(emit_matrix(p));
    j["lattice"] = std::move(jl);
  }
  if (!file.stage_risks.empty()) {
    if (file.stage_risks.size() == 1) {
      j["risk"] = emit_risk(file.stage_risks[0]);
    } else {
      j["risk"] = ordered_json::array();
      for (const CoherentRisk& r : file.stage_risks)
        j["risk"].push_back(emit_risk(r));
    }
  }
  if (file.soc) {
    ordered_json js;
    js["x1"] = emit_vector(file.soc->x1);
    js["stages"] = ordered_json::array();
    for (const SocStage& stage : file.soc->stages) {
      ordered_json jt;
      jt["u_lb"] = emit_vector(stage.u_lower);
      jt["u_ub"] = emit_vector(stage.u_upper, true);
      jt["realizations"] = ordered_json::array();
      for (const SocRealization& re : stage.realizations) {
        ordered_json jr;
        jr["A"] = emit_matrix(re.A);
        jr["B"] = emit_matrix(re.B);
        jr["b"] = emit_vector(re.b);
        jr["p"] = re.p;
        jr["cost"] = ordered_json::array();
        for (const AffinePiece& piece : re.cost)
          jr["cost"].push_back(emit_piece(piece));
        jt["realizations"].push_back(std::move(jr));
      }
      js["stages"].push_back(std::move(jt));
    }
    js["terminal"] = ordered_json::array();
    for (const AffinePiece& piece : file.soc->terminal_cost)
      js["terminal"].push_back(emit_piece(piece));
    j["soc"] = std::move(js);
  }
  return j.dump(2) + "\n";
}

std::vector<CoherentRisk> parse_risk_document(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("risk file: bad JSON: ") + e.what());
  }
  if (j.is_object() && j.contains("risk"))
    return parse_risk_block(j["risk"], "risk");
  return parse_risk_block(j, "risk");
}

}  // namespace mssp::io
