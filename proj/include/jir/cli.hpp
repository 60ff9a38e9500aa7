#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jir/bounds_ach.hpp"
#include "jir/bounds_conv.hpp"
#include "jir/common.hpp"
#include "jir/oracle_sim.hpp"
#include "jir/rd.hpp"
#include "jir/source_model.hpp"

//
// Run configuration, instance (de)serialization, CSV emission and the command
// dispatch shared by the command-line tool and the test suite. Everything here
// is deterministic: re-running a summary JSON reproduces the CSV byte for byte.
//

namespace jir::cli {

using json = nlohmann::ordered_json;
using src::ProblemInstance;

// ---------------------------------------------------------------------------
// problem instance JSON

namespace detail {

inline src::Alphabet alphabet_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty()) throw ConfigError(what + " must be a nonempty array");
  std::vector<std::string> labels;
  labels.reserve(arr.size());
  for (const auto& e : arr) labels.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return src::Alphabet(std::move(labels));
}

inline Mat matrix_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array() || arr.empty() || !arr[0].is_array())
    throw ConfigError(what + " must be a nonempty array of rows");
  Mat m(arr.size(), arr[0].size(), 0.0);
  for (std::size_t r = 0; r < arr.size(); ++r) {
    if (!arr[r].is_array() || arr[r].size() != m.cols)
      throw ConfigError(what + " rows must all have the same length");
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (!arr[r][c].is_number()) throw ConfigError(what + " entries must be numbers");
      m(r, c) = arr[r][c].get<double>();
    }
  }
  return m;
}

inline json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline double level_from_json(const json& v, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && v.get<std::string>() == "inf") return kInf;
  throw ConfigError(what + " must be a number or \"inf\"");
}

inline src::DistortionSpec distortion_from_json(const json& d, const std::string& what) {
  if (!d.is_object() || !d.contains("kind") || !d["kind"].is_string())
    throw ConfigError(what + " must be an object with a kind");
  std::string kind = d["kind"].get<std::string>();
  if (kind == "hamming") return src::DistortionSpec::hamming();
  if (kind == "logloss") return src::DistortionSpec::logloss();
  if (kind == "matrix") {
    if (!d.contains("matrix") || !d.contains("reconstruction_alphabet"))
      throw ConfigError(what + ": matrix kind needs matrix and reconstruction_alphabet");
    return src::DistortionSpec::from_matrix(
        matrix_from_json(d["matrix"], what + ".matrix"),
        alphabet_from_json(d["reconstruction_alphabet"], what + ".reconstruction_alphabet"));
  }
  throw ConfigError(what + ": unknown kind \"" + kind + "\"");
}

inline json distortion_to_json(const src::DistortionSpec& d) {
  json o;
  o["kind"] = src::to_string(d.kind);
  if (d.kind == src::DistortionKind::matrix) {
    o["matrix"] = matrix_to_json(d.matrix);
    o["reconstruction_alphabet"] = d.reconstruction.labels;
  }
  return o;
}

}  // namespace detail

// Zero-mass source symbols carry no information and break the information
// density, so both x rows and y columns without mass are dropped on load;
// distortion tables are trimmed along their source-side axis to match.
inline ProblemInstance instance_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("instance must be a JSON object");
  for (const char* key : {"x_alphabet", "y_alphabet", "p_xy", "d1", "d2", "D1", "D2"})
    if (!j.contains(key)) throw ConfigError(std::string("instance is missing \"") + key + "\"");
  src::Alphabet xa = detail::alphabet_from_json(j["x_alphabet"], "x_alphabet");
  src::Alphabet ya = detail::alphabet_from_json(j["y_alphabet"], "y_alphabet");
  Mat pxy = detail::matrix_from_json(j["p_xy"], "p_xy");
  if (pxy.rows != xa.size() || pxy.cols != ya.size())
    throw ConfigError("p_xy shape does not match the alphabets");
  src::DistortionSpec d1 = detail::distortion_from_json(j["d1"], "d1");
  src::DistortionSpec d2 = detail::distortion_from_json(j["d2"], "d2");

  std::vector<std::size_t> keep_x, keep_y;
  for (std::size_t x = 0; x < pxy.rows; ++x) {
    double s = 0.0;
    for (std::size_t y = 0; y < pxy.cols; ++y) s += pxy(x, y);
    if (s > 0.0) keep_x.push_back(x);
  }
  for (std::size_t y = 0; y < pxy.cols; ++y) {
    double s = 0.0;
    for (std::size_t x = 0; x < pxy.rows; ++x) s += pxy(x, y);
    if (s > 0.0) keep_y.push_back(y);
  }
  if (keep_x.empty() || keep_y.empty()) throw ConfigError("instance has no probability mass");

  auto trim_labels = [](const src::Alphabet& a, const std::vector<std::size_t>& keep) {
    std::vector<std::string> l;
    l.reserve(keep.size());
    for (std::size_t i : keep) l.push_back(a.labels[i]);
    return src::Alphabet(std::move(l));
  };
  auto trim_rows = [](const Mat& m, const std::vector<std::size_t>& keep) {
    Mat out(keep.size(), m.cols, 0.0);
    for (std::size_t r = 0; r < keep.size(); ++r)
      for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(keep[r], c);
    return out;
  };

  if (keep_x.size() < pxy.rows || keep_y.size() < pxy.cols) {
    Mat trimmed(keep_x.size(), keep_y.size(), 0.0);
    for (std::size_t r = 0; r < keep_x.size(); ++r)
      for (std::size_t c = 0; c < keep_y.size(); ++c) trimmed(r, c) = pxy(keep_x[r], keep_y[c]);
    if (d1.kind == src::DistortionKind::matrix && d1.matrix.rows == xa.size())
      d1.matrix = trim_rows(d1.matrix, keep_x);
    if (d2.kind == src::DistortionKind::matrix && d2.matrix.rows == ya.size())
      d2.matrix = trim_rows(d2.matrix, keep_y);
    xa = trim_labels(xa, keep_x);
    ya = trim_labels(ya, keep_y);
    pxy = std::move(trimmed);
  }

  ProblemInstance inst;
  inst.source = src::JointSource(std::move(xa), std::move(ya), std::move(pxy));
  inst.d1 = std::move(d1);
  inst.d2 = std::move(d2);
  inst.D1 = detail::level_from_json(j["D1"], "D1");
  inst.D2 = detail::level_from_json(j["D2"], "D2");
  inst.M = 1;
  inst.validate();
  return inst;
}

inline json instance_to_json(const ProblemInstance& inst) {
  json j;
  j["x_alphabet"] = inst.source.x_alphabet.labels;
  j["y_alphabet"] = inst.source.y_alphabet.labels;
  j["p_xy"] = detail::matrix_to_json(inst.source.p_xy);
  j["d1"] = detail::distortion_to_json(inst.d1);
  j["d2"] = detail::distortion_to_json(inst.d2);
  j["D1"] = std::isinf(inst.D1) ? json("inf") : json(inst.D1);
  j["D2"] = std::isinf(inst.D2) ? json("inf") : json(inst.D2);
  return j;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  std::string command;    // rd | ach | conv | oracle | simulate | example
  json instance;          // inline instance; null when only a path is given
  std::string instance_path;
  std::string out;        // CSV path; the summary JSON goes to out + ".summary.json"
  std::vector<std::uint64_t> m_list{1};
  Vec gamma_grid;         // empty -> automatic per-M grid
  Vec eps_prime_grid;     // empty -> automatic scan over distinct failure levels
  double eps_prime = 0.0; // simulate: threshold / binning parameters
  double gamma = 0.0;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double budget = 1e8;
  bool exact_lp = false;
  std::string bound = "all";            // rd: r1|r2|joint|all; ach/conv: joint|indirect|logloss|all
  std::string scheme;                   // simulate: joint | indirect | logloss
  std::string output_dist = "uniform";  // uniform | optimized
  std::uint64_t example_m = 10, example_n = 6;
  double example_p = 0.1, example_d1 = 6.0, example_d2 = 0.5;

  void validate() const {
    static const std::vector<std::string> known = {"rd",     "ach",      "conv",
                                                   "oracle", "simulate", "example"};
    if (std::find(known.begin(), known.end(), command) == known.end())
      throw ConfigError("unknown command \"" + command + "\"");
    if (out.empty()) throw ConfigError("no output path given");
    if (m_list.empty()) throw ConfigError("codebook size list is empty");
    for (std::uint64_t m : m_list)
      if (m < 1) throw ConfigError("codebook sizes must be positive");
    if (command != "example" && instance.is_null() && instance_path.empty())
      throw ConfigError("no instance given");
    if (command == "simulate") {
      if (scheme != "joint" && scheme != "indirect" && scheme != "logloss")
        throw ConfigError("simulate needs a scheme: joint, indirect or logloss");
      if (!has_seed) throw ConfigError("simulation requires an explicit seed");
      if (trials < 1) throw ConfigError("simulation requires at least one trial");
    }
    if (command == "rd") {
      if (bound != "r1" && bound != "r2" && bound != "joint" && bound != "all")
        throw ConfigError("rd bound selector must be r1, r2, joint or all");
    } else if (command == "ach" || command == "conv") {
      if (bound != "joint" && bound != "indirect" && bound != "logloss" && bound != "all")
        throw ConfigError("bound selector must be joint, indirect, logloss or all");
    }
    if (output_dist != "uniform" && output_dist != "optimized")
      throw ConfigError("output distribution must be uniform or optimized");
    for (double g : gamma_grid)
      if (!(g >= 0.0)) throw ConfigError("gamma grid entries must be nonnegative");
    for (double e : eps_prime_grid)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eps_prime grid entries outside [0, 1]");
    if (!(eps_prime >= 0.0 && eps_prime <= 1.0)) throw ConfigError("eps_prime outside [0, 1]");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (!(budget > 0.0)) throw ConfigError("budget must be positive");
    if (example_m < 1) throw ConfigError("example class count must be positive");
    if (!(example_p >= 0.0 && example_p <= 1.0)) throw ConfigError("example p outside [0, 1]");
    if (!(example_d1 >= 0.0) || !(example_d2 >= 0.0))
      throw ConfigError("example distortion levels must be nonnegative");
  }
};

inline json config_to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["instance"] = c.instance;
  j["instance_path"] = c.instance_path;
  j["out"] = c.out;
  j["m_codewords"] = c.m_list;
  j["gamma_grid"] = c.gamma_grid.empty() ? json() : json(c.gamma_grid);
  j["eps_prime_grid"] = c.eps_prime_grid.empty() ? json() : json(c.eps_prime_grid);
  j["eps_prime"] = c.eps_prime;
  j["gamma"] = c.gamma;
  j["trials"] = c.trials;
  j["seed"] = c.has_seed ? json(c.seed) : json();
  j["budget"] = c.budget;
  j["exact_lp"] = c.exact_lp;
  j["bound"] = c.bound;
  j["scheme"] = c.scheme;
  j["output_dist"] = c.output_dist;
  json ex;
  ex["m"] = c.example_m;
  ex["n"] = c.example_n;
  ex["p"] = c.example_p;
  ex["d1"] = c.example_d1;
  ex["d2"] = c.example_d2;
  j["example"] = ex;
  return j;
}

// Tolerant reader: absent keys keep their defaults, so a summary JSON (which
// carries an extra "results" key) can be fed straight back in.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  auto has = [&](const char* k) { return j.contains(k) && !j[k].is_null(); };
  try {
    if (has("command")) c.command = j["command"].get<std::string>();
    if (j.contains("instance")) c.instance = j["instance"];
    if (has("instance_path")) c.instance_path = j["instance_path"].get<std::string>();
    if (has("out")) c.out = j["out"].get<std::string>();
    if (has("m_codewords")) {
      c.m_list.clear();
      for (const auto& e : j["m_codewords"]) c.m_list.push_back(e.get<std::uint64_t>());
    }
    if (has("gamma_grid")) c.gamma_grid = j["gamma_grid"].get<Vec>();
    if (has("eps_prime_grid")) c.eps_prime_grid = j["eps_prime_grid"].get<Vec>();
    if (has("eps_prime")) c.eps_prime = j["eps_prime"].get<double>();
    if (has("gamma")) c.gamma = j["gamma"].get<double>();
    if (has("trials")) c.trials = j["trials"].get<std::uint64_t>();
    if (has("seed")) {
      c.seed = j["seed"].get<std::uint64_t>();
      c.has_seed = true;
    }
    if (has("budget")) c.budget = j["budget"].get<double>();
    if (has("exact_lp")) c.exact_lp = j["exact_lp"].get<bool>();
    if (has("bound")) c.bound = j["bound"].get<std::string>();
    if (has("scheme")) c.scheme = j["scheme"].get<std::string>();
    if (has("output_dist")) c.output_dist = j["output_dist"].get<std::string>();
    if (has("example")) {
      const json& ex = j["example"];
      if (ex.contains("m")) c.example_m = ex["m"].get<std::uint64_t>();
      if (ex.contains("n")) c.example_n = ex["n"].get<std::uint64_t>();
      if (ex.contains("p")) c.example_p = ex["p"].get<double>();
      if (ex.contains("d1")) c.example_d1 = ex["d1"].get<double>();
      if (ex.contains("d2")) c.example_d2 = ex["d2"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

// "A..B" inclusive range or a comma list, all positive
inline std::vector<std::uint64_t> parse_m_spec(const std::string& spec) {
  auto one = [](const std::string& t) -> std::uint64_t {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(t, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad codebook size \"" + t + "\"");
    }
    if (pos != t.size() || v == 0) throw ConfigError("bad codebook size \"" + t + "\"");
    return v;
  };
  std::vector<std::uint64_t> out;
  std::size_t dots = spec.find("..");
  if (dots != std::string::npos) {
    std::uint64_t a = one(spec.substr(0, dots)), b = one(spec.substr(dots + 2));
    if (b < a) throw ConfigError("empty codebook range \"" + spec + "\"");
    for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
  } else {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(one(tok));
  }
  if (out.empty()) throw ConfigError("codebook size list is empty");
  return out;
}

inline Vec parse_double_list(const std::string& spec, const std::string& what) {
  Vec out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError(what + ": bad number \"" + tok + "\"");
    }
    if (pos != tok.size()) throw ConfigError(what + ": bad number \"" + tok + "\"");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission

inline std::string csv_string(std::vector<BoundCurve> curves) {
  std::stable_sort(curves.begin(), curves.end(),
                   [](const BoundCurve& a, const BoundCurve& b) { return a.tag < b.tag; });
  std::string out = "M,bound,direction,value,raw_value,params_json\n";
  for (auto& c : curves) {
    std::stable_sort(c.points.begin(), c.points.end(),
                     [](const BoundPoint& a, const BoundPoint& b) { return a.M < b.M; });
    for (const auto& p : c.points) {
      out += std::to_string(p.M) + "," + c.tag + "," + c.direction + "," + fmt_g17(p.value) +
             "," + fmt_g17(p.raw_value) + "," + (p.params.empty() ? "{}" : p.params) + "\n";
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(content.data(), std::streamsize(content.size()));
  f.flush();
  if (!f) throw IoError("short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string summary_path(const std::string& out) { return out + ".summary.json"; }

// ---------------------------------------------------------------------------
// command dispatch

namespace detail {

inline json rd_solution_json(const rd::RDSolution& s) {
  json j;
  j["rate"] = s.rate;
  if (s.target_d1) j["target_d1"] = *s.target_d1;
  if (s.target_d2) j["target_d2"] = *s.target_d2;
  if (s.lambda1) j["lambda1"] = *s.lambda1;
  if (s.lambda2) j["lambda2"] = *s.lambda2;
  if (s.achieved_d1) j["achieved_d1"] = *s.achieved_d1;
  if (s.achieved_d2) j["achieved_d2"] = *s.achieved_d2;
  j["xhat_count"] = s.xhat_count;
  j["yhat_count"] = s.yhat_count;
  j["iterations"] = s.diag.iterations;
  j["duality_gap"] = s.diag.duality_gap;
  if (!s.diag.warnings.empty()) j["warnings"] = s.diag.warnings;
  return j;
}

inline json curves_json(const std::vector<BoundCurve>& curves) {
  json out = json::array();
  for (const auto& c : curves) {
    json jc;
    jc["bound"] = c.tag;
    jc["direction"] = c.direction;
    json pts = json::array();
    for (const auto& p : c.points) {
      json jp;
      jp["M"] = p.M;
      jp["value"] = p.value;
      jp["raw_value"] = p.raw_value;
      jp["params"] = json::parse(p.params.empty() ? "{}" : p.params);
      pts.push_back(jp);
    }
    jc["points"] = pts;
    out.push_back(jc);
  }
  return out;
}

inline Vec uniform_dist(std::size_t n) { return Vec(n, 1.0 / double(n)); }

inline Vec gamma_grid_for(const RunConfig& cfg, const ProblemInstance& inst) {
  return cfg.gamma_grid.empty() ? conv::default_gamma_grid(inst) : cfg.gamma_grid;
}

// distinct inference-failure levels plus the endpoints; the threshold and
// binning bounds are piecewise linear in eps_prime between these
inline Vec eps_grid_for(const RunConfig& cfg, const ProblemInstance& inst) {
  if (!cfg.eps_prime_grid.empty()) return cfg.eps_prime_grid;
  Mat pi1 = src::indirect_excess_table(inst);
  Vec grid = pi1.a;
  grid.push_back(0.0);
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace detail

inline json run(RunConfig cfg) {
  cfg.validate();
  ProblemInstance base;
  if (cfg.command != "example") {
    json inst_json = cfg.instance;
    if (inst_json.is_null()) {
      std::string text = read_text_file(cfg.instance_path);
      try {
        inst_json = json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("instance JSON does not parse: " + std::string(e.what()));
      }
    }
    base = instance_from_json(inst_json);
    cfg.instance = instance_to_json(base);  // canonical inline echo
  }

  std::vector<BoundCurve> curves;
  json results;
  bool all = cfg.bound == "all";

  if (cfg.command == "rd") {
    auto want = [&](const char* b) { return all || cfg.bound == b; };
    if (base.direct_is_logloss()) {
      if (want("r1"))
        results["r1"] = detail::rd_solution_json(rd::logloss_r1(base.source.p_x, base.D1));
      if (want("r2"))
        results["r2"] = detail::rd_solution_json(rd::solve_r2(base.source, base.d2, base.D2));
      if (want("joint")) {
        rd::LoglossRegime reg = rd::logloss_regime(base.source, base.d2, base.D1, base.D2);
        json rj;
        rj["applicable"] = reg.applicable;
        rj["binding_rate"] = reg.case_a ? "direct" : "inference";
        rj["h_x"] = reg.h_x;
        rj["r1_raw"] = reg.r1_raw;
        rj["r2_at_d2"] = reg.r2_at_d2;
        rj["r2_at_d2min"] = reg.r2_at_d2min;
        rj["d2_floor"] = reg.d2_floor;
        if (reg.applicable)
          rj["achiever"] = detail::rd_solution_json(
              rd::logloss_joint_achiever(base.source, base.d2, base.D1, base.D2));
        results["joint"] = rj;
      }
    } else {
      if (want("r1"))
        results["r1"] = detail::rd_solution_json(
            rd::solve_r1(base.source.p_x, base.d1, base.D1, base.source.x_alphabet));
      if (want("r2"))
        results["r2"] = detail::rd_solution_json(rd::solve_r2(base.source, base.d2, base.D2));
      if (want("joint"))
        results["joint"] = detail::rd_solution_json(
            rd::solve_joint(base.source, base.d1, base.d2, base.D1, base.D2));
    }
  } else if (cfg.command == "ach") {
    if (!base.direct_is_logloss() && (all || cfg.bound == "joint")) {
      BoundCurve c{"ach_joint", "upper", {}};
      for (std::uint64_t M : cfg.m_list) {
        ProblemInstance inst = base.with_m(M);
        ach::AchJointResult r;
        if (cfg.output_dist == "optimized") {
          r = ach::ach_optimize_output(inst);
        } else {
          r.q_pairs = detail::uniform_dist(inst.xhat_size() * inst.yhat_size());
          r.value = ach::ach_random_coding_bound(inst, r.q_pairs);
          r.origin = "uniform";
        }
        BoundPoint pt;
        pt.M = M;
        pt.value = r.value;
        pt.raw_value = r.value;
        pt.params = "{\"origin\":\"" + r.origin + "\"}";
        c.points.push_back(pt);
      }
      curves.push_back(std::move(c));
    } else if (cfg.bound == "joint") {
      throw ConfigError("the joint ensemble bound needs a per-pair direct distortion");
    }
    if (base.D1 == kInf && (all || cfg.bound == "indirect")) {
      BoundCurve c{"ach_indirect", "upper", {}};
      for (std::uint64_t M : cfg.m_list) {
        ProblemInstance inst = base.with_m(M);
        Vec p_yhat = detail::uniform_dist(inst.yhat_size());
        double v = kInf, eps = 0.0;
        if (!cfg.eps_prime_grid.empty()) {
          for (double e : cfg.eps_prime_grid) {
            double t = ach::ach_threshold_bound(inst, p_yhat, e);
            if (t < v) {
              v = t;
              eps = e;
            }
          }
        } else {
          std::tie(v, eps) = ach::ach_threshold_best(inst, p_yhat);
        }
        BoundPoint pt;
        pt.M = M;
        pt.value = clip01(v);
        pt.raw_value = v;
        pt.params = "{\"eps_prime\":" + json_num(eps) + "}";
        c.points.push_back(pt);
      }
      curves.push_back(std::move(c));
    } else if (cfg.bound == "indirect") {
      throw ConfigError("the threshold bound is for inference-only instances (D1 = \"inf\")");
    }
    if (base.direct_is_logloss() && (all || cfg.bound == "logloss")) {
      BoundCurve c{"ach_logloss", "upper", {}};
      Vec carry;
      for (std::uint64_t M : cfg.m_list) {
        ProblemInstance inst = base.with_m(M);
        Vec p_yhat = detail::uniform_dist(inst.yhat_size());
        ach::LoglossAchResult r = ach::ach_logloss_bound(
            inst, p_yhat, detail::eps_grid_for(cfg, inst), detail::gamma_grid_for(cfg, inst),
            carry);
        carry = Vec{r.gamma};
        BoundPoint pt;
        pt.M = M;
        pt.value = r.value;
        pt.raw_value = r.raw_value;
        pt.params = "{\"eps_prime\":" + json_num(r.eps_prime) + ",\"gamma\":" + json_num(r.gamma) +
                    ",\"variant_raw\":" + json_num(r.variant_raw) + "}";
        c.points.push_back(pt);
      }
      curves.push_back(std::move(c));
    } else if (cfg.bound == "logloss") {
      throw ConfigError("the binning bound requires a log-loss direct task");
    }
    if (curves.empty()) throw ConfigError("no achievability bound applies to this instance");
  } else if (cfg.command == "conv") {
    if (!base.direct_is_logloss() && (all || cfg.bound == "joint")) {
      rd::RDSolution sol = rd::solve_joint(base.source, base.d1, base.d2, base.D1, base.D2);
      BoundCurve c{"conv_joint", "lower", {}};
      for (std::uint64_t M : cfg.m_list) {
        ProblemInstance inst = base.with_m(M);
        conv::ConvResult r =
            conv::conv_joint_bound(inst, sol, detail::gamma_grid_for(cfg, inst), cfg.exact_lp);
        BoundPoint pt;
        pt.M = M;
        pt.value = r.value;
        pt.raw_value = r.raw_value;
        pt.params = "{\"gamma\":" + json_num(r.gamma) + ",\"mode\":\"" + r.mode +
                    "\",\"raw_supinf\":" + json_num(r.raw_supinf) +
                    ",\"raw_lp\":" + json_num(r.raw_lp) + "}";
        c.points.push_back(pt);
      }
      curves.push_back(std::move(c));
    } else if (cfg.bound == "joint") {
      throw ConfigError("the joint converse needs a per-pair direct distortion");
    }
    if (base.direct_is_logloss() && (all || cfg.bound == "logloss")) {
      BoundCurve c{"conv_logloss", "lower", {}};
      for (std::uint64_t M : cfg.m_list) {
        ProblemInstance inst = base.with_m(M);
        conv::ConvResult r =
            conv::conv_logloss_bound(inst, detail::gamma_grid_for(cfg, inst), cfg.exact_lp);
        BoundPoint pt;
        pt.M = M;
        pt.value = r.value;
        pt.raw_value = r.raw_value;
        pt.params = "{\"gamma\":" + json_num(r.gamma) + ",\"mode\":\"" + r.mode +
                    "\",\"raw_supinf\":" + json_num(r.raw_supinf) +
                    ",\"raw_lp\":" + json_num(r.raw_lp) + "}";
        c.points.push_back(pt);
      }
      curves.push_back(std::move(c));
    } else if (cfg.bound == "logloss") {
      throw ConfigError("the log-loss converse requires a log-loss direct task");
    }
    if (curves.empty()) throw ConfigError("no converse bound applies to this instance");
  } else if (cfg.command == "oracle") {
    BoundCurve c{"oracle", "exact", {}};
    json reals = json::array();
    for (std::uint64_t M : cfg.m_list) {
      ProblemInstance inst = base.with_m(M);
      auto [v, code] = base.direct_is_logloss() ? sim::exact_eps_star_logloss(inst, cfg.budget)
                                                : sim::exact_eps_star(inst, cfg.budget);
      BoundPoint pt;
      pt.M = M;
      pt.value = v;
      pt.raw_value = v;
      pt.params = "{\"budget\":" + json_num(cfg.budget) + "}";
      c.points.push_back(pt);
      json jr;
      jr["M"] = M;
      jr["value"] = v;
      jr["encoder"] = code.encoder;
      if (base.direct_is_logloss()) {
        jr["decoder_yhat"] = code.decoder_yhat;
        jr["decoder_distributions"] = code.decoder_distributions;
      } else {
        json dec = json::array();
        for (const auto& [xh, yh] : code.decoder) dec.push_back(json::array({xh, yh}));
        jr["decoder"] = dec;
      }
      reals.push_back(jr);
    }
    curves.push_back(std::move(c));
    results["realizations"] = reals;
  } else if (cfg.command == "simulate") {
    BoundCurve c{"sim_" + cfg.scheme, "estimate", {}};
    json reps = json::array();
    for (std::uint64_t M : cfg.m_list) {
      ProblemInstance inst = base.with_m(M);
      sim::SimReport rep;
      std::string extra;
      if (cfg.scheme == "joint") {
        if (base.direct_is_logloss())
          throw ConfigError("the joint scheme needs a per-pair direct distortion");
        Vec q = detail::uniform_dist(inst.xhat_size() * inst.yhat_size());
        if (cfg.output_dist == "optimized") q = ach::ach_optimize_output(inst).q_pairs;
        rep = sim::simulate_joint_code(inst, q, cfg.trials, cfg.seed);
        extra = ",\"output_dist\":\"" + cfg.output_dist + "\"";
      } else if (cfg.scheme == "indirect") {
        if (base.D1 != kInf) throw ConfigError("the indirect scheme requires D1 = \"inf\"");
        rep = sim::simulate_indirect_code(inst, detail::uniform_dist(inst.yhat_size()),
                                          cfg.eps_prime, cfg.trials, cfg.seed);
        extra = ",\"eps_prime\":" + json_num(cfg.eps_prime);
      } else {
        if (!base.direct_is_logloss())
          throw ConfigError("the binning scheme requires a log-loss direct task");
        rep = sim::simulate_logloss_code(inst, detail::uniform_dist(inst.yhat_size()),
                                         cfg.eps_prime, cfg.gamma, cfg.trials, cfg.seed);
        extra = ",\"eps_prime\":" + json_num(cfg.eps_prime) + ",\"gamma\":" + json_num(cfg.gamma);
      }
      BoundPoint pt;
      pt.M = M;
      pt.value = rep.estimate;
      pt.raw_value = rep.estimate;
      pt.params = "{\"trials\":" + std::to_string(rep.trials) +
                  ",\"seed\":" + std::to_string(rep.seed) +
                  ",\"excess_count\":" + std::to_string(rep.excess_count) +
                  ",\"std_error\":" + json_num(rep.std_error) + extra + "}";
      c.points.push_back(pt);
      json jr;
      jr["M"] = M;
      jr["estimate"] = rep.estimate;
      jr["std_error"] = rep.std_error;
      jr["excess_count"] = rep.excess_count;
      jr["trials"] = rep.trials;
      jr["seed"] = rep.seed;
      reps.push_back(jr);
    }
    curves.push_back(std::move(c));
    results["reports"] = reps;
  } else {  // example
    curves.push_back(ach::example_achievability_curve(
        std::size_t(cfg.example_m), std::size_t(cfg.example_n), cfg.example_p, cfg.example_d1,
        cfg.m_list, cfg.example_d2));
    curves.push_back(conv::example_converse_curve(std::size_t(cfg.example_m), cfg.m_list));
  }

  results["curves"] = detail::curves_json(curves);
  write_text_file(cfg.out, csv_string(curves));
  json summary = config_to_json(cfg);
  summary["results"] = results;
  write_text_file(summary_path(cfg.out), summary.dump(2) + "\n");
  return summary;
}

}  // namespace jir::cli
