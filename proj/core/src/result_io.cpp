#include "riemopt/result_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"

namespace riemopt {
namespace {

using nlohmann::json;

json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "NaN";
  return v > 0 ? "Inf" : "-Inf";
}

double as_real(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Inf") return std::numeric_limits<double>::infinity();
    if (s == "-Inf") return -std::numeric_limits<double>::infinity();
  }
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  throw ResultFormatError("expected a real number, got " + j.dump());
}

json real_array(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(real(x));
  return a;
}

std::vector<double> as_real_array(const json& j) {
  if (!j.is_array()) throw ResultFormatError("expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& e : j) out.push_back(as_real(e));
  return out;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "nan" || s == "-nan" || s == "NaN") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ResultFormatError("not a number: '" + s + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw ResultFormatError("not a count: '" + s + "'");
  }
  return v;
}

Method method_or_throw(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw ResultFormatError("unknown method '" + name + "'");
  return *m;
}

StopReason stop_reason_or_throw(const std::string& name) {
  for (StopReason r : {StopReason::kGradientTolerance, StopReason::kMaxIteration,
                       StopReason::kLineSearchFailure,
                       StopReason::kTrustRegionFailure}) {
    if (stop_reason_name(r) == name) return r;
  }
  throw ResultFormatError("unknown stop reason '" + name + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

const std::vector<std::string>& result_field_names() {
  static const std::vector<std::string> names = {
      "xopt",  "fval",          "normgf",        "normgfgf0", "iter",
      "num.obj.eval", "num.grad.eval", "nR", "nV", "nVp",
      "nH",    "elapsed",       "funSeries",     "gradSeries", "timeSeries"};
  return names;
}

std::string to_json(const ResultDocument& doc) {
  const OptimResult& r = doc.result;
  json j = json::object();
  j["problem"] = doc.problem;
  j["manifold"] = doc.manifold;
  j["method"] = std::string(method_name(r.method));
  j["stop_reason"] = std::string(stop_reason_name(r.stop_reason));
  j["xopt"] = real_array({r.xopt.data(), r.xopt.data() + r.xopt.size()});
  j["fval"] = real(r.fval);
  j["normgf"] = real(r.normgf);
  j["normgfgf0"] = real(r.normgfgf0);
  j["iter"] = r.iter;
  j["num.obj.eval"] = r.num_obj_eval;
  j["num.grad.eval"] = r.num_grad_eval;
  j["nR"] = r.nR;
  j["nV"] = r.nV;
  j["nVp"] = r.nVp;
  j["nH"] = r.nH;
  j["elapsed"] = real(r.elapsed);
  j["funSeries"] = real_array(r.fun_series);
  j["gradSeries"] = real_array(r.grad_series);
  j["timeSeries"] = real_array(r.time_series);
  return j.dump(2) + "\n";
}

ResultDocument parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ResultFormatError(std::string("invalid JSON: ") + e.what());
  }
  try {
    ResultDocument doc;
    OptimResult& r = doc.result;
    doc.problem = j.value("problem", "");
    doc.manifold = j.value("manifold", "");
    r.method = method_or_throw(j.at("method").get<std::string>());
    r.stop_reason = stop_reason_or_throw(j.at("stop_reason").get<std::string>());
    const std::vector<double> x = as_real_array(j.at("xopt"));
    r.xopt = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    r.fval = as_real(j.at("fval"));
    r.normgf = as_real(j.at("normgf"));
    r.normgfgf0 = as_real(j.at("normgfgf0"));
    r.iter = j.at("iter").get<int>();
    r.num_obj_eval = j.at("num.obj.eval").get<std::uint64_t>();
    r.num_grad_eval = j.at("num.grad.eval").get<std::uint64_t>();
    r.nR = j.at("nR").get<std::uint64_t>();
    r.nV = j.at("nV").get<std::uint64_t>();
    r.nVp = j.at("nVp").get<std::uint64_t>();
    r.nH = j.at("nH").get<std::uint64_t>();
    r.elapsed = as_real(j.at("elapsed"));
    r.fun_series = as_real_array(j.at("funSeries"));
    r.grad_series = as_real_array(j.at("gradSeries"));
    r.time_series = as_real_array(j.at("timeSeries"));
    return doc;
  } catch (const json::exception& e) {
    throw ResultFormatError(std::string("malformed result document: ") + e.what());
  }
}

std::string to_csv(const ResultDocument& doc) {
  const OptimResult& r = doc.result;
  std::ostringstream out;
  out << "key,value\n";
  out << "problem," << doc.problem << '\n';
  out << "manifold," << doc.manifold << '\n';
  out << "method," << method_name(r.method) << '\n';
  out << "stop_reason," << stop_reason_name(r.stop_reason) << '\n';
  out << "fval," << g17(r.fval) << '\n';
  out << "normgf," << g17(r.normgf) << '\n';
  out << "normgfgf0," << g17(r.normgfgf0) << '\n';
  out << "iter," << r.iter << '\n';
  out << "num.obj.eval," << r.num_obj_eval << '\n';
  out << "num.grad.eval," << r.num_grad_eval << '\n';
  out << "nR," << r.nR << '\n';
  out << "nV," << r.nV << '\n';
  out << "nVp," << r.nVp << '\n';
  out << "nH," << r.nH << '\n';
  out << "elapsed," << g17(r.elapsed) << '\n';
  out << '\n';
  out << "index,xopt\n";
  for (Eigen::Index i = 0; i < r.xopt.size(); ++i) {
    out << i << ',' << g17(r.xopt(i)) << '\n';
  }
  out << '\n';
  out << "iter,funSeries,gradSeries,timeSeries\n";
  const std::size_t n = std::max({r.fun_series.size(), r.grad_series.size(),
                                  r.time_series.size()});
  auto cell = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? g17(v[i]) : std::string();
  };
  for (std::size_t i = 0; i < n; ++i) {
    out << i << ',' << cell(r.fun_series, i) << ',' << cell(r.grad_series, i)
        << ',' << cell(r.time_series, i) << '\n';
  }
  return out.str();
}

ResultDocument parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::string, std::string> scalars;
  std::vector<double> x;
  ResultDocument doc;
  OptimResult& r = doc.result;

  enum class Section { kNone, kScalars, kXopt, kSeries } section = Section::kNone;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      section = Section::kNone;
      continue;
    }
    if (section == Section::kNone) {
      if (line == "key,value") {
        section = Section::kScalars;
      } else if (line == "index,xopt") {
        section = Section::kXopt;
      } else if (line == "iter,funSeries,gradSeries,timeSeries") {
        section = Section::kSeries;
      } else {
        throw ResultFormatError("unexpected CSV section header: " + line);
      }
      continue;
    }
    const std::vector<std::string> cells = split(line, ',');
    switch (section) {
      case Section::kScalars: {
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ResultFormatError("bad scalar row: " + line);
        scalars[line.substr(0, comma)] = line.substr(comma + 1);
        break;
      }
      case Section::kXopt:
        if (cells.size() != 2) throw ResultFormatError("bad xopt row: " + line);
        x.push_back(parse_real(cells[1]));
        break;
      case Section::kSeries:
        if (cells.size() != 4) throw ResultFormatError("bad series row: " + line);
        if (!cells[1].empty()) r.fun_series.push_back(parse_real(cells[1]));
        if (!cells[2].empty()) r.grad_series.push_back(parse_real(cells[2]));
        if (!cells[3].empty()) r.time_series.push_back(parse_real(cells[3]));
        break;
      case Section::kNone:
        break;
    }
  }

  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = scalars.find(key);
    if (it == scalars.end()) throw ResultFormatError("missing field '" + key + "'");
    return it->second;
  };
  doc.problem = scalars.count("problem") ? scalars["problem"] : "";
  doc.manifold = scalars.count("manifold") ? scalars["manifold"] : "";
  r.method = method_or_throw(get("method"));
  r.stop_reason = stop_reason_or_throw(get("stop_reason"));
  r.fval = parse_real(get("fval"));
  r.normgf = parse_real(get("normgf"));
  r.normgfgf0 = parse_real(get("normgfgf0"));
  r.iter = static_cast<int>(parse_count(get("iter")));
  r.num_obj_eval = parse_count(get("num.obj.eval"));
  r.num_grad_eval = parse_count(get("num.grad.eval"));
  r.nR = parse_count(get("nR"));
  r.nV = parse_count(get("nV"));
  r.nVp = parse_count(get("nVp"));
  r.nH = parse_count(get("nH"));
  r.elapsed = parse_real(get("elapsed"));
  r.xopt = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  return doc;
}

std::string format_result(const ResultDocument& doc, ResultFormat format) {
  return format == ResultFormat::kJson ? to_json(doc) : to_csv(doc);
}

ResultDocument parse_result(const std::string& text, ResultFormat format) {
  return format == ResultFormat::kJson ? parse_json(text) : parse_csv(text);
}

}  // namespace riemopt
