#include "riemopt/stats/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "riemopt/stats/envglm.hpp"
#include "riemopt/stats/made.hpp"
#include "riemopt/stats/metrics.hpp"
#include "riemopt/stats/pfc.hpp"

namespace riemopt::stats {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Replication {
  int index;
  std::uint64_t seed;
  std::vector<BenchRow>* out;

  void add(const std::string& method, const std::string& metric, double value,
           double seconds) const {
    out->push_back(BenchRow{index, method, metric, value, seconds});
  }
};

Eigen::Index pick(Eigen::Index value, Eigen::Index fallback) {
  return value > 0 ? value : fallback;
}

void pfc_unstructured_rep(const StudyOptions& opt, const Replication& rep) {
  const PfcSample s = pfc_simulate(pick(opt.n, 300), pick(opt.p, 10), rep.seed,
                                   PfcStructure::kUnstructured);
  auto record = [&](const std::string& method, const PfcFit& fit, double secs) {
    rep.add(method, "d_delta", cov_distance(s.truth.delta, fit.delta), secs);
    rep.add(method, "rho", subspace_distance(s.truth.gamma, fit.gamma), secs);
    rep.add(method, "negloglik", fit.objective, secs);
  };
  auto t0 = Clock::now();
  const PfcFit classical = pfc_unstructured_classical(s.data);
  record("Classical", classical, seconds_since(t0));
  t0 = Clock::now();
  const PfcFit manifold = pfc_unstructured_manifold_fit(s.data, pfc_default_config());
  record("Manifold", manifold, seconds_since(t0));
}

void pfc_envelope_rep(const StudyOptions& opt, const Replication& rep) {
  const PfcSample s = pfc_simulate(pick(opt.n, 300), pick(opt.p, 10), rep.seed,
                                   PfcStructure::kEnvelope);
  const PfcTruth& t = s.truth;
  const Matrix m_true = t.gamma * t.omega * t.gamma.transpose();
  const Matrix m0_true = t.gamma0 * t.omega0 * t.gamma0.transpose();
  auto record = [&](const std::string& method, const PfcFit& fit, double secs) {
    rep.add(method, "d_omega",
            cov_distance(m_true, fit.gamma * fit.omega * fit.gamma.transpose()), secs);
    rep.add(method, "d_omega0",
            cov_distance(m0_true, fit.gamma0 * fit.omega0 * fit.gamma0.transpose()),
            secs);
    rep.add(method, "rho", subspace_distance(t.gamma, fit.gamma), secs);
    rep.add(method, "negloglik", fit.objective, secs);
  };
  const SolverConfig config = pfc_default_config();
  auto t0 = Clock::now();
  const PfcFit classical = pfc_envelope_classical(s.data, config);
  record("Classical", classical, seconds_since(t0));
  t0 = Clock::now();
  const PfcFit manifold = pfc_envelope_manifold_fit(s.data, config);
  record("Manifold", manifold, seconds_since(t0));
}

void envglm_rep(const StudyOptions& opt, const Replication& rep) {
  const EnvGlmData data = envglm_simulate(pick(opt.n, 150), rep.seed);
  auto record = [&](const std::string& method, const Vector& beta, double secs) {
    rep.add(method, "beta1", beta(0), secs);
    rep.add(method, "beta2", beta(1), secs);
  };
  auto t0 = Clock::now();
  const GlmFit glm = glm_logistic_fit(data.y, data.x);
  record("GLM", glm.beta, seconds_since(t0));
  t0 = Clock::now();
  const EnvGlmFit alg1 =
      envglm_fit(data, EnvGlmMode::kGrassmannProfile, opt.restarts, rep.seed);
  record("Algorithm-1", alg1.beta, seconds_since(t0));
  t0 = Clock::now();
  const EnvGlmFit joint =
      envglm_fit(data, EnvGlmMode::kProductJoint, opt.restarts, rep.seed);
  record("Product-manifold", joint.beta, seconds_since(t0));
}

void made_rep(const StudyOptions& opt, const Replication& rep) {
  Vector beta(3);
  beta << 1.0, 0.5, -0.5;
  const MadeData data = made_simulate(pick(opt.n, 147), beta, rep.seed);
  const auto t0 = Clock::now();
  const MadeFit fit = made_fit(data, std::nullopt);
  const double secs = seconds_since(t0);
  const Matrix truth = beta.normalized();
  rep.add("MADE", "rho", subspace_distance(truth, fit.b), secs);
  const Vector fc = fit.fitted.array() - fit.fitted.mean();
  const Vector yc = data.y.array() - data.y.mean();
  rep.add("MADE", "correlation", fc.dot(yc) / (fc.norm() * yc.norm()), secs);
  rep.add("MADE", "deviance", fit.deviance, secs);
}

std::string cell(const MeanSe& s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f (%.3f)", s.mean, s.se);
  return buf;
}

std::string table(const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : body) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      out << row[c];
      if (c + 1 < row.size()) out << std::string(width[c] - row[c].size(), ' ');
    }
    out << '\n';
  };
  line(header);
  for (const auto& row : body) line(row);
  return out.str();
}

}  // namespace

std::string_view study_name(Study study) {
  switch (study) {
    case Study::kPfcUnstructured: return "pfc-unstructured";
    case Study::kPfcEnvelope: return "pfc-envelope";
    case Study::kEnvelopeGlm: return "envelope-glm";
    case Study::kMade: return "made";
  }
  return "";
}

const std::vector<Study>& all_studies() {
  static const std::vector<Study> studies = {Study::kPfcUnstructured, Study::kPfcEnvelope,
                                             Study::kEnvelopeGlm, Study::kMade};
  return studies;
}

std::optional<Study> parse_study(std::string_view name) {
  for (Study s : all_studies()) {
    if (study_name(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<BenchRow> run_study(Study study, const StudyOptions& options) {
  if (options.reps < 1) throw std::invalid_argument("run_study: reps must be >= 1");
  std::function<void(const StudyOptions&, const Replication&)> body;
  switch (study) {
    case Study::kPfcUnstructured: body = pfc_unstructured_rep; break;
    case Study::kPfcEnvelope: body = pfc_envelope_rep; break;
    case Study::kEnvelopeGlm: body = envglm_rep; break;
    case Study::kMade: body = made_rep; break;
  }

  std::vector<std::vector<BenchRow>> slots(static_cast<std::size_t>(options.reps));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < options.reps; i = next++) {
      try {
        body(options, Replication{i, options.seed + static_cast<std::uint64_t>(i),
                                  &slots[static_cast<std::size_t>(i)]});
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  int workers = options.workers > 0
                    ? options.workers
                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, options.reps);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<BenchRow> rows;
  for (auto& slot : slots) {
    rows.insert(rows.end(), std::make_move_iterator(slot.begin()),
                std::make_move_iterator(slot.end()));
  }
  return rows;
}

std::string format_rows(const std::vector<BenchRow>& rows, bool timing) {
  std::ostringstream out;
  out << "replication,method,metric,value,seconds\n";
  char buf[64];
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.10g", r.value);
    out << r.replication << ',' << r.method << ',' << r.metric << ',' << buf << ',';
    if (timing) {
      std::snprintf(buf, sizeof(buf), "%.4f", r.seconds);
      out << buf;
    } else {
      out << "NA";
    }
    out << '\n';
  }
  return out.str();
}

MeanSe summarize(const std::vector<BenchRow>& rows, std::string_view method,
                 std::string_view metric) {
  std::vector<double> v;
  for (const BenchRow& r : rows) {
    if (r.method == method && r.metric == metric) v.push_back(r.value);
  }
  MeanSe s;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

std::string format_summary(Study study, const std::vector<BenchRow>& rows) {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> body;
  auto metric_rows = [&](const std::vector<std::string>& methods,
                         const std::vector<std::string>& metrics) {
    for (const std::string& m : methods) {
      std::vector<std::string> row{m};
      for (const std::string& k : metrics) row.push_back(cell(summarize(rows, m, k)));
      body.push_back(row);
    }
  };
  switch (study) {
    case Study::kPfcUnstructured:
      header = {"Method", "d(Delta, Delta_hat)", "rho(Gamma, Gamma_hat)"};
      metric_rows({"Classical", "Manifold"}, {"d_delta", "rho"});
      break;
    case Study::kPfcEnvelope:
      header = {"Method", "d(Omega, Omega_hat)", "d(Omega0, Omega0_hat)",
                "rho(Gamma, Gamma_hat)"};
      metric_rows({"Classical", "Manifold"}, {"d_omega", "d_omega0", "rho"});
      break;
    case Study::kEnvelopeGlm: {
      header = {"Method", "beta1", "beta2"};
      const Vector truth = envglm_true_beta();
      char b1[32];
      char b2[32];
      std::snprintf(b1, sizeof(b1), "%.3f", truth(0));
      std::snprintf(b2, sizeof(b2), "%.3f", truth(1));
      body.push_back({"Truth", b1, b2});
      metric_rows({"GLM", "Algorithm-1", "Product-manifold"}, {"beta1", "beta2"});
      break;
    }
    case Study::kMade:
      header = {"Method", "rho(beta, B_hat)", "cor(fitted, Y)", "deviance"};
      metric_rows({"MADE"}, {"rho", "correlation", "deviance"});
      break;
  }
  return table(header, body);
}

}  // namespace riemopt::stats
