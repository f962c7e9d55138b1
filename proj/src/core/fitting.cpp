#include "core/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "core/lineshape.hpp"

namespace rovi {

std::vector<BroadeningObservation> average_by_m(
    const std::vector<BroadeningObservation>& observations) {
  if (observations.empty())
    throw invalid_argument_error("average_by_m: no observations");
  std::map<std::pair<int, std::string>, std::vector<const BroadeningObservation*>> groups;
  for (const auto& o : observations) groups[{o.m_abs, o.source}].push_back(&o);

  std::vector<BroadeningObservation> out;
  out.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    BroadeningObservation avg;
    avg.m_abs = key.first;
    avg.source = key.second;
    double g = 0.0, s = 0.0;
    for (const auto* o : members) {
      g += o->gamma;
      s += o->sigma;
    }
    const double n = static_cast<double>(members.size());
    avg.gamma = g / n;
    avg.sigma = (s / n) / std::sqrt(n);
    out.push_back(std::move(avg));
  }
  return out;
}

namespace {

struct ModelContext {
  GapLawKind law = GapLawKind::Egl;
  bool tied = true;
  std::vector<std::string> labels;
  // topology channels grouped per label, with weights retained
  std::map<std::string, std::vector<ChannelSpec>> channels_by_label;
  const LevelBasis* basis = nullptr;
  double temperature_k = 296.0;

  int params_per_set() const { return law == GapLawKind::Egl ? 2 : 3; }
  int n_sets() const { return tied ? 1 : static_cast<int>(labels.size()); }
  int n_params() const { return n_sets() * params_per_set(); }

  GapLawParams params_from(const Eigen::VectorXd& x, int set) const {
    const int o = set * params_per_set();
    GapLawParams p;
    p.kind = law;
    p.k0 = std::exp(x[o]);
    p.eta = x[o + 1];
    p.beta = law == GapLawKind::Epgl ? x[o + 2] : 0.0;
    return p;
  }

  int set_of(const std::string& label) const {
    if (tied) return 0;
    const auto it = std::find(labels.begin(), labels.end(), label);
    return static_cast<int>(it - labels.begin());
  }

  double gamma_model(const std::string& label, int m, const Eigen::VectorXd& x) const {
    const GapLawParams p = params_from(x, set_of(label));
    double gamma = 0.0;
    for (const ChannelSpec& topo : channels_by_label.at(label)) {
      ChannelSpec c = topo;
      c.params = p;
      c.params_dj2.reset();  // fitted laws carry a single parameter set
      gamma += c.weight * channel_outflow_sum(c, *basis, m, temperature_k);
    }
    return gamma;
  }
};

struct ResidualRow {
  int m = 0;
  std::string label;
  double gamma = 0.0;
  double weight = 1.0;  // 1/sigma (or 1)
};

Eigen::VectorXd residuals_weighted(const ModelContext& ctx,
                                   const std::vector<ResidualRow>& rows,
                                   const Eigen::VectorXd& x) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    r[static_cast<Eigen::Index>(i)] =
        (ctx.gamma_model(rows[i].label, rows[i].m, x) - rows[i].gamma) * rows[i].weight;
  return r;
}

Eigen::MatrixXd jacobian_central(const ModelContext& ctx,
                                 const std::vector<ResidualRow>& rows,
                                 const Eigen::VectorXd& x) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = x.size();
  Eigen::MatrixXd jac(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (residuals_weighted(ctx, rows, xp) - residuals_weighted(ctx, rows, xm)) /
                 (2.0 * h);
  }
  return jac;
}

}  // namespace

FitResult fit_gap_law(const std::vector<BroadeningObservation>& observations,
                      GapLawKind law, const LevelBasis& basis, const ChannelSet& topology,
                      double temperature_k, const FitOptions& options) {
  if (observations.empty())
    throw invalid_argument_error("fit_gap_law: no observations");

  ModelContext ctx;
  ctx.law = law;
  ctx.tied = options.tie_parameters;
  ctx.basis = &basis;
  ctx.temperature_k = temperature_k;
  for (const ChannelSpec& c : topology.channels()) ctx.channels_by_label[c.from_vib].push_back(c);
  for (const auto& [label, group] : ctx.channels_by_label) {
    if (!basis.has_vib(label))
      throw config_error("fit_gap_law: fitted vib '" + label + "' not in basis");
    ctx.labels.push_back(label);
  }

  // residual rows: tagged observations go to their label, untagged to all
  std::vector<ResidualRow> rows;
  std::set<int> distinct_m;
  double gamma_mean = 0.0;
  for (const auto& o : observations) {
    if (!(o.gamma > 0.0)) throw invalid_argument_error("fit_gap_law: gamma must be > 0");
    if (!(o.sigma > 0.0)) throw invalid_argument_error("fit_gap_law: sigma must be > 0");
    if (o.m_abs < 1) throw invalid_argument_error("fit_gap_law: m must be >= 1");
    std::vector<std::string> assigned;
    if (o.source.empty()) {
      assigned = ctx.labels;
    } else if (ctx.channels_by_label.count(o.source)) {
      assigned = {o.source};
    } else {
      throw config_error("fit_gap_law: observation tag '" + o.source +
                         "' matches no fitted eigenstate label");
    }
    for (const std::string& label : assigned) {
      if (basis.index_of(label, o.m_abs) < 0)
        throw config_error("fit_gap_law: upper level (" + label + ", J=" +
                           std::to_string(o.m_abs) + ") not in basis");
      rows.push_back({o.m_abs, label, o.gamma, options.weighted ? 1.0 / o.sigma : 1.0});
    }
    distinct_m.insert(o.m_abs);
    gamma_mean += o.gamma;
  }
  gamma_mean /= static_cast<double>(observations.size());

  const int n_params = ctx.n_params();
  if (static_cast<int>(distinct_m.size()) < n_params + 1)
    throw invalid_argument_error("fit_gap_law: need at least " +
                                 std::to_string(n_params + 1) + " distinct m values");

  Eigen::VectorXd x(n_params);
  {
    GapLawParams g0;
    g0.kind = law;
    g0.k0 = gamma_mean / 10.0;
    g0.eta = 1.5;
    g0.beta = 0.3;
    if (options.initial_guess) {
      g0 = *options.initial_guess;
      g0.kind = law;
      if (!(g0.k0 > 0.0))
        throw invalid_argument_error("fit_gap_law: initial K0 must be > 0");
    }
    for (int s = 0; s < ctx.n_sets(); ++s) {
      const int o = s * ctx.params_per_set();
      x[o] = std::log(g0.k0);
      x[o + 1] = g0.eta;
      if (law == GapLawKind::Epgl) x[o + 2] = g0.beta;
    }
  }

  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::VectorXd r = residuals_weighted(ctx, rows, x);
  double chi2 = r.squaredNorm();
  const double initial_rms = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      const double u = r[i] / rows[static_cast<std::size_t>(i)].weight;
      s += u * u;
    }
    return std::sqrt(s / static_cast<double>(n_rows));
  }();

  // Levenberg-Marquardt on the damped normal equations
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd jac;
  for (; iter < options.max_iterations && !converged; ++iter) {
    jac = jacobian_central(ctx, rows, x);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    if (g.cwiseAbs().maxCoeff() < 1e-12) {
      converged = true;
      break;
    }
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index d = 0; d < damped.rows(); ++d)
        damped(d, d) += lambda * std::max(a(d, d), 1e-30);
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      const Eigen::VectorXd x_new = x + delta;
      const Eigen::VectorXd r_new = residuals_weighted(ctx, rows, x_new);
      const double chi2_new = r_new.squaredNorm();
      if (std::isfinite(chi2_new) && chi2_new <= chi2) {
        const double rel_drop = (chi2 - chi2_new) / std::max(chi2, 1e-300);
        const double step = delta.cwiseAbs().maxCoeff();
        x = x_new;
        r = r_new;
        chi2 = chi2_new;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (step < 1e-12 * (1.0 + x.cwiseAbs().maxCoeff()) || rel_drop < 1e-14)
          converged = true;
      } else {
        lambda *= 3.0;
        if (lambda > 1e14) break;  // no downhill direction left
      }
    }
    if (!accepted) break;
  }

  FitResult result;
  result.law = law;
  result.tied = ctx.tied;
  result.labels = ctx.labels;
  result.iterations = iter;
  result.converged = converged;
  result.chi2 = chi2;
  result.initial_rms = initial_rms;

  result.residuals.resize(n_rows);
  for (Eigen::Index i = 0; i < n_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    result.residuals[i] = r[i] / row.weight;
    result.residual_keys.emplace_back(row.m, row.label);
  }
  result.rms = std::sqrt(result.residuals.squaredNorm() / static_cast<double>(n_rows));

  const int dof = static_cast<int>(n_rows) - n_params;
  result.chi2_reduced = dof > 0 ? chi2 / dof : chi2;

  // covariance of the physical parameters from the normal equations at the
  // solution, scaled by the reduced chi^2
  jac = jacobian_central(ctx, rows, x);
  result.jacobian = jac;
  const Eigen::MatrixXd a = jac.transpose() * jac;
  Eigen::MatrixXd cov_x = a.ldlt().solve(
      Eigen::MatrixXd::Identity(n_params, n_params));
  cov_x *= (dof > 0 ? result.chi2_reduced : 1.0);
  Eigen::VectorXd scale(n_params);
  for (int s = 0; s < ctx.n_sets(); ++s) {
    const int o = s * ctx.params_per_set();
    scale[o] = std::exp(x[o]);  // d K0 / d lnK0
    scale[o + 1] = 1.0;
    if (law == GapLawKind::Epgl) scale[o + 2] = 1.0;
  }
  result.covariance = scale.asDiagonal() * cov_x * scale.asDiagonal();

  for (const std::string& label : ctx.labels) {
    const int s = ctx.set_of(label);
    const int o = s * ctx.params_per_set();
    GapLawParams p = ctx.params_from(x, s);
    p.sigma_k0 = std::sqrt(std::max(result.covariance(o, o), 0.0));
    p.sigma_eta = std::sqrt(std::max(result.covariance(o + 1, o + 1), 0.0));
    if (law == GapLawKind::Epgl)
      p.sigma_beta = std::sqrt(std::max(result.covariance(o + 2, o + 2), 0.0));
    if (p.k0 < 1e-12) result.boundary_warning = true;
    result.params[label] = p;
  }

  if (!converged)
    throw FitError("fit_gap_law: no convergence within " +
                       std::to_string(options.max_iterations) + " iterations",
                   std::move(result));
  return result;
}

std::map<std::string, std::vector<double>> predict_broadening_curve(
    const std::map<std::string, GapLawParams>& params_by_label, const LevelBasis& basis,
    const ChannelSet& topology, double temperature_k, int m_min, int m_max) {
  if (m_min < 1 || m_max < m_min)
    throw invalid_argument_error("predict_broadening_curve: bad m range");
  std::map<std::string, std::vector<double>> out;
  for (const auto& [label, params] : params_by_label) {
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(m_max - m_min) + 1);
    for (int m = m_min; m <= m_max; ++m) {
      double gamma = 0.0;
      for (const ChannelSpec& topo : topology.channels()) {
        if (topo.from_vib != label) continue;
        ChannelSpec c = topo;
        c.params = params;
        c.params.kind = params.kind;
        c.params_dj2.reset();
        gamma += c.weight * channel_outflow_sum(c, basis, m, temperature_k);
      }
      curve.push_back(gamma);
    }
    out[label] = std::move(curve);
  }
  return out;
}

std::string fit_result_to_json(const FitResult& result) {
  nlohmann::json j;
  j["law"] = result.law == GapLawKind::Egl ? "egl" : "epgl";
  j["tied"] = result.tied;
  j["converged"] = result.converged;
  j["iterations"] = result.iterations;
  j["rms_cm1_atm1"] = result.rms;
  j["initial_rms_cm1_atm1"] = result.initial_rms;
  j["chi2"] = result.chi2;
  j["chi2_reduced"] = result.chi2_reduced;
  j["boundary_warning"] = result.boundary_warning;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [label, p] : result.params) {
    nlohmann::json e;
    e["K0_cm1_atm1"] = p.k0;
    e["eta"] = p.eta;
    if (p.kind == GapLawKind::Epgl) e["beta"] = p.beta;
    if (p.sigma_k0) e["sigma_K0"] = *p.sigma_k0;
    if (p.sigma_eta) e["sigma_eta"] = *p.sigma_eta;
    if (p.kind == GapLawKind::Epgl && p.sigma_beta) e["sigma_beta"] = *p.sigma_beta;
    params[label] = std::move(e);
  }
  j["parameters"] = std::move(params);
  nlohmann::json res = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.residuals.size(); ++i) {
    nlohmann::json row;
    row["m"] = result.residual_keys[static_cast<std::size_t>(i)].first;
    row["label"] = result.residual_keys[static_cast<std::size_t>(i)].second;
    row["residual_cm1_atm1"] = result.residuals[i];
    res.push_back(std::move(row));
  }
  j["residuals"] = std::move(res);
  return j.dump(2);
}

}  // namespace rovi
