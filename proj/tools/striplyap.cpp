#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "striplyap/striplyap.hpp"

namespace sl = striplyap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitRejected = 2;
constexpr int kExitUsage = 64;

struct Config {
  std::string command;
  int width = 13;
  double energy = 0.0;
  double lambda = 0.1;
  std::string sweep_energy;
  std::string sweep_lambda;
  std::int64_t steps = 1'000'000;
  std::int64_t burn_in = -1;
  int trajectories = 8;
  std::uint64_t seed = 1;
  std::string dist = "rademacher";
  std::string out;
  std::string format;
  bool raw = false;
  bool no_cv = false;
  double tol = 1e-6;
  int trials = 100;
  std::int64_t draws = 200'000;
  std::int64_t dynamics_steps = 100'000;
  bool skip_moments = false;
  bool skip_dynamics = false;
  std::optional<double> band_edge;
  bool measure = false;
};

std::vector<double> parse_sweep(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw CLI::ValidationError("sweep", "expected a:b:n, got '" + spec + "'");
  const double a = std::stod(parts[0]);
  const double b = std::stod(parts[1]);
  const int n = std::stoi(parts[2]);
  if (n < 1) throw CLI::ValidationError("sweep", "count must be >= 1");
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

sl::StripModel model_of(const Config& c) {
  sl::StripModel m;
  m.width = c.width;
  m.energy = c.energy;
  m.coupling = c.lambda;
  m.disorder = sl::parse_disorder(c.dist);
  m.seed = c.seed;
  m.validate();
  return m;
}

sl::json config_json(const Config& c) {
  sl::json j = {{"command", c.command},       {"width", c.width},
                {"energy", c.energy},         {"lambda", c.lambda},
                {"steps", c.steps},           {"burn_in", c.burn_in},
                {"trajectories", c.trajectories}, {"seed", c.seed},
                {"dist", c.dist},             {"control_variate", !c.no_cv},
                {"raw", c.raw}};
  if (!c.sweep_energy.empty()) j["sweep_energy"] = c.sweep_energy;
  if (!c.sweep_lambda.empty()) j["sweep_lambda"] = c.sweep_lambda;
  return j;
}

sl::EstimateOptions estimate_options(const Config& c) {
  sl::EstimateOptions o;
  o.steps = c.steps;
  o.burn_in = c.burn_in;
  o.trajectories = c.trajectories;
  o.raw = c.raw;
  o.control_variate = !c.no_cv;
  return o;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw sl::InvalidArgument("cannot open output file '" + path + "'");
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double x) { return sl::format_double(x); }

int cmd_analyze(const Config& c) {
  const sl::ChannelData cd = sl::channel_spectrum(c.width, c.energy);
  const sl::HypothesisReport hyp = sl::check_main_hypothesis(cd, c.tol);
  const sl::Interval spec = sl::free_spectrum_interval(c.width);
  Output out(c.out);
  if (c.format == "json") {
    out.os() << sl::document(config_json(c), {{"channels", sl::to_json(cd)},
                                              {"hypothesis", sl::to_json(hyp)},
                                              {"free_spectrum", {spec.lo, spec.hi}}})
                    .dump(2)
             << '\n';
  } else if (c.format == "csv") {
    sl::CsvTable t;
    t.header = {"channel", "mu", "kind", "eta", "h2", "nu", "modes"};
    for (const auto& ch : cd.channels) {
      std::string modes;
      for (int q : ch.modes) modes += (modes.empty() ? "" : " ") + std::to_string(q);
      t.rows.push_back({std::to_string(ch.index), fmt(ch.mu), std::string(sl::to_string(ch.kind)), fmt(ch.eta),
                        fmt(ch.h2()), std::to_string(ch.nu), modes});
    }
    sl::write_csv(out.os(), t);
  } else {
    auto& os = out.os();
    os << "L = " << c.width << ", E = " << c.energy << ", free spectrum [" << spec.lo << ", " << spec.hi << "]\n";
    os << std::setw(8) << "channel" << std::setw(14) << "mu" << std::setw(12) << "kind" << std::setw(14) << "eta"
       << std::setw(14) << "h^2" << std::setw(5) << "nu" << "  modes\n";
    for (const auto& ch : cd.channels) {
      os << std::setw(8) << ch.index << std::setw(14) << ch.mu << std::setw(12) << sl::to_string(ch.kind)
         << std::setw(14) << ch.eta << std::setw(14) << ch.h2() << std::setw(5) << ch.nu << " ";
      for (int q : ch.modes) os << ' ' << q;
      os << '\n';
    }
    os << "hyperbolic channels: " << cd.hyperbolic.size() << ", elliptic channels: "
       << cd.count() - static_cast<int>(cd.hyperbolic.size()) << "\n";
    os << "h_av^2 = " << cd.h_av_sq << "\n";
    os << "non-resonance hypothesis: " << (hyp.satisfied ? "satisfied" : "VIOLATED") << " (tol " << hyp.tolerance
       << ", smallest |exp(i theta) - 1| = " << hyp.min_residual << ")\n";
    for (const auto& v : hyp.violations) os << "  violation: " << v.describe() << "  residual " << v.residual << '\n';
    for (const auto& w : hyp.warnings) os << "  near resonance: " << w.describe() << "  residual " << w.residual << '\n';
  }
  return kExitOk;
}

int cmd_estimate(const Config& c) {
  const sl::StripModel m = model_of(c);
  const sl::SpectrumRun run = sl::estimate_spectrum(m, estimate_options(c));
  const auto& e = run.estimate;
  Output out(c.out);
  if (c.format == "json") {
    sl::json res = {{"estimate", sl::to_json(e)}, {"channels", sl::to_json(run.channels)},
                    {"max_sum_rule_defect", run.max_sum_rule_defect}, {"max_frame_residual", run.max_frame_residual}};
    if (!c.raw) {
      res["gamma_bottom_formula"] = sl::gamma_bottom_formula(run.channels, run.weights, m.coupling);
      res["gamma_top_formula"] = sl::gamma_top_formula(run.channels, run.weights, m.coupling);
      res["weights_first"] = sl::to_json(run.weights.first());
    }
    out.os() << sl::document(config_json(c), res).dump(2) << '\n';
    return kExitOk;
  }
  sl::CsvTable t;
  t.header = {"slot", "gamma", "stderr", "partial_sum", "partial_sum_stderr", "gamma_without_control_variate"};
  for (Eigen::Index p = 0; p < e.gammas.size(); ++p)
    t.rows.push_back({std::to_string(p + 1), fmt(e.gammas[p]), fmt(e.stderrs[p]), fmt(e.partial_sums[p]),
                      fmt(e.partial_stderrs[p]), fmt(e.raw_gammas[p])});
  if (c.format == "csv") {
    sl::write_csv(out.os(), t);
  } else {
    auto& os = out.os();
    os << "L = " << m.width << ", E = " << m.energy << ", lambda = " << m.coupling << ", " << e.trajectories
       << " trajectories x " << e.steps << " steps (burn-in " << e.burn_in << "), seed " << e.seed << "\n";
    os << std::setw(6) << "slot" << std::setw(16) << "gamma" << std::setw(14) << "stderr" << '\n';
    for (Eigen::Index p = 0; p < e.gammas.size(); ++p)
      os << std::setw(6) << p + 1 << std::setw(16) << e.gammas[p] << std::setw(14) << e.stderrs[p] << '\n';
    os << "sum = " << e.sum() << " +- " << e.sum_stderr() << '\n';
    if (!c.raw && run.weights.samples() > 0) {
      os << "bottom formula = " << sl::gamma_bottom_formula(run.channels, run.weights, m.coupling) << '\n';
      os << "top formula = " << sl::gamma_top_formula(run.channels, run.weights, m.coupling) << '\n';
    }
  }
  return kExitOk;
}

int cmd_compare(const Config& c) {
  const std::vector<double> energies = c.sweep_energy.empty() ? std::vector<double>{c.energy} : parse_sweep(c.sweep_energy);
  const std::vector<double> lambdas = c.sweep_lambda.empty() ? std::vector<double>{c.lambda} : parse_sweep(c.sweep_lambda);
  sl::CsvTable t;
  t.header = {"energy", "lambda", "gamma_bottom", "gamma_bottom_stderr", "gamma_bottom_formula", "gamma_top",
              "gamma_top_stderr", "gamma_top_formula", "gamma_sum", "gamma_sum_stderr", "gamma_sum_formula",
              "bound_bulk", "bound_edge", "note"};
  sl::json rows = sl::json::array();
  const double nan = std::nan("");
  for (double E : energies)
    for (double lambda : lambdas) {
      Config ci = c;
      ci.energy = E;
      ci.lambda = lambda;
      std::vector<double> vals(13, nan);
      vals[0] = E;
      vals[1] = lambda;
      std::vector<std::string> notes;
      try {
        const sl::StripModel m = model_of(ci);
        sl::EstimateOptions o = estimate_options(ci);
        o.raw = false;
        const sl::SpectrumRun run = sl::estimate_spectrum(m, o);
        const auto& e = run.estimate;
        vals[2] = e.bottom();
        vals[3] = e.bottom_stderr();
        vals[4] = sl::gamma_bottom_formula(run.channels, run.weights, lambda);
        vals[5] = e.gammas[0];
        vals[6] = e.stderrs[0];
        vals[7] = sl::gamma_top_formula(run.channels, run.weights, lambda);
        vals[8] = e.sum();
        vals[9] = e.sum_stderr();
        try {
          vals[10] = sl::gamma_sum_formula(run.channels, lambda);
        } catch (const sl::HyperbolicPresent&) {
          notes.push_back("hyperbolic channels present");
        }
        try {
          const sl::BottomBounds b = sl::gamma_bottom_bounds(run.channels, lambda, c.band_edge);
          vals[11] = b.lower_bulk;
          vals[12] = *b.lower_edge;
        } catch (const sl::OutsideSpectrum& ex) {
          notes.push_back(ex.what());
        }
      } catch (const sl::Error& ex) {
        notes.push_back(ex.what());
      }
      std::string note;
      for (const auto& n : notes) note += (note.empty() ? "" : "; ") + n;
      std::vector<std::string> row;
      for (double x : vals) row.push_back(fmt(x));
      row.push_back(note);
      t.rows.push_back(row);
      sl::json jr;
      for (std::size_t i = 0; i + 1 < t.header.size(); ++i) jr[t.header[i]] = vals[i];
      jr["note"] = note;
      rows.push_back(jr);
    }
  Output out(c.out);
  if (c.format == "json")
    out.os() << sl::document(config_json(c), {{"rows", rows}}).dump(2) << '\n';
  else
    sl::write_csv(out.os(), t);
  return kExitOk;
}

int cmd_verify(const Config& c) {
  const sl::DisorderKind dist = sl::parse_disorder(c.dist);
  sl::VerifyReport rep = sl::verify_algebra(c.width, c.energy, c.lambda, c.trials, c.seed, dist);
  if (!rep.rejected) {
    if (!c.skip_moments) rep.append(sl::verify_moments(c.width, c.energy, c.draws, c.seed, dist));
    if (!c.skip_dynamics) {
      sl::StripModel m = model_of(c);
      sl::DynamicsOptions d;
      d.steps = c.dynamics_steps;
      rep.append(sl::verify_dynamics(m, d));
    }
  }
  Output out(c.out);
  if (c.format == "json")
    out.os() << sl::document(config_json(c), sl::to_json(rep)).dump(2) << '\n';
  else
    sl::print_report(out.os(), rep);
  if (rep.rejected) return kExitRejected;
  return rep.pass() ? kExitOk : kExitVerify;
}

int cmd_meanfield(const Config& c) {
  const sl::ChannelData cd = sl::channel_spectrum(c.width, c.energy);
  const sl::MeanFieldWeights mf = sl::meanfield_weights(cd);
  sl::json res = sl::to_json(mf);
  std::optional<sl::MeanFieldResidual> measured;
  std::optional<sl::SpectrumRun> run;
  if (c.measure) {
    sl::EstimateOptions o = estimate_options(c);
    o.raw = false;
    o.weights.third = true;
    run = sl::estimate_spectrum(model_of(c), o);
    measured = sl::meanfield_residual(cd, run->weights);
    res["measured_first"] = sl::to_json(sl::Vec(run->weights.first().row(0).transpose()));
    res["residual"] = sl::to_json(measured->residual);
    res["residual_scale"] = sl::to_json(measured->scale);
  }
  Output out(c.out);
  if (c.format == "json") {
    out.os() << sl::document(config_json(c), res).dump(2) << '\n';
  } else if (c.format == "csv") {
    sl::CsvTable t;
    t.header = {"channel", "sin_eta", "rho1_meanfield"};
    if (measured) {
      t.header.push_back("rho1_measured");
      t.header.push_back("residual");
      t.header.push_back("residual_scale");
    }
    for (int k = 0; k < cd.count(); ++k) {
      std::vector<std::string> r = {std::to_string(k), fmt(std::sin(cd[k].eta)), fmt(mf.rho1[k])};
      if (measured) {
        r.push_back(fmt(run->weights.first()(0, k)));
        r.push_back(fmt(measured->residual[k]));
        r.push_back(fmt(measured->scale[k]));
      }
      t.rows.push_back(r);
    }
    sl::write_csv(out.os(), t);
  } else {
    auto& os = out.os();
    os << "Z = " << mf.Z << "  (Z/L = " << mf.Z / c.width << "), normalization residual "
       << mf.normalization_residual << '\n';
    os << std::setw(8) << "channel" << std::setw(14) << "sin(eta)" << std::setw(14) << "<rho_1>";
    if (measured) os << std::setw(14) << "measured" << std::setw(14) << "residual";
    os << '\n';
    for (int k = 0; k < cd.count(); ++k) {
      os << std::setw(8) << k << std::setw(14) << std::sin(cd[k].eta) << std::setw(14) << mf.rho1[k];
      if (measured)
        os << std::setw(14) << run->weights.first()(0, k) << std::setw(14) << measured->residual[k];
      os << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov spectra of the Anderson model on a strip"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* s) {
    s->add_option("-L,--width", c.width, "strip width")->check(CLI::PositiveNumber);
    s->add_option("-E,--energy", c.energy, "energy");
    s->add_option("--out", c.out, "output file (default stdout)");
    s->add_option("--format", c.format, "output format")->check(CLI::IsMember({"text", "csv", "json"}));
  };
  auto run_opts = [&](CLI::App* s) {
    s->add_option("--lambda", c.lambda, "coupling");
    s->add_option("--steps", c.steps, "steps per trajectory, burn-in included")->check(CLI::PositiveNumber);
    s->add_option("--burn-in", c.burn_in, "discarded initial steps (default max(1000, 10/lambda^2))");
    s->add_option("--trajectories", c.trajectories, "independent trajectories")->check(CLI::PositiveNumber);
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--dist", c.dist, "disorder law")->check(CLI::IsMember({"rademacher", "uniform", "gaussian"}));
    s->add_flag("--no-control-variate", c.no_cv, "plain log expansions");
  };

  auto* analyze = app.add_subcommand("analyze", "channel data and non-resonance check");
  common(analyze);
  analyze->add_option("--tol", c.tol, "resonance tolerance on |exp(i theta) - 1|");

  auto* estimate = app.add_subcommand("estimate", "Monte-Carlo Lyapunov spectrum");
  common(estimate);
  run_opts(estimate);
  estimate->add_flag("--raw", c.raw, "evolve with the transfer matrices themselves");

  auto* compare = app.add_subcommand("compare", "direct estimates against perturbative formulas");
  common(compare);
  run_opts(compare);
  compare->add_option("--sweep-energy", c.sweep_energy, "energy sweep a:b:n");
  compare->add_option("--sweep-lambda", c.sweep_lambda, "coupling sweep a:b:n");
  compare->add_option("--band-edge", c.band_edge, "band edge for the edge bound (default nearest end of spectrum)");

  auto* verify = app.add_subcommand("verify", "numerical check of the exact identities and moments");
  common(verify);
  verify->add_option("--lambda", c.lambda, "coupling");
  verify->add_option("--seed", c.seed, "random seed");
  verify->add_option("--dist", c.dist, "disorder law")->check(CLI::IsMember({"rademacher", "uniform", "gaussian"}));
  verify->add_option("--trials", c.trials, "random columns and frames for the identities")->check(CLI::PositiveNumber);
  verify->add_option("--draws", c.draws, "disorder draws for the moments")->check(CLI::PositiveNumber);
  verify->add_option("--steps", c.dynamics_steps, "steps per trajectory for the dynamics checks")
      ->check(CLI::PositiveNumber);
  verify->add_flag("--skip-moments", c.skip_moments, "skip the Monte-Carlo moment checks");
  verify->add_flag("--skip-dynamics", c.skip_dynamics, "skip the trajectory checks");

  auto* meanfield = app.add_subcommand("meanfield", "mean-field channel weights of the first frame vector");
  common(meanfield);
  run_opts(meanfield);
  meanfield->add_flag("--measure", c.measure, "also measure the weights and the stationarity residual");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze) return c.command = "analyze", cmd_analyze(c);
    if (*estimate) return c.command = "estimate", cmd_estimate(c);
    if (*compare) {
      if ((!c.sweep_energy.empty() && compare->count("--energy")) ||
          (!c.sweep_lambda.empty() && compare->count("--lambda"))) {
        std::cerr << "error: give either a value or a sweep for each parameter\n";
        return kExitUsage;
      }
      if (c.format.empty()) c.format = "csv";
      c.command = "compare";
      return cmd_compare(c);
    }
    if (*verify) return c.command = "verify", cmd_verify(c);
    if (*meanfield) return c.command = "meanfield", cmd_meanfield(c);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sl::ParabolicChannel& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const sl::OutsideSpectrum& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const sl::HyperbolicPresent& e) {
    std::cerr << "rejected: " << e.what() << '\n';
    return kExitRejected;
  } catch (const sl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerify;
  }
  return kExitUsage;
}
