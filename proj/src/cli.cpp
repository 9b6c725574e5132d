#include "rsim/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rsim/dataset_io.hpp"
#include "rsim/gauss.hpp"
#include "rsim/pipeline.hpp"
#include "rsim/probes.hpp"
#include "rsim/rng.hpp"
#include "rsim/spectral.hpp"
#include "rsim/synth.hpp"

namespace rsim {

namespace {

using nlohmann::json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SIM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(std::string("SIM_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

json noise_to_json(const NoiseModel& noise) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NoNoise>) {
          return {{"kind", "none"}};
        } else if constexpr (std::is_same_v<T, ObliviousBounded>) {
          return {{"kind", "oblivious"}, {"rate", m.rate}, {"magnitude", m.magnitude}};
        } else if constexpr (std::is_same_v<T, AdversarialBand>) {
          return {{"kind", "band"}, {"rate", m.rate}, {"lo", m.lo}, {"hi", m.hi}};
        } else {
          return {{"kind", "signflip"}, {"rate", m.rate}};
        }
      },
      noise);
}

struct GenerateArgs {
  int d = 10;
  std::size_t n = 10000;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "auto";
  std::string activation = "relu";
  double bias = 0.0;
  double slope = 1.0;
  std::optional<double> clamp;
  double B = 1.0;
  std::string noise = "none";
  double rate = 0.0;
  std::optional<double> magnitude;
  double band_lo = -0.5, band_hi = 0.5;
};

Activation make_activation(const GenerateArgs& a) {
  Activation act;
  if (a.activation == "relu") {
    act = Activation::relu(a.bias, a.slope);
  } else if (a.activation == "identity" || a.activation == "linear") {
    act = Activation(Linear{a.slope});
  } else if (a.activation == "threshold") {
    act = Activation::threshold(a.bias);
  } else if (a.activation == "tanh") {
    act = Activation(BoundedSmooth{SmoothShape::Tanh, a.slope, 1.0, -a.bias});
  } else if (a.activation == "logistic") {
    act = Activation(BoundedSmooth{SmoothShape::Logistic, a.slope, 1.0, -a.bias});
  } else if (a.activation == "erf") {
    act = Activation(BoundedSmooth{SmoothShape::Erf, a.slope, 1.0, -a.bias});
  } else {
    throw Error("unknown activation: " + a.activation);
  }
  return a.clamp ? act.clamped(*a.clamp) : act;
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  const std::uint64_t seed = resolve_seed(a.seed);
  GroundTruth truth;
  Rng rng = make_rng(seed, {tag("w_star")});
  truth.w_star = random_unit_vector(a.d, rng);
  truth.sigma = make_activation(a);
  truth.B = a.B;
  const double mag = a.magnitude.value_or(a.B);
  if (a.noise == "none") {
    truth.noise = NoNoise{};
  } else if (a.noise == "oblivious") {
    truth.noise = ObliviousBounded{a.rate, mag};
  } else if (a.noise == "band") {
    truth.noise = AdversarialBand{a.rate, a.band_lo, a.band_hi, std::nullopt};
  } else if (a.noise == "signflip") {
    truth.noise = SignFlipTail{a.rate};
  } else {
    throw Error("unknown noise model: " + a.noise);
  }
  GeneratedData g = generate_with_info(truth, a.n, a.d, derive_seed(seed, {tag("data")}));
  DatasetFormat fmt = a.format == "auto" ? format_from_path(a.out)
                      : a.format == "binary" ? DatasetFormat::Binary
                                             : DatasetFormat::Text;
  write_dataset(a.out, g.data, fmt);
  json sidecar = {{"dim", a.d},
                  {"n", a.n},
                  {"seed", seed},
                  {"w_star", to_std(truth.w_star)},
                  {"sigma", truth.sigma},
                  {"noise", noise_to_json(truth.noise)},
                  {"B", truth.B},
                  {"corrupted", g.corrupted},
                  {"opt_estimate", estimate_opt(truth, g.data)}};
  write_text(a.out + ".truth.json", sidecar.dump(2) + "\n");
  out << json{{"data", a.out}, {"truth", a.out + ".truth.json"}, {"n", a.n}, {"dim", a.d},
              {"opt_estimate", sidecar["opt_estimate"]}}
             .dump()
      << "\n";
  return 0;
}

struct LearnArgs {
  std::string data;
  double eps = 0.1, B = 1.0, L = 1.0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string truth, report, trace;
  long long budget = 512;
  int K = 0, T = 0;
  double decay = 1.0 / 128.0, step_fraction = 1.0 / 8.0;
  bool fresh_split = true;
  bool paper_faithful = false;
  int repeats = 1;
  std::size_t theta_cap = 64;
  std::optional<double> beta;
};

int cmd_learn(const LearnArgs& a, std::ostream& out) {
  Dataset data = read_dataset(a.data);
  PipelineConfig cfg;
  cfg.params = {a.B, a.L, a.eps};
  cfg.seed = resolve_seed(a.seed);
  cfg.schedule.decay = a.decay;
  cfg.schedule.step_fraction = a.step_fraction;
  cfg.schedule.K = a.K;
  cfg.schedule.T = a.T;
  cfg.fresh_split = a.fresh_split;
  cfg.paper_faithful = a.paper_faithful;
  cfg.repeats = a.repeats;
  cfg.theta_cap = a.theta_cap;
  cfg.beta = a.beta;
  cfg.trace = !a.trace.empty();
  cfg.pass_budget = a.budget > 0 ? std::optional<std::size_t>(static_cast<std::size_t>(a.budget)) : std::nullopt;
  if (!a.truth.empty()) cfg.truth = to_vec(read_json(a.truth).at("w_star").get<std::vector<double>>());

  PipelineResult res = run_pipeline(data, cfg);
  write_text(a.out, json(res.hypothesis).dump(2) + "\n");
  if (!a.report.empty()) {
    std::ostringstream s;
    for (const auto& line : res.report.lines()) s << line.dump() << "\n";
    write_text(a.report, s.str());
  }
  if (!a.trace.empty()) {
    std::ostringstream s;
    for (const auto& t : res.report.trace) {
      s << json{{"pair", t.pair},          {"theta_bar", t.theta_bar},   {"restart", t.record.restart},
                {"t", t.record.t},         {"w", to_std(t.record.w)},    {"sign", t.record.sign},
                {"eta", t.record.eta},     {"phi", t.record.phi},        {"eigval", t.record.eigval},
                {"gap", t.record.gap}}
               .dump()
        << "\n";
    }
    write_text(a.trace, s.str());
  }
  out << res.report.summary().dump() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& data_path, const std::string& hyp_path, std::ostream& out) {
  Dataset data = read_dataset(data_path);
  Hypothesis h = read_json(hyp_path).get<Hypothesis>();
  out << json{{"loss", squared_loss(data, h)}, {"n", data.size()}, {"dim", data.dim()}}.dump() << "\n";
  return 0;
}

int cmd_bench(const std::vector<int>& dims, const std::vector<std::size_t>& sizes, const std::vector<double>& epss,
              double B, double L, int reps, std::uint64_t seed, std::ostream& out) {
  for (int d : dims) {
    for (std::size_t n : sizes) {
      GroundTruth truth;
      Rng rng = make_rng(seed, {tag("bench"), static_cast<std::uint64_t>(d)});
      truth.w_star = random_unit_vector(d, rng);
      truth.sigma = Activation::relu();
      truth.B = B;
      Dataset data = generate(truth, n, d, derive_seed(seed, {tag("bench-data"), static_cast<std::uint64_t>(d), n}));
      for (double eps : epss) {
        RegularityParams p{B, L, eps};
        BandPartition part = build_band_partition(p);
        Vec w = rotate_towards_random(truth.w_star, 0.5, seed);
        BandWorkspace ws;
        auto t0 = std::chrono::steady_clock::now();
        double sink = 0.0;
        for (int r = 0; r < reps; ++r) {
          BandStatistics st = compute_band_statistics(data, w, part, &ws);
          SpectralMatrix sm = build_spectral_matrix(st, part, w, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
          sink += sm.top.val;
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
        out << json{{"d", d}, {"n", n}, {"eps", eps}, {"bands", part.bands}, {"seconds_per_pass", secs},
                    {"top_eigval", sink / reps}}
                   .dump()
            << "\n";
      }
    }
  }
  return 0;
}

int cmd_probe(const std::string& suite, std::size_t mc, std::uint64_t seed, std::ostream& out) {
  std::vector<ProbeCheck> checks;
  auto add = [&checks](std::vector<ProbeCheck> v) { checks.insert(checks.end(), v.begin(), v.end()); };
  if (suite == "semigroup" || suite == "all") add(semigroup_suite());
  if (suite == "isotonic" || suite == "all") add(isotonic_suite(seed));
  if (suite == "spectral" || suite == "all") add(spectral_suite(mc, seed));
  if (checks.empty()) throw Error("unknown suite: " + suite);
  bool ok = true;
  for (const auto& c : checks) {
    out << c.to_json().dump() << "\n";
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust single-index model learner under Gaussian inputs", "rsim"};
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its ground-truth sidecar");
  gen->add_option("--d", ga.d, "Dimension")->check(CLI::PositiveNumber);
  gen->add_option("--n", ga.n, "Sample count")->check(CLI::PositiveNumber);
  gen->add_option("--seed", ga.seed, "Master seed (falls back to SIM_SEED)");
  gen->add_option("--out", ga.out, "Dataset path (.bin for binary)")->required();
  gen->add_option("--format", ga.format, "auto, text or binary")->check(CLI::IsMember({"auto", "text", "binary"}));
  gen->add_option("--activation", ga.activation, "relu, identity, threshold, tanh, logistic, erf");
  gen->add_option("--bias", ga.bias, "Activation bias");
  gen->add_option("--slope", ga.slope, "Activation slope or amplitude");
  gen->add_option("--clamp", ga.clamp, "Clamp the activation to [-c, c]");
  gen->add_option("--B", ga.B, "Label bound")->check(CLI::PositiveNumber);
  gen->add_option("--noise", ga.noise, "none, oblivious, band, signflip")
      ->check(CLI::IsMember({"none", "oblivious", "band", "signflip"}));
  gen->add_option("--rate", ga.rate, "Corruption rate")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--magnitude", ga.magnitude, "Oblivious noise magnitude (default B)");
  gen->add_option("--band-lo", ga.band_lo, "Adversarial band lower edge");
  gen->add_option("--band-hi", ga.band_hi, "Adversarial band upper edge");

  LearnArgs la;
  auto* learn = app.add_subcommand("learn", "Fit a hypothesis to a dataset");
  learn->set_config("--config", "", "Key-value config file");
  learn->add_option("--data", la.data, "Dataset path")->required();
  learn->add_option("--eps", la.eps, "Target accuracy")->check(CLI::PositiveNumber);
  learn->add_option("--B", la.B, "Label bound")->check(CLI::PositiveNumber);
  learn->add_option("--L", la.L, "Derivative L2 bound")->check(CLI::PositiveNumber);
  learn->add_option("--seed", la.seed, "Master seed (falls back to SIM_SEED)");
  learn->add_option("--out", la.out, "Hypothesis JSON path")->required();
  learn->add_option("--truth", la.truth, "Ground-truth sidecar, for angle reporting");
  learn->add_option("--report", la.report, "Report path (JSON lines)");
  learn->add_option("--trace", la.trace, "Spectral trace path (JSON lines)");
  learn->add_option("--budget", la.budget, "Total spectral data passes (0: unlimited)");
  learn->add_option("--K", la.K, "Restarts per spectral run (0: default)");
  learn->add_option("--T", la.T, "Steps per restart (0: default)");
  learn->add_option("--decay", la.decay, "Angle schedule decay per step");
  learn->add_option("--step-fraction", la.step_fraction, "Step size as a fraction of sin(phi)");
  learn->add_flag("--fresh-split,!--no-fresh-split", la.fresh_split, "Disjoint samples for init and spectral stages");
  learn->add_flag("--paper-faithful", la.paper_faithful, "One sample for all stages, full grid, no budget");
  learn->add_option("--repeats", la.repeats, "Independent reruns; best holdout loss wins")->check(CLI::PositiveNumber);
  learn->add_option("--theta-cap", la.theta_cap, "Maximum angle-grid size")->check(CLI::PositiveNumber);
  learn->add_option("--beta", la.beta, "Lipschitz bound of the fitted link (default B L / sqrt(eps))");

  std::string eval_data, eval_hyp;
  auto* eval = app.add_subcommand("evaluate", "Squared loss of a stored hypothesis");
  eval->add_option("--data", eval_data, "Dataset path")->required();
  eval->add_option("--hyp", eval_hyp, "Hypothesis JSON path")->required();

  std::vector<int> bdims{5, 10, 20};
  std::vector<std::size_t> bsizes{10000, 100000};
  std::vector<double> beps{0.2, 0.1, 0.05};
  double bB = 1.0, bL = 1.0;
  int breps = 3;
  std::optional<std::uint64_t> bseed;
  auto* bench = app.add_subcommand("bench", "Time one spectral pass over a grid of d, N and band counts");
  bench->add_option("--d", bdims, "Dimensions")->delimiter(',');
  bench->add_option("--n", bsizes, "Sample counts")->delimiter(',');
  bench->add_option("--eps", beps, "Accuracies (set the band count)")->delimiter(',');
  bench->add_option("--B", bB, "Label bound");
  bench->add_option("--L", bL, "Derivative bound");
  bench->add_option("--reps", breps, "Passes per configuration")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bseed, "Master seed");

  std::string suite = "all";
  std::size_t mc = 1'000'000;
  std::optional<std::uint64_t> pseed;
  auto* probe = app.add_subcommand("probe-invariants", "Run invariant suites; exit 0 when all pass");
  probe->add_option("--suite", suite, "semigroup, isotonic, spectral or all")
      ->check(CLI::IsMember({"semigroup", "isotonic", "spectral", "all"}));
  probe->add_option("--mc", mc, "Monte-Carlo budget for the spectral suite")->check(CLI::PositiveNumber);
  probe->add_option("--seed", pseed, "Master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_generate(ga, out);
    if (*learn) return cmd_learn(la, out);
    if (*eval) return cmd_evaluate(eval_data, eval_hyp, out);
    if (*bench) return cmd_bench(bdims, bsizes, beps, bB, bL, breps, resolve_seed(bseed), out);
    if (*probe) return cmd_probe(suite, mc, resolve_seed(pseed), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace rsim
