// scatlite: command-line front end for the first-order scattering library.
//
//   scatlite scatter      --input img.png --out coeffs.sct [--J 3 --angles 8 --family morlet]
//   scatlite reconstruct  --coeffs coeffs.sct --out rec.png [--reference img.png]
//   scatlite framecheck   [--J 3 --angles 8 --sigma0 ... --xi0 ... --slant ...]
//   scatlite blob         --sigma "s11 s12 s22" [--J 2 --grid 64 --out-dir dir]
//   scatlite stability    [--trials 1000 --amax 4]
//   scatlite dump-filters --out-dir dir
//
// Exit codes: 0 success, 2 usage error, 3 computation error.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scatlite/error.hpp"
#include "scatlite/filterbank.hpp"
#include "scatlite/io.hpp"
#include "scatlite/oracles.hpp"
#include "scatlite/parallel.hpp"
#include "scatlite/reconstruct.hpp"
#include "scatlite/transform.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace scatlite;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 3;

// Bank flags shared by several subcommands.
struct BankFlags {
  std::size_t grid = 224;
  std::size_t scale_j = 3;
  std::size_t angles = 8;
  double sigma0 = kDefaultSigma0;
  double slant = kDefaultSlant;
  double xi0 = kDefaultXi0;
  std::string family = "morlet";

  void add_to(CLI::App* app, bool with_grid = true) {
    if (with_grid) app->add_option("--grid", grid, "Signal side N in pixels")->capture_default_str();
    app->add_option("--J", scale_j, "Number of scales J (invariance window 2^J)")->capture_default_str();
    app->add_option("--angles", angles, "Number of angles")->capture_default_str();
    app->add_option("--sigma0", sigma0, "Gaussian bandwidth")->capture_default_str();
    app->add_option("--slant", slant, "Anisotropy of the mother wavelet")->capture_default_str();
    app->add_option("--xi0", xi0, "Central frequency magnitude (< pi)")->capture_default_str();
    app->add_option("--family", family, "Wavelet family")
        ->check(CLI::IsMember({"gabor", "morlet"}))
        ->capture_default_str();
  }

  FilterBankConfig config() const {
    FilterBankConfig c;
    c.grid_size = grid;
    c.scale_j = scale_j;
    c.num_angles = angles;
    c.sigma0 = sigma0;
    c.slant = slant;
    c.xi0 = xi0;
    c.family = parse_family(family);
    c.validate();
    return c;
  }
};

json config_json(const FilterBankConfig& c) {
  return {{"grid_size", c.grid_size}, {"scale_j", c.scale_j}, {"num_angles", c.num_angles},
          {"sigma0", c.sigma0},       {"slant", c.slant},     {"xi0", c.xi0},
          {"family", to_string(c.family)}};
}

FilterBankConfig config_from_json(const json& j) {
  FilterBankConfig c;
  c.grid_size = j.at("grid_size").get<std::size_t>();
  c.scale_j = j.at("scale_j").get<std::size_t>();
  c.num_angles = j.at("num_angles").get<std::size_t>();
  c.sigma0 = j.at("sigma0").get<double>();
  c.slant = j.at("slant").get<double>();
  c.xi0 = j.at("xi0").get<double>();
  c.family = parse_family(j.at("family").get<std::string>());
  c.validate();
  return c;
}

fs::path sidecar_path(const fs::path& coeffs) { return fs::path(coeffs.string() + ".json"); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------
// scatter
// ---------------------------------------------------------------------------

struct ScatterFlags {
  std::vector<std::string> inputs;
  std::string out;
  std::string out_dir;
  std::string boundary = "periodic";
  BankFlags bank;
};

json scatter_one(const fs::path& input, const fs::path& out, const FilterBank& bank, const FilterBankConfig& image_cfg,
                 Boundary boundary, std::size_t threads) {
  const auto x = load_image(input, image_cfg.grid_size);
  const auto s = scatter(x, bank, boundary, threads);

  const std::size_t n = image_cfg.grid_size;
  const std::size_t count = s.size();
  const std::size_t input_count = x.channels() * n * n;
  const double ratio = static_cast<double>(count) / static_cast<double>(input_count);
  json side = {
      {"input", input.string()},
      {"config", config_json(image_cfg)},
      {"boundary", boundary == Boundary::Periodic ? "periodic" : "reflect"},
      {"config_hash", s.config_hash()},
      {"input_shape", {x.channels(), n, n}},
      {"shape", {s.channels(), s.side(), s.side()}},
      {"coefficients_per_channel", coefficient_count(image_cfg)},
      {"coefficient_count", count},
      {"input_count", input_count},
      {"ratio", ratio},
      {"expansion", ratio > 1.0},
      {"dtype", "float32"},
  };
  // Coefficients first, sidecar last: a reader never sees a sidecar without data.
  save_coeffs(s, out);
  write_text_atomic(sidecar_path(out), side.dump(2) + "\n");
  return side;
}

int run_scatter(const ScatterFlags& f) {
  const auto image_cfg = f.bank.config();
  const Boundary boundary = f.boundary == "reflect" ? Boundary::Reflect : Boundary::Periodic;
  auto bank_cfg = image_cfg;
  if (boundary == Boundary::Reflect) bank_cfg.grid_size = padded_grid_size(image_cfg.grid_size, image_cfg.scale_j);
  const auto bank = build_filter_bank(bank_cfg);
  const std::size_t threads = default_thread_count();

  if (f.inputs.size() == 1 && !f.out.empty()) {
    const auto side = scatter_one(f.inputs.front(), f.out, bank, image_cfg, boundary, threads);
    std::cout << side.dump(2) << "\n";
    return 0;
  }
  if (f.out_dir.empty()) throw CLI::ValidationError("--out-dir is required with several inputs");

  // Batch: one worker per file, each file isolated from the others' failures.
  fs::create_directories(f.out_dir);
  std::mutex log_mutex;
  std::atomic<std::size_t> failures{0};
  parallel_for(f.inputs.size(), threads, [&](std::size_t i) {
    const fs::path input = f.inputs[i];
    const fs::path out = fs::path(f.out_dir) / (input.stem().string() + ".sct");
    try {
      const auto side = scatter_one(input, out, bank, image_cfg, boundary, 1);
      std::lock_guard lock(log_mutex);
      std::cout << input.string() << " -> " << out.string() << " " << side["shape"].dump() << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::lock_guard lock(log_mutex);
      std::cerr << "error: " << input.string() << ": " << e.what() << "\n";
    }
  });
  return failures == 0 ? 0 : kExitFailure;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructFlags {
  std::string coeffs;
  std::string out;
  std::string reference;
  std::string report;
  std::string init = "uniform";
  std::string init_image;
  std::size_t iters = 1000;
  double lr = 10.0;
  std::size_t drop_every = 200;
  double drop_factor = 0.1;
  double target_err = 2e-3;
  std::uint64_t seed = 0;
};

int run_reconstruct(const ReconstructFlags& f) {
  const fs::path coeffs_path = f.coeffs;
  const auto side_path = sidecar_path(coeffs_path);
  if (!fs::exists(side_path)) {
    throw IoError("missing sidecar '" + side_path.string() + "' (written by 'scatlite scatter')");
  }
  const json side = json::parse(read_text(side_path));
  if (side.value("boundary", "periodic") != "periodic") {
    throw ConfigError("reconstruction supports periodic-boundary coefficients only");
  }
  const auto cfg = config_from_json(side.at("config"));
  const auto bank = build_filter_bank(cfg);
  if (side.at("config_hash").get<std::string>() != bank.hash()) {
    throw ConfigError("coefficients were computed with a different filter bank (hash " +
                      side.at("config_hash").get<std::string>() + ", rebuilt " + bank.hash() + ")");
  }

  const auto tensor = load_tensor(coeffs_path);
  const std::size_t m = cfg.output_side();
  const std::size_t paths = cfg.paths();
  if (tensor.dims.size() != 3 || tensor.dims[0] % paths != 0 || tensor.dims[1] != m || tensor.dims[2] != m) {
    throw ShapeError("coefficient tensor does not match the configuration in the sidecar");
  }
  ScatteringCoeffs target(tensor.dims[0] / paths, paths, m, bank.hash());
  std::copy(tensor.values.begin(), tensor.values.end(), target.values().begin());

  std::optional<ImageTensor> reference;
  if (!f.reference.empty()) reference = load_image(f.reference, cfg.grid_size);

  ReconstructionConfig rc;
  rc.max_iters = f.iters;
  rc.initial_lr = f.lr;
  rc.lr_drop_every = f.drop_every;
  rc.lr_drop_factor = f.drop_factor;
  rc.target_err = f.target_err;
  rc.init = parse_init_mode(f.init);
  rc.seed = f.seed;
  if (rc.init == InitMode::ProvidedImage) {
    if (f.init_image.empty()) throw CLI::ValidationError("--init provided needs --init-image");
    rc.initial_image = load_image(f.init_image, cfg.grid_size);
  }

  const auto trace = reconstruct(target, bank, rc);
  const auto image = clip_unit(trace.final_image);

  double best_err = std::numeric_limits<double>::infinity();
  for (double e : trace.err_history) best_err = std::min(best_err, e);

  json report = {
      {"coeffs", coeffs_path.string()},
      {"config", config_json(cfg)},
      {"config_hash", bank.hash()},
      {"schedule",
       {{"max_iters", rc.max_iters},
        {"initial_lr", rc.initial_lr},
        {"lr_drop_every", rc.lr_drop_every},
        {"lr_drop_factor", rc.lr_drop_factor},
        {"target_err", rc.target_err},
        {"init", to_string(rc.init)}}},
      {"seed", trace.seed},
      {"iterations_run", trace.iterations_run},
      {"converged", trace.converged},
      {"diverged", trace.diverged},
      {"final_err", number_or_null(best_err)},
      {"err_history", trace.err_history},
      {"loss_history", trace.loss_history},
  };
  std::cout << "iterations " << trace.iterations_run << (trace.converged ? " (converged)" : "")
            << (trace.diverged ? " (diverged)" : "") << "\n";
  std::cout << "err_J " << best_err << "\n";
  if (reference) {
    if (!reference->same_shape(image)) throw ShapeError("reference image has a different number of channels");
    const double p = psnr(image, *reference);
    report["psnr_db"] = number_or_null(p);
    std::cout << "PSNR " << p << " dB\n";
  }

  save_png(image, f.out);
  const fs::path report_path = f.report.empty() ? fs::path(f.out + ".json") : fs::path(f.report);
  write_text_atomic(report_path, report.dump(2) + "\n");
  return trace.diverged ? kExitFailure : 0;
}

// ---------------------------------------------------------------------------
// framecheck
// ---------------------------------------------------------------------------

json report_json(const LittlewoodPaleyReport& r) {
  return {{"convention", to_string(r.convention)}, {"epsilon0", r.epsilon0}, {"min_energy", r.min_energy},
          {"max_energy", r.max_energy},            {"samples", r.samples}};
}

int run_framecheck(const BankFlags& f, bool as_json) {
  const auto cfg = f.config();
  const auto bank = build_filter_bank(cfg);
  const auto real = littlewood_paley(bank, LpConvention::RealSignal);
  const auto analytic = littlewood_paley(bank, LpConvention::Analytic);
  if (as_json) {
    json out = {{"config", config_json(cfg)},
                {"band_pass_scale", bank.band_pass_scale()},
                {"filters", bank.band_pass_count() + 1},
                {"reports", {report_json(real), report_json(analytic)}}};
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::printf("N=%zu J=%zu angles=%zu sigma0=%g slant=%g xi0=%g family=%s\n", cfg.grid_size, cfg.scale_j,
              cfg.num_angles, cfg.sigma0, cfg.slant, cfg.xi0, to_string(cfg.family).c_str());
  std::printf("filters: %zu band-pass + 1 low-pass, band-pass scale %.6f\n", bank.band_pass_count(),
              bank.band_pass_scale());
  for (const auto& r : {real, analytic}) {
    std::printf("%-12s epsilon0 %.6f  min %.6f  max %.6f  (%zu samples)\n", to_string(r.convention).c_str(),
                r.epsilon0, r.min_energy, r.max_energy, r.samples);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// blob
// ---------------------------------------------------------------------------

struct BlobFlags {
  std::string sigma;
  std::string out_dir;
  std::size_t iters = 300;
  std::uint64_t seed = 0;
  BankFlags bank;
};

Sym2 parse_sigma(const std::string& text) {
  std::istringstream in(text);
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::string extra;
  if (!(in >> a >> b >> c) || (in >> extra)) {
    throw CLI::ValidationError("--sigma expects three numbers \"s11 s12 s22\"");
  }
  return {a, b, c};
}

int run_blob(const BlobFlags& f) {
  const auto cfg = f.bank.config();
  const auto bank = build_filter_bank(cfg);
  const BlobSpec spec{parse_sigma(f.sigma), cfg.grid_size};
  const auto blob = blob_signal(spec);
  const auto numeric = scatter(blob.image, bank);
  const auto analytic = analytic_blob_scatter(spec, bank);
  const auto cosines = channel_cosine_similarity(numeric, analytic);

  double worst = 1.0;
  for (double c : cosines) worst = std::min(worst, c);
  json out = {{"sigma", {spec.sigma.a, spec.sigma.b, spec.sigma.c}},
              {"config", config_json(cfg)},
              {"aliased", blob.aliased},
              {"degenerate", blob.degenerate},
              {"cosine_similarity", cosines},
              {"min_cosine_similarity", worst}};
  if (blob.aliased) std::cerr << "warning: blob aliases across the periodic boundary (> 1% of peak)\n";

  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    // Analytic coefficients are exact up to one scalar per channel: fit it by
    // least squares before using them as a reconstruction target.
    ScatteringCoeffs fitted(analytic.input_channels(), analytic.per_input(), analytic.side(), bank.hash());
    for (std::size_t ch = 0; ch < analytic.channels(); ++ch) {
      const auto a = analytic.map(ch);
      const double aa = dot(a, a);
      const double scale = aa > 0.0 ? dot(a, numeric.map(ch)) / aa : 0.0;
      auto dst = fitted.map(ch);
      for (std::size_t i = 0; i < a.size(); ++i) dst[i] = scale * a[i];
    }
    ReconstructionConfig rc;
    rc.max_iters = f.iters;
    rc.seed = f.seed;
    const auto from_numeric = reconstruct(numeric, bank, rc);
    const auto from_analytic = reconstruct(fitted, bank, rc);
    const fs::path dir = f.out_dir;
    save_png(clip_unit(blob.image), dir / "blob.png");
    save_png(clip_unit(from_numeric.final_image), dir / "reconstruction_numeric.png");
    save_png(clip_unit(from_analytic.final_image), dir / "reconstruction_analytic.png");
    out["psnr_numeric_db"] = number_or_null(psnr(clip_unit(from_numeric.final_image), blob.image));
    out["psnr_analytic_db"] = number_or_null(psnr(clip_unit(from_analytic.final_image), blob.image));
    write_text_atomic(dir / "blob.json", out.dump(2) + "\n");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stability
// ---------------------------------------------------------------------------

struct StabilityFlags {
  std::size_t trials = 1000;
  double amax = 4.0;
  std::uint64_t seed = 0;
  BankFlags bank;
};

int run_stability(const StabilityFlags& f) {
  if (!(f.amax >= 0.0)) throw CLI::ValidationError("--amax must be nonnegative");
  const auto cfg = f.bank.config();
  const auto bank = build_filter_bank(cfg);
  std::mt19937_64 rng(f.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < f.trials; ++t) {
    ImageTensor x(1, cfg.grid_size, cfg.grid_size);
    for (auto& v : x.values()) v = normal(rng);
    const double radius = f.amax * unit(rng);
    const double direction = 2.0 * std::numbers::pi * unit(rng);
    const std::array<double, 2> a{radius * std::cos(direction), radius * std::sin(direction)};
    const auto j = static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.scale_j));
    const auto theta = static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.num_angles));
    double tail = std::exp(std::log(1e-3) + unit(rng) * (std::log(0.5) - std::log(1e-3)));
    StabilityReport r;
    for (;;) {
      try {
        r = translation_bound_check(x, a, bank, j, theta, tail);
        break;
      } catch (const NumericError&) {
        if (tail >= 1.0) throw;
        tail = std::min(1.0, 2.0 * tail);  // too fine for this filter on this grid
      }
    }
    if (!r.holds()) ++violations;
    const json row = {{"trial", t},       {"j", r.j},         {"theta", r.theta},   {"a", {a[0], a[1]}},
                      {"tail_eps", tail}, {"eta0", r.eta0},   {"epsilon", r.epsilon}, {"x_norm", r.x_norm},
                      {"lhs", r.lhs},     {"rhs", r.rhs},     {"holds", r.holds()}};
    std::cout << row.dump() << "\n";
  }
  std::cerr << f.trials << " trials, " << violations << " violations\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order scattering transform: filters, coefficients, reconstruction and checks"};
  app.require_subcommand(1);

  ScatterFlags scatter_flags;
  auto* scatter_cmd = app.add_subcommand("scatter", "Scatter PNG images into SCT1 coefficient files");
  scatter_cmd->add_option("--input", scatter_flags.inputs, "Input PNG file(s)")->required()->expected(1, -1);
  scatter_cmd->add_option("--out", scatter_flags.out, "Output SCT1 file (single input)");
  scatter_cmd->add_option("--out-dir", scatter_flags.out_dir, "Output directory (several inputs)");
  scatter_cmd->add_option("--boundary", scatter_flags.boundary, "Boundary handling")
      ->check(CLI::IsMember({"periodic", "reflect"}))
      ->capture_default_str();
  scatter_flags.bank.add_to(scatter_cmd);

  ReconstructFlags rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Recover an image from scattering coefficients");
  rec_cmd->add_option("--coeffs", rec.coeffs, "SCT1 file written by 'scatter' (with its .json sidecar)")->required();
  rec_cmd->add_option("--out", rec.out, "Output PNG")->required();
  rec_cmd->add_option("--reference", rec.reference, "Original PNG, for the PSNR");
  rec_cmd->add_option("--report", rec.report, "JSON trace path (default: <out>.json)");
  rec_cmd->add_option("--iters", rec.iters, "Maximum iterations")->capture_default_str();
  rec_cmd->add_option("--lr", rec.lr, "Initial ADAM learning rate")->capture_default_str();
  rec_cmd->add_option("--drop-every", rec.drop_every, "Iterations between learning-rate drops")->capture_default_str();
  rec_cmd->add_option("--drop-factor", rec.drop_factor, "Learning-rate drop factor")->capture_default_str();
  rec_cmd->add_option("--target-err", rec.target_err, "Stop once err_J reaches this value")->capture_default_str();
  rec_cmd->add_option("--init", rec.init, "Initialization")
      ->check(CLI::IsMember({"uniform", "zeros", "provided"}))
      ->capture_default_str();
  rec_cmd->add_option("--init-image", rec.init_image, "Starting image for --init provided");
  rec_cmd->add_option("--seed", rec.seed, "Seed of the uniform initialization")->capture_default_str();

  BankFlags frame;
  bool frame_json = false;
  auto* frame_cmd = app.add_subcommand("framecheck", "Littlewood-Paley audit of a filter bank");
  frame.add_to(frame_cmd);
  frame_cmd->add_flag("--json", frame_json, "Print the reports as JSON");

  BlobFlags blob;
  blob.bank.family = "gabor";
  blob.bank.grid = 64;
  blob.bank.scale_j = 2;
  auto* blob_cmd = app.add_subcommand("blob", "Numeric versus closed-form scattering of a Gaussian blob");
  blob_cmd->add_option("--sigma", blob.sigma, "Sigma entries \"s11 s12 s22\"")->required();
  blob_cmd->add_option("--out-dir", blob.out_dir, "Save the blob and its reconstructions here");
  blob_cmd->add_option("--iters", blob.iters, "Reconstruction iterations")->capture_default_str();
  blob_cmd->add_option("--seed", blob.seed, "Seed of the reconstructions")->capture_default_str();
  blob.bank.add_to(blob_cmd);

  StabilityFlags stab;
  stab.bank.family = "gabor";
  stab.bank.grid = 32;
  auto* stab_cmd = app.add_subcommand("stability", "Random trials of the translation Lipschitz bound (JSON rows)");
  stab_cmd->add_option("--trials", stab.trials, "Number of trials")->capture_default_str();
  stab_cmd->add_option("--amax", stab.amax, "Largest translation norm")->capture_default_str();
  stab_cmd->add_option("--seed", stab.seed, "Random seed")->capture_default_str();
  stab.bank.add_to(stab_cmd);

  BankFlags dump;
  std::string dump_dir;
  auto* dump_cmd = app.add_subcommand("dump-filters", "Write filter heatmaps and raw spectra");
  dump_cmd->add_option("--out-dir", dump_dir, "Output directory")->required();
  dump.add_to(dump_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*scatter_cmd) {
      if (scatter_flags.inputs.size() == 1 && scatter_flags.out.empty() && scatter_flags.out_dir.empty()) {
        throw CLI::ValidationError("--out (or --out-dir) is required");
      }
      if (scatter_flags.inputs.size() == 1 && scatter_flags.out.empty()) {
        scatter_flags.out =
            (fs::path(scatter_flags.out_dir) / (fs::path(scatter_flags.inputs[0]).stem().string() + ".sct")).string();
        fs::create_directories(scatter_flags.out_dir);
      }
      return run_scatter(scatter_flags);
    }
    if (*rec_cmd) return run_reconstruct(rec);
    if (*frame_cmd) return run_framecheck(frame, frame_json);
    if (*blob_cmd) return run_blob(blob);
    if (*stab_cmd) return run_stability(stab);
    if (*dump_cmd) {
      const auto bank = build_filter_bank(dump.config());
      dump_filters(bank, dump_dir);
      std::cout << "wrote " << bank.band_pass_count() + 1 << " filters to " << dump_dir << "\n";
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
