#include "layoutgen/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layoutgen/core.hpp"
#include "layoutgen/error.hpp"
#include "layoutgen/gmm.hpp"
#include "layoutgen/losses.hpp"
#include "layoutgen/metrics.hpp"
#include "layoutgen/rng.hpp"
#include "layoutgen/synth.hpp"
#include "layoutgen/transforms.hpp"

namespace layoutgen {

namespace {

namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(Err::TruncatedPayload, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(Err::TruncatedPayload, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError(Err::TruncatedPayload, "failed writing " + path);
}

// Inline JSON/CSV text, or a path to a file holding it.
Palette palette_from_arg(const std::string& arg) {
  const std::size_t start = arg.find_first_not_of(" \t");
  if (start == std::string::npos)
    throw ValidationError(Err::BadConfig, "empty palette argument");
  if (arg[start] == '[' || arg.find(',') != std::string::npos) return parse_palette(arg);
  return parse_palette(read_text_file(arg));
}

std::vector<fs::path> list_pgm(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(Err::TruncatedPayload, dir + " is not a directory");
  std::vector<fs::path> out;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<HardLayout> load_layout_dir(const std::string& dir) {
  std::vector<HardLayout> out;
  for (const fs::path& p : list_pgm(dir)) out.push_back(read_label_map_file(p.string()));
  if (out.empty()) throw IoError(Err::EmptyPopulation, "no .pgm files in " + dir);
  return out;
}

EditRegion parse_region(const std::string& arg) {
  EditRegion r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream ss(arg);
  if (!(ss >> r.top >> c1 >> r.left >> c2 >> r.height >> c3 >> r.width) || c1 != ',' ||
      c2 != ',' || c3 != ',' || !(ss >> std::ws).eof())
    throw ValidationError(Err::BadConfig, "region must be T,L,H,W");
  return r;
}

nlohmann::json trace_to_json(const SynthesisTrace& trace) {
  nlohmann::json j;
  j["converged"] = trace.converged;
  j["final_kl"] = trace.final_kl;
  j["steps_run"] = trace.steps_run;
  j["records"] = nlohmann::json::array();
  for (const TraceRecord& r : trace.records) {
    j["records"].push_back({{"step", r.step},
                            {"entropy", r.entropy},
                            {"spread", r.spread},
                            {"total", r.total},
                            {"kl", r.kl}});
  }
  return j;
}

struct SynthFlags {
  std::string palette;
  std::string size;
  std::string trace_file;
  std::string out = "layout.pgm";
  std::uint64_t seed = 0;
  SynthesisConfig cfg;
};

void add_optimizer_flags(CLI::App* cmd, SynthFlags& fl) {
  cmd->add_option("--seed", fl.seed, "RNG seed");
  cmd->add_option("--steps", fl.cfg.steps, "iteration cap");
  cmd->add_option("--step-size", fl.cfg.step_size, "descent step size");
  cmd->add_option("--momentum", fl.cfg.momentum, "momentum in [0,1)");
  cmd->add_option("--init-std", fl.cfg.init_std, "initialization scale");
  cmd->add_option("--kl-stop", fl.cfg.kl_stop, "early-stop threshold on realized KL");
  cmd->add_option("--checkpoint-every", fl.cfg.checkpoint_every, "trace interval");
  cmd->add_option("--trace", fl.trace_file, "write the optimization trace as JSON");
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"layout synthesis toolkit: palette models, transport losses, editing, metrics"};
  app.require_subcommand(1);
  int exit_code = 0;

  // fit-palettes <dir> [--components N] [--seed N]
  {
    auto fl = std::make_shared<std::pair<std::string, FitOptions>>();
    auto max_components = std::make_shared<int>(10);
    CLI::App* cmd = app.add_subcommand("fit-palettes",
                                       "fit a Gaussian mixture to the class histograms of every "
                                       ".pgm layout in a directory; model JSON on stdout");
    cmd->add_option("dir", fl->first, "directory of .pgm layouts")->required();
    cmd->add_option("--components", *max_components, "largest candidate component count")
        ->check(CLI::Range(1, 10));
    cmd->add_option("--seed", fl->second.seed, "RNG seed");
    cmd->add_option("--max-iter", fl->second.max_iter, "EM iteration cap");
    cmd->add_option("--tol", fl->second.tol, "EM log-likelihood gain tolerance");
    cmd->callback([fl, max_components]() {
      const std::vector<HardLayout> layouts = load_layout_dir(fl->first);
      std::vector<Palette> samples;
      samples.reserve(layouts.size());
      for (const HardLayout& l : layouts) samples.push_back(hard_histogram(l));
      std::vector<int> candidates;
      for (int m = 1; m <= *max_components && m <= static_cast<int>(samples.size()); ++m)
        candidates.push_back(m);
      const SelectionReport sel = select_components(samples, candidates, fl->second);
      for (const SelectionRow& row : sel.table)
        std::cerr << "components=" << row.components << " aic=" << row.aic
                  << " loglik=" << row.log_likelihood << "\n";
      std::cout << gmm_to_json(sel.best.model) << "\n";
    });
  }

  // sample-palettes <model.json> --count K [--seed N]
  {
    struct Flags {
      std::string model;
      int count = 0;
      std::uint64_t seed = 0;
    };
    auto fl = std::make_shared<Flags>();
    CLI::App* cmd =
        app.add_subcommand("sample-palettes", "draw palettes from a fitted model, one JSON array per line");
    cmd->add_option("model", fl->model, "model JSON file")->required();
    cmd->add_option("--count", fl->count, "number of palettes")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", fl->seed, "RNG seed");
    cmd->callback([fl]() {
      const GmmModel model = gmm_from_json(read_text_file(fl->model));
      PaletteSampler sampler(model);
      std::mt19937_64 rng(fl->seed);
      for (int i = 0; i < fl->count; ++i)
        std::cout << palette_to_json(sampler.sample(rng)) << "\n";
    });
  }

  // synthesize --palette P --size HxW [...]
  {
    auto fl = std::make_shared<SynthFlags>();
    CLI::App* cmd = app.add_subcommand(
        "synthesize", "optimize a layout toward a target palette; writes a .pgm label map");
    cmd->add_option("--palette", fl->palette, "target palette, inline JSON/CSV or a file")
        ->required();
    cmd->add_option("--size", fl->size, "grid as HxW, e.g. 16x32")->required();
    cmd->add_flag("--multiscale", fl->cfg.multiscale, "optimize coarse-to-fine over two scales");
    cmd->add_option("--out", fl->out, "output label map path");
    add_optimizer_flags(cmd, *fl);
    cmd->callback([fl]() {
      const Palette t = palette_from_arg(fl->palette);
      SynthesisConfig cfg = fl->cfg;
      cfg.seed = fl->seed;
      char x = 0;
      std::istringstream ss(fl->size);
      if (!(ss >> cfg.height >> x >> cfg.width) || x != 'x' || !(ss >> std::ws).eof())
        throw ValidationError(Err::BadConfig, "size must be HxW");
      const SynthesisResult res = synthesize(t, cfg);
      write_label_map_file(fl->out, res.layout);
      std::cerr << "steps=" << res.trace.steps_run << " final_kl=" << res.trace.final_kl
                << (res.trace.converged ? " (reached kl-stop)" : "") << "\n";
      if (!fl->trace_file.empty())
        write_text_file(fl->trace_file, trace_to_json(res.trace).dump(2) + "\n");
    });
  }

  // edit <layout.pgm> --region T,L,H,W --palette P [...]
  {
    struct Flags : SynthFlags {
      std::string input;
      std::string region;
    };
    auto fl = std::make_shared<Flags>();
    fl->out = "edited.pgm";
    CLI::App* cmd = app.add_subcommand(
        "edit", "repaint a rectangular region of a layout under an augmented palette "
                "(real classes plus a trailing background budget)");
    cmd->add_option("input", fl->input, "input .pgm label map")->required();
    cmd->add_option("--region", fl->region, "rectangle as top,left,height,width")->required();
    cmd->add_option("--palette", fl->palette,
                    "augmented palette with the background budget last, inline JSON/CSV or a file")
        ->required();
    cmd->add_option("--out", fl->out, "output label map path");
    add_optimizer_flags(cmd, *fl);
    cmd->callback([fl]() {
      const HardLayout input = read_label_map_file(fl->input);
      const EditRegion region = parse_region(fl->region);
      const Palette aug = palette_from_arg(fl->palette);
      SynthesisConfig cfg = fl->cfg;
      cfg.seed = fl->seed;
      cfg.height = input.height;
      cfg.width = input.width;
      const SynthesisResult res = synthesize_edit(input, region, aug, cfg);
      write_label_map_file(fl->out, res.layout);
      std::cerr << "steps=" << res.trace.steps_run << " final_kl=" << res.trace.final_kl << "\n";
      if (!fl->trace_file.empty())
        write_text_file(fl->trace_file, trace_to_json(res.trace).dump(2) + "\n");
    });
  }

  // metrics --target P --layouts DIR [--reference DIR]
  {
    struct Flags {
      std::string target;
      std::string layouts;
      std::string reference;
    };
    auto fl = std::make_shared<Flags>();
    CLI::App* cmd = app.add_subcommand(
        "metrics", "proportion divergence of each layout from the target, and the distribution "
                   "distance against a reference corpus when given; JSON on stdout");
    cmd->add_option("--target", fl->target, "target palette, inline JSON/CSV or a file")
        ->required();
    cmd->add_option("--layouts", fl->layouts, "directory of .pgm layouts")->required();
    cmd->add_option("--reference", fl->reference, "directory of reference .pgm layouts");
    cmd->callback([fl]() {
      const Palette target = palette_from_arg(fl->target);
      const std::vector<HardLayout> layouts = load_layout_dir(fl->layouts);
      double mean = 0.0, mx = 0.0;
      for (const HardLayout& l : layouts) {
        const double kl = proportion_kl(target, l);
        mean += kl;
        mx = std::max(mx, kl);
      }
      mean /= static_cast<double>(layouts.size());
      nlohmann::json j;
      j["count"] = layouts.size();
      j["kl"] = {{"mean", mean}, {"max", mx}};
      if (fl->reference.empty()) {
        j["fsd"] = nullptr;
      } else {
        const std::vector<HardLayout> ref = load_layout_dir(fl->reference);
        j["fsd"] = frechet_distance(population_stats(layouts), population_stats(ref));
      }
      std::cout << j.dump(2) << "\n";
    });
  }

  // gradcheck [--seed N] [--classes C] [--height H] [--width W]
  {
    struct Flags {
      std::uint64_t seed = 0;
      int classes = 3;
      int height = 4;
      int width = 4;
    };
    auto fl = std::make_shared<Flags>();
    CLI::App* cmd = app.add_subcommand(
        "gradcheck", "compare the analytic loss gradient against finite differences");
    cmd->add_option("--seed", fl->seed, "RNG seed");
    cmd->add_option("--classes", fl->classes, "channel count")->check(CLI::Range(2, 16));
    cmd->add_option("--height", fl->height, "grid height")->check(CLI::Range(1, 8));
    cmd->add_option("--width", fl->width, "grid width")->check(CLI::Range(1, 8));
    cmd->callback([fl, &exit_code]() {
      const GradCheckReport r = gradcheck(fl->seed, fl->classes, fl->height, fl->width);
      nlohmann::json j;
      j["max_rel_err"] = r.max_rel_err;
      j["tolerance"] = r.tolerance;
      j["pass"] = r.pass;
      j["classes"] = r.classes;
      j["height"] = r.height;
      j["width"] = r.width;
      j["seed"] = r.seed;
      std::cout << j.dump(2) << "\n";
      if (!r.pass) exit_code = 1;
    });
  }

  // render <layout.pgm> [--out FILE]
  {
    struct Flags {
      std::string input;
      std::string out;
    };
    auto fl = std::make_shared<Flags>();
    CLI::App* cmd =
        app.add_subcommand("render", "color rendering of a label map as a plain-text .ppm");
    cmd->add_option("input", fl->input, "input .pgm label map")->required();
    cmd->add_option("--out", fl->out, "output path; defaults to the input with a .ppm extension");
    cmd->callback([fl]() {
      const HardLayout layout = read_label_map_file(fl->input);
      std::string out = fl->out;
      if (out.empty()) out = fs::path(fl->input).replace_extension(".ppm").string();
      write_text_file(out, render(layout));
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints contextual help or the usage error
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

}  // namespace layoutgen
