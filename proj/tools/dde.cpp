#include "dde/error.hpp"
#include "dde/evaluation.hpp"
#include "dde/io.hpp"
#include "dde/nn/estimate.hpp"
#include "dde/nn/model_io.hpp"
#include "dde/nn/smoothing.hpp"
#include "dde/nn/train.hpp"
#include "dde/synthpdf/dataset.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace dde;

namespace {

std::string
trim(std::string s)
{
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string>
split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty())
      out.push_back(trim(item));
  return out;
}

std::uint64_t
parse_u64(const std::string& s)
{
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty() || s[0] == '-')
    throw InvalidConfig("not a non-negative integer: '" + s + "'");
  return v;
}

// "0..9", "3", "1,4,7" or a mix; ranges are inclusive.
std::vector<std::uint64_t>
parse_seeds(const std::string& spec)
{
  std::vector<std::uint64_t> out;
  for (const auto& tok : split(spec, ',')) {
    const auto dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64(tok));
      continue;
    }
    const auto lo = parse_u64(trim(tok.substr(0, dots)));
    const auto hi = parse_u64(trim(tok.substr(dots + 2)));
    if (hi < lo)
      throw InvalidConfig("empty seed range '" + tok + "'");
    for (auto s = lo; s <= hi; ++s)
      out.push_back(s);
  }
  if (out.empty())
    throw InvalidConfig("no seeds given");
  return out;
}

// key=value lines, '#' comments, optional [command] sections. Values fill
// options of `cmd` that were not given on the command line.
void
apply_config(CLI::App* cmd, const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw FormatError("cannot open config file " + path);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty())
      continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    if (!section.empty() && section != cmd->get_name())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    while (!key.empty() && key.front() == '-')
      key.erase(0, 1);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config")
      continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (!opt)
      throw InvalidConfig(path + ":" + std::to_string(lineno) +
                          ": unknown key '" + key + "' for '" +
                          cmd->get_name() + "'");
    if (opt->count() > 0)
      continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

std::unique_ptr<std::ofstream>
open_output(const std::string& path, std::ostream*& os)
{
  if (path.empty() || path == "-") {
    os = &std::cout;
    return nullptr;
  }
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f)
    throw FormatError("cannot write " + path);
  os = f.get();
  return f;
}

void
print_error(const std::exception& e)
{
  std::cerr << "error: " << e.what() << '\n';
}

int
exit_code(ErrorClass c)
{
  switch (c) {
    case ErrorClass::usage:
      return 2;
    case ErrorClass::data:
      return 3;
    case ErrorClass::numeric:
      return 4;
  }
  return 1;
}

// ---------------------------------------------------------------- gen

struct GenArgs
{
  std::size_t dim = 1;
  std::size_t n_functions = 1000;
  std::size_t points = 1000;
  std::uint64_t seed = 0;
  std::string scheme = "A";
  std::string include_tags;
  std::string exclude_tags;
  double min_base_max = 0.0;
  std::size_t max_attempts = 200;
  std::string out;
};

synthpdf::TagSet
parse_tags(const std::string& list)
{
  synthpdf::TagSet s;
  for (const auto& name : split(list, ',')) {
    const auto t = synthpdf::tag_from_name(name);
    if (!t)
      throw InvalidConfig("unknown tag '" + name + "'");
    s.insert(*t);
  }
  return s;
}

int
run_gen(const GenArgs& a)
{
  synthpdf::GenerationConfig c;
  c.dim = a.dim;
  c.n_functions = a.n_functions;
  c.points_per_sample = a.points;
  c.seed = a.seed;
  if (a.scheme == "A")
    c.scheme = synthpdf::Scheme::per_axis_then_combine;
  else if (a.scheme == "B")
    c.scheme = synthpdf::Scheme::build_d_dim_then_combine;
  else
    throw InvalidConfig("scheme must be A or B");
  c.filter.include = parse_tags(a.include_tags);
  c.filter.exclude = parse_tags(a.exclude_tags);
  c.min_base_max = a.min_base_max;
  c.max_attempts = a.max_attempts;
  const auto ds = synthpdf::generate_dataset(c);
  synthpdf::write_dataset(ds, a.out);
  std::cerr << "wrote " << ds.items.size() << " PDFs (" << ds.train.size()
            << " train, " << ds.validation.size() << " validation, "
            << ds.total_retries() << " regenerations) to " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs
{
  std::string data;
  std::string out = "model.json";
  std::string curve;
  nn::MlpConfig mlp;
  nn::TrainConfig train;
  std::string features = nn::feature_transform_name(nn::MlpConfig{}.features);
  std::string output_activation = nn::activation_name(nn::MlpConfig{}.output_activation);
  bool no_batch_norm = false;
  bool quiet = false;
};

int
run_train(TrainArgs a)
{
  a.mlp.features = nn::feature_transform_from_name(a.features);
  a.mlp.output_activation = nn::activation_from_name(a.output_activation);
  a.mlp.batch_norm = !a.no_batch_norm;
  a.mlp.validate();
  a.train.validate();

  const auto ds = synthpdf::read_dataset(a.data);
  if (!a.quiet)
    std::cerr << "building k=" << a.mlp.k << " features for " << ds.items.size()
              << " samples\n";
  const auto data = nn::build_training_data(ds, a.mlp.k, a.mlp.features);
  nn::EpochCallback progress;
  if (!a.quiet)
    progress = [](const nn::CurvePoint& p) {
      std::fprintf(stderr, "member %zu epoch %3zu  lr %.3e  train %.5g  val %.5g\n",
                   p.member, p.epoch, p.lr, p.train_mse, p.validation_mse);
    };
  auto result = nn::train(data, a.train, a.mlp, progress);

  nn::ModelFile mf{ std::move(result.model), a.train, std::move(result.meta) };
  const fs::path out(a.out);
  if (out.has_parent_path())
    fs::create_directories(out.parent_path());
  nn::save_model(mf, out);

  const fs::path curve = a.curve.empty()
                           ? out.parent_path() / (out.stem().string() + "_curve.csv")
                           : fs::path(a.curve);
  io::CsvTable t;
  t.header = { "member", "epoch", "lr", "train_mse", "validation_mse" };
  for (const auto& p : mf.meta.curve)
    t.rows.push_back({ static_cast<double>(p.member), static_cast<double>(p.epoch),
                       p.lr, p.train_mse, p.validation_mse });
  io::write_csv(curve, t);
  std::cerr << "selected member " << mf.meta.selected_member << " epoch "
            << mf.meta.selected_epoch << " (validation MSE "
            << mf.meta.best_validation_mse << "); wrote " << out.string()
            << " and " << curve.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs
{
  std::string model;
  std::string sample;
  std::string queries;
  std::string out = "-";
  bool no_smooth = false;
  double smoothing_coefficient = nn::default_smoothing_coefficient;
};

int
run_estimate(const EstimateArgs& a)
{
  const auto mf = nn::load_model(a.model);
  const SampleSet sample = synthpdf::read_sample_csv(a.sample);
  const SampleSet queries =
    a.queries.empty() ? sample : synthpdf::read_sample_csv(a.queries);
  if (queries.dim() != sample.dim())
    throw ShapeMismatch("query dimension " + std::to_string(queries.dim()) +
                        " != sample dimension " + std::to_string(sample.dim()));
  const auto p_hat = nn::estimate(mf.model, sample, queries);

  std::optional<std::vector<double>> smooth;
  if (sample.dim() == 1 && !a.no_smooth) {
    const auto self = a.queries.empty() ? p_hat : nn::estimate(mf.model, sample);
    const nn::SmoothingSpline spline(sample.axis_values(0), self,
                                     a.smoothing_coefficient);
    smooth = spline(queries.axis_values(0));
  }

  io::CsvTable t;
  for (std::size_t j = 0; j < queries.dim(); ++j)
    t.header.push_back("x" + std::to_string(j));
  t.header.push_back("p_hat");
  if (smooth)
    t.header.push_back("p_hat_smooth");
  t.rows.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto p = queries.point(i);
    std::vector<double> row(p.begin(), p.end());
    row.push_back(p_hat[i]);
    if (smooth)
      row.push_back((*smooth)[i]);
    t.rows.push_back(std::move(row));
  }
  std::ostream* os = nullptr;
  auto f = open_output(a.out, os);
  io::write_csv(*os, t);
  return 0;
}

// ---------------------------------------------------------------- eval / bench

struct EvalArgs
{
  std::string estimators = "kde,dde";
  std::vector<std::string> dists;
  std::string sizes = "5000";
  std::string seeds = "0";
  std::string model;
  std::string out = "-";
  std::string json;
  std::string plot_dir;
  std::string table;
  bool no_ks = false;
  bool ks = false; // bench only
  double kl_floor = metrics::default_kl_floor;
  double smoothing_coefficient = nn::default_smoothing_coefficient;
  std::size_t grid_points = 2048;
  std::string reports; // bench only
};

struct EvalRun
{
  std::vector<metrics::EvalReport> rows;
  std::vector<eval::LocalShapeTable> tables;
};

EvalRun
run_evaluation(const EvalArgs& a, bool ks)
{
  std::optional<nn::ModelFile> mf;
  std::vector<eval::Estimator> ests;
  for (const auto& name : split(a.estimators, ',')) {
    eval::Estimator e;
    e.kind = eval::estimator_from_name(name);
    e.smoothing_coefficient = a.smoothing_coefficient;
    if (e.kind != eval::EstimatorKind::kde) {
      if (a.model.empty())
        throw InvalidConfig("estimator '" + name + "' needs --model");
      if (!mf)
        mf = nn::load_model(a.model);
    }
    ests.push_back(e);
  }
  if (ests.empty())
    throw InvalidConfig("no estimators given");
  for (auto& e : ests)
    if (e.kind != eval::EstimatorKind::kde)
      e.model = &mf->model;

  std::vector<std::size_t> ns;
  for (const auto& s : split(a.sizes, ','))
    ns.push_back(static_cast<std::size_t>(parse_u64(s)));
  if (ns.empty())
    throw InvalidConfig("no sample sizes given");
  const auto seeds = parse_seeds(a.seeds);

  std::vector<std::string> specs;
  for (const auto& d : a.dists)
    for (const auto& s : split(d, ','))
      specs.push_back(s);
  if (specs.empty())
    throw InvalidConfig("no distributions given");
  std::vector<eval::Distribution> dists;
  bool local_shapes = false;
  for (const auto& s : specs) {
    local_shapes |= s == "local-shape:all";
    for (auto& d : eval::expand_distribution(s))
      dists.push_back(std::move(d));
  }

  eval::EvalOptions opts;
  opts.kl_floor = a.kl_floor;
  opts.ks = ks;
  opts.grid_points = a.grid_points;
  const bool plots = !a.plot_dir.empty();
  if (plots)
    fs::create_directories(a.plot_dir);

  EvalRun run;
  for (const auto& d : dists)
    for (auto n : ns)
      for (auto seed : seeds) {
        auto res = eval::evaluate_case(d, n, seed, ests, opts, plots);
        if (plots && !res.plot.x.empty())
          eval::write_plot_csv(res.plot,
                               fs::path(a.plot_dir) / eval::plot_file_name(d.id, n, seed));
        for (auto& r : res.reports)
          run.rows.push_back(std::move(r));
      }
  eval::sort_reports(run.rows);
  if (local_shapes)
    for (auto n : ns)
      for (auto seed : seeds)
        run.tables.push_back(eval::local_shape_table(n, seed, ests));
  return run;
}

void
emit_tables(const EvalArgs& a, const EvalRun& run, bool csv_on_stdout)
{
  if (run.tables.empty())
    return;
  std::ostream* os = nullptr;
  std::unique_ptr<std::ofstream> f;
  if (!a.table.empty())
    f = open_output(a.table, os);
  else
    os = csv_on_stdout ? &std::cerr : &std::cout;
  for (const auto& t : run.tables) {
    eval::write_local_shape_table(*os, t);
    *os << '\n';
  }
}

int
run_eval(const EvalArgs& a)
{
  const auto run = run_evaluation(a, !a.no_ks);
  std::ostream* os = nullptr;
  auto f = open_output(a.out, os);
  metrics::write_reports_csv(*os, run.rows);
  if (!a.json.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : run.rows)
      j.push_back(r.to_json());
    io::write_text(a.json, j.dump(2) + "\n");
  }
  emit_tables(a, run, os == &std::cout);
  return 0;
}

int
run_bench(const EvalArgs& a)
{
  const auto run = run_evaluation(a, a.ks);
  if (!a.reports.empty()) {
    std::ofstream rf(a.reports);
    if (!rf)
      throw FormatError("cannot write " + a.reports);
    metrics::write_reports_csv(rf, run.rows);
  }
  // rows are sorted, so runs of one (estimator, distribution, n) are adjacent
  std::ostream* os = nullptr;
  auto f = open_output(a.out, os);
  *os << "estimator,distribution,n,d,runs,mean_time_s,min_time_s,max_time_s,"
         "mean_mse,mean_kl\n";
  for (std::size_t i = 0; i < run.rows.size();) {
    std::size_t j = i;
    double sum = 0, lo = run.rows[i].time_s, hi = lo, mse = 0, kl = 0;
    while (j < run.rows.size() && run.rows[j].estimator == run.rows[i].estimator &&
           run.rows[j].distribution == run.rows[i].distribution &&
           run.rows[j].n == run.rows[i].n) {
      sum += run.rows[j].time_s;
      lo = std::min(lo, run.rows[j].time_s);
      hi = std::max(hi, run.rows[j].time_s);
      mse += run.rows[j].mse;
      kl += run.rows[j].kl;
      ++j;
    }
    const double c = static_cast<double>(j - i);
    const auto& r = run.rows[i];
    *os << r.estimator << ',' << r.distribution << ',' << r.n << ',' << r.d << ','
        << (j - i) << ',' << io::format_double(sum / c) << ','
        << io::format_double(lo) << ',' << io::format_double(hi) << ','
        << io::format_double(mse / c) << ',' << io::format_double(kl / c) << '\n';
    i = j;
  }
  emit_tables(a, run, os == &std::cout);
  return 0;
}

void
add_eval_options(CLI::App* c, EvalArgs& a, bool bench)
{
  c->add_option("--estimators", a.estimators,
                "Comma list of kde, dde, dde-smooth");
  c->add_option("--dist", a.dists,
                "Distributions: gamma, two-gaussians, five-fingers, cauchy[:b=<f>], "
                "discontinuous, local-shape:<1..9>, local-shape:all, or a dataset "
                "directory")
    ->required()
    ->delimiter(',');
  c->add_option("--n", a.sizes, "Comma list of sample sizes");
  c->add_option("--seeds", a.seeds, "Seeds, e.g. 0..9 or 1,4,7");
  c->add_option("--model", a.model, "Model file for dde and dde-smooth");
  c->add_option("--out", a.out, bench ? "Timing summary CSV ('-' for stdout)"
                                      : "Report CSV ('-' for stdout)");
  c->add_option("--table", a.table,
                "Local-shape table file (default: stdout, or stderr when the "
                "CSV goes to stdout)");
  c->add_option("--plot-dir", a.plot_dir,
                "Directory for per-run 1D plot data (x, truth, estimates)");
  c->add_option("--kl-floor", a.kl_floor, "Estimate floor inside the KL log");
  c->add_option("--smoothing-coefficient", a.smoothing_coefficient,
                "Residual budget of dde-smooth as a fraction of m * Var");
  c->add_option("--grid-points", a.grid_points,
                "Grid size for KS resampling and plot data")
    ->check(CLI::Range(std::size_t{ 2 }, std::size_t{ 1 } << 24));
  if (bench) {
    c->add_flag("--ks", a.ks, "Also run the KS comparison (1D)");
    c->add_option("--reports", a.reports, "Also write the per-run report CSV");
  } else {
    c->add_flag("--no-ks", a.no_ks, "Skip the KS comparison");
    c->add_option("--json", a.json, "Also write the reports as JSON");
  }
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Learned density estimation from k-NN distance features" };
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::string config;
  auto add_config = [&](CLI::App* c) {
    c->add_option("--config", config,
                  "key=value file; keys are long flag names without dashes, "
                  "command-line flags take precedence");
  };

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic PDF dataset");
  add_config(g);
  g->add_option("--dim", gen.dim, "Dimension d")->check(CLI::PositiveNumber);
  g->add_option("--n-functions", gen.n_functions, "Number of PDFs")
    ->check(CLI::PositiveNumber);
  g->add_option("--points", gen.points, "Points sampled per PDF")
    ->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--scheme", gen.scheme,
                "Composition for d > 1: A (per axis, then combine) or B "
                "(d-dimensional terms, then combine)")
    ->check(CLI::IsMember({ "A", "B" }));
  g->add_option("--include-tags", gen.include_tags,
                "Only base functions with one of these tags (gaussian, linear, "
                "monotone, sinusoidal, step, inverse, power)");
  g->add_option("--exclude-tags", gen.exclude_tags,
                "No base functions with any of these tags");
  g->add_option("--min-base-max", gen.min_base_max,
                "Minimum maximum of each base function (0.01 forced for d >= 50)");
  g->add_option("--max-attempts", gen.max_attempts, "Regenerations per PDF");
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the density network on a dataset");
  add_config(t);
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Model file");
  t->add_option("--curve", tr.curve,
                "Training-curve CSV (default: <model stem>_curve.csv next to the "
                "model)");
  t->add_option("--k", tr.mlp.k, "Neighbours per feature row")
    ->check(CLI::PositiveNumber);
  t->add_option("--widths", tr.mlp.hidden_widths, "Hidden layer widths")
    ->delimiter(',');
  t->add_option("--features", tr.features, "Feature transform")
    ->check(CLI::IsMember({ "raw", "scaled", "log-scaled" }));
  t->add_option("--output-activation", tr.output_activation, "Output unit")
    ->check(CLI::IsMember({ "relu", "softplus", "exp", "linear" }));
  t->add_flag("--no-batch-norm", tr.no_batch_norm, "Disable batch norm");
  t->add_option("--bn-momentum", tr.mlp.bn_momentum, "Batch-norm running average momentum");
  t->add_option("--bn-eps", tr.mlp.bn_eps, "Batch-norm variance epsilon");
  t->add_option("--epochs", tr.train.epochs, "Epochs per member");
  t->add_option("--ensemble", tr.train.ensemble_size, "Ensemble members");
  t->add_option("--batch-size", tr.train.batch_size, "Minibatch rows");
  t->add_option("--lr", tr.train.lr0, "Initial Adam step size");
  t->add_option("--lr-decay", tr.train.lr_decay, "Step size factor per epoch");
  t->add_option("--beta1", tr.train.adam.beta1, "Adam beta1");
  t->add_option("--beta2", tr.train.adam.beta2, "Adam beta2");
  t->add_option("--adam-eps", tr.train.adam.eps, "Adam epsilon");
  t->add_option("--target-cap", tr.train.target_cap,
                "Clip unit-range training targets at this density (0: off)");
  t->add_option("--seed", tr.train.seed, "Master seed");
  t->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");

  EstimateArgs es;
  auto* e = app.add_subcommand("estimate", "Estimate densities with a trained model");
  add_config(e);
  e->add_option("--model", es.model, "Model file")->required();
  e->add_option("--sample", es.sample, "Sample CSV (x0..x{d-1}[,p_true])")
    ->required();
  e->add_option("--queries", es.queries, "Query CSV (default: the sample)");
  e->add_option("--out", es.out, "Output CSV ('-' for stdout)");
  e->add_flag("--no-smooth", es.no_smooth, "Omit the smoothed column (1D)");
  e->add_option("--smoothing-coefficient", es.smoothing_coefficient,
                "Residual budget as a fraction of m * Var");

  EvalArgs ev;
  auto* v = app.add_subcommand("eval", "Score estimators on known distributions");
  add_config(v);
  add_eval_options(v, ev, false);

  EvalArgs be;
  be.estimators = "kde";
  auto* b = app.add_subcommand("bench", "Time estimators on known distributions");
  add_config(b);
  add_eval_options(b, be, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!config.empty())
      apply_config(cmd, config);
    if (cmd == g)
      return run_gen(gen);
    if (cmd == t)
      return run_train(tr);
    if (cmd == e)
      return run_estimate(es);
    if (cmd == v)
      return run_eval(ev);
    if (cmd == b)
      return run_bench(be);
  } catch (const Error& err) {
    print_error(err);
    return exit_code(err.error_class());
  } catch (const CLI::ParseError& err) {
    print_error(err);
    return 2;
  } catch (const nlohmann::json::exception& err) {
    print_error(err);
    return 3;
  } catch (const fs::filesystem_error& err) {
    print_error(err);
    return 3;
  } catch (const std::exception& err) {
    print_error(err);
    return 1;
  }
  return 0;
}
