#include "dde/synthpdf/dataset.hpp"

#include "dde/error.hpp"
#include "dde/io.hpp"

#include <cstdio>
#include <string>

namespace dde::synthpdf {
namespace {

constexpr double extent_lo = 1.0;
constexpr double extent_hi = 10.0;
constexpr double highdim_min_base_max = 0.01;

std::string
indexed_name(const char* stem, std::size_t i, const char* ext)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu.%s", stem, i, ext);
  return buf;
}

nlohmann::json
tags_json(TagSet tags)
{
  nlohmann::json a = nlohmann::json::array();
  for (Tag t : tags.to_vector())
    a.push_back(tag_name(t));
  return a;
}

TagSet
tags_from_json(const nlohmann::json& a)
{
  TagSet s;
  for (const auto& v : a) {
    const auto t = tag_from_name(v.get<std::string>());
    if (!t)
      throw FormatError("unknown tag '" + v.get<std::string>() + "'");
    s.insert(*t);
  }
  return s;
}

} // namespace

GenerationConfig
GenerationConfig::validated() const
{
  GenerationConfig c = *this;
  if (c.dim == 0)
    throw InvalidConfig("dim must be positive");
  if (c.n_functions == 0)
    throw InvalidConfig("n_functions must be positive");
  if (c.points_per_sample == 0)
    throw InvalidConfig("points_per_sample must be positive");
  if (c.filter.include.intersects(c.filter.exclude))
    throw InvalidConfig("include and exclude tags overlap");
  if (admitted_kinds(c.filter).empty())
    throw FilterEmpty("no base function matches the tag filter");
  if (c.add_only())
    c.min_base_max = highdim_min_base_max;
  return c;
}

nlohmann::json
GenerationConfig::to_json() const
{
  return { { "dim", dim },
           { "n_functions", n_functions },
           { "points_per_sample", points_per_sample },
           { "scheme", scheme == Scheme::per_axis_then_combine ? "A" : "B" },
           { "include_tags", tags_json(filter.include) },
           { "exclude_tags", tags_json(filter.exclude) },
           { "seed", seed },
           { "min_base_max", min_base_max },
           { "max_attempts", max_attempts } };
}

GenerationConfig
GenerationConfig::from_json(const nlohmann::json& j)
{
  try {
    GenerationConfig c;
    c.dim = j.at("dim").get<std::size_t>();
    c.n_functions = j.at("n_functions").get<std::size_t>();
    c.points_per_sample = j.at("points_per_sample").get<std::size_t>();
    const auto sch = j.at("scheme").get<std::string>();
    if (sch != "A" && sch != "B")
      throw FormatError("unknown scheme '" + sch + "'");
    c.scheme = sch == "A" ? Scheme::per_axis_then_combine
                          : Scheme::build_d_dim_then_combine;
    c.filter.include = tags_from_json(j.at("include_tags"));
    c.filter.exclude = tags_from_json(j.at("exclude_tags"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.min_base_max = j.at("min_base_max").get<double>();
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed generation config: ") + e.what());
  }
}

std::size_t
Dataset::total_retries() const
{
  std::size_t r = 0;
  for (const auto& it : items)
    r += it.retries;
  return r;
}

GeneratedPdf
generate_pdf(const GenerationConfig& config, std::size_t index)
{
  const GenerationConfig cfg = config.validated();
  ComposeRules rules;
  rules.filter = cfg.filter;
  rules.add_only = cfg.add_only();
  rules.min_base_max = cfg.min_base_max;

  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Rng rng = make_rng(child_seed(cfg.seed, index, attempt));
    const auto n_c = std::uniform_int_distribution<std::size_t>(2, 7)(rng);
    std::vector<double> extents(cfg.dim);
    std::vector<Interval> domain(cfg.dim);
    for (std::size_t a = 0; a < cfg.dim; ++a) {
      extents[a] = uniform(rng, extent_lo, extent_hi);
      domain[a] = { 0.0, extents[a] };
    }
    try {
      auto expr = compose_highdim(rng, extents, n_c, cfg.scheme, rules);
      auto pdf = normalize(expr, std::move(domain), rng);
      auto sample = rejection_sample(pdf, cfg.points_per_sample, rng);
      return { std::move(pdf), std::move(sample), attempt };
    } catch (const DegeneratePdf&) {
    } catch (const LowAcceptance&) {
    }
  }
  throw RetryExhausted("pdf " + std::to_string(index) + " failed " +
                       std::to_string(cfg.max_attempts) +
                       " generation attempts");
}

Dataset
generate_dataset(const GenerationConfig& config)
{
  Dataset ds;
  ds.config = config.validated();
  ds.items.reserve(ds.config.n_functions);
  for (std::size_t i = 0; i < ds.config.n_functions; ++i)
    ds.items.push_back(generate_pdf(ds.config, i));
  const std::size_t n_val = ds.config.n_functions / 4;
  const std::size_t n_train = ds.config.n_functions - n_val;
  for (std::size_t i = 0; i < ds.config.n_functions; ++i)
    (i < n_train ? ds.train : ds.validation).push_back(i);
  return ds;
}

void
write_sample_csv(const SampleSet& s, const std::filesystem::path& path)
{
  io::CsvTable t;
  for (std::size_t a = 0; a < s.dim(); ++a)
    t.header.push_back("x" + std::to_string(a));
  const bool with_truth = s.density_truth().has_value();
  if (with_truth)
    t.header.push_back("p_true");
  t.rows.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto p = s.point(i);
    std::vector<double> row(p.begin(), p.end());
    if (with_truth)
      row.push_back((*s.density_truth())[i]);
    t.rows.push_back(std::move(row));
  }
  io::write_csv(path, t);
}

SampleSet
read_sample_csv(const std::filesystem::path& path)
{
  const auto t = io::read_csv(path);
  std::size_t dim = 0;
  while (dim < t.header.size() && t.header[dim] == "x" + std::to_string(dim))
    ++dim;
  if (dim == 0)
    throw FormatError(path.string() + ": header must start with x0");
  const bool with_truth =
    t.header.size() == dim + 1 && t.header[dim] == "p_true";
  if (!with_truth && t.header.size() != dim)
    throw FormatError(path.string() + ": unexpected columns after x" +
                      std::to_string(dim - 1));
  SampleSet s(dim);
  s.reserve(t.rows.size());
  std::vector<double> truth;
  for (const auto& row : t.rows) {
    s.push_back(std::span(row.data(), dim));
    if (with_truth)
      truth.push_back(row[dim]);
  }
  if (with_truth)
    s.set_density_truth(std::move(truth));
  return s;
}

void
write_dataset(const Dataset& ds, const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& it = ds.items[i];
    const auto csv = indexed_name("sample", i, "csv");
    const auto pdf = indexed_name("pdf", i, "json");
    write_sample_csv(it.sample, dir / csv);
    io::write_text(dir / pdf, it.pdf.to_json().dump(1) + "\n");
    nlohmann::json scale = nlohmann::json::array();
    for (const auto& s : it.sample.scale())
      scale.push_back({ { "offset", s.offset }, { "width", s.width } });
    samples.push_back({ { "file", csv },
                        { "pdf", pdf },
                        { "points", it.sample.size() },
                        { "scale", scale },
                        { "retries", it.retries } });
  }
  nlohmann::json manifest{
    { "format", "dde-dataset-v1" },
    { "config", ds.config.to_json() },
    { "seed", ds.config.seed },
    { "counts",
      { { "functions", ds.items.size() },
        { "train", ds.train.size() },
        { "validation", ds.validation.size() },
        { "retries", ds.total_retries() } } },
    { "split", { { "train", ds.train }, { "validation", ds.validation } } },
    { "samples", samples },
  };
  io::write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

Dataset
read_dataset(const std::filesystem::path& dir)
{
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
  try {
    if (manifest.at("format").get<std::string>() != "dde-dataset-v1")
      throw FormatError("unsupported dataset format");
    Dataset ds;
    ds.config = GenerationConfig::from_json(manifest.at("config"));
    ds.train = manifest.at("split").at("train").get<std::vector<std::size_t>>();
    ds.validation =
      manifest.at("split").at("validation").get<std::vector<std::size_t>>();
    for (const auto& entry : manifest.at("samples")) {
      GeneratedPdf item;
      item.sample = read_sample_csv(dir / entry.at("file").get<std::string>());
      std::vector<AxisScale> scale;
      for (const auto& s : entry.at("scale"))
        scale.push_back({ s.at("offset").get<double>(),
                          s.at("width").get<double>() });
      item.sample.set_scale(std::move(scale));
      item.retries = entry.value("retries", std::size_t{ 0 });
      if (entry.contains("pdf")) {
        const auto path = dir / entry.at("pdf").get<std::string>();
        if (std::filesystem::exists(path))
          item.pdf = SyntheticPdf::from_json(
            nlohmann::json::parse(io::read_text(path)));
      }
      ds.items.push_back(std::move(item));
    }
    for (auto idx : ds.train)
      if (idx >= ds.items.size())
        throw FormatError("split index out of range");
    for (auto idx : ds.validation)
      if (idx >= ds.items.size())
        throw FormatError("split index out of range");
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest.json: " + std::string(e.what()));
  }
}

} // namespace dde::synthpdf
