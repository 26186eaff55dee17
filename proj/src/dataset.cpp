#include "chanlearn/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "chanlearn/gaussian_channel.hpp"

namespace chanlearn {

using nlohmann::json;

namespace {

// Substream tags, one per purpose, so adding a builder never shifts another's
// draws.
constexpr std::uint64_t kTagClassification = 0x11;
constexpr std::uint64_t kTagRegression = 0x12;
constexpr std::uint64_t kTagForecastMarkov = 0x13;
constexpr std::uint64_t kTagForecastDet = 0x14;
constexpr std::uint64_t kTagBinning = 0x15;
constexpr std::uint64_t kTagSplit = 0x16;

std::vector<double> features_from_etas(const std::vector<double>& etas, double r) {
  std::vector<double> f(etas.size());
  for (std::size_t i = 0; i < etas.size(); ++i) f[i] = feature_sigma11(etas[i], r);
  return f;
}

SampleMeta meta_from_kind(const ChannelKind& kind) {
  SampleMeta meta;
  if (const auto* nm = std::get_if<NonMarkovian>(&kind)) meta.mu = nm->mu;
  if (const auto* m = std::get_if<Markovian>(&kind)) meta.mu = m->mu;
  if (const auto* c = std::get_if<DeterministicCos>(&kind)) {
    meta.a = c->a; meta.b = c->b; meta.delta = c->delta;
  }
  if (const auto* e = std::get_if<DeterministicExp>(&kind)) {
    meta.a = e->a; meta.b = e->b; meta.delta = e->delta;
  }
  return meta;
}

InitSpec draw_init(Generation gen, RandomStream& rng) {
  switch (gen) {
    case Generation::d1: return sample_init_d1(rng);
    case Generation::d2: return sample_init_d2(rng);
    case Generation::fixed: return D1Init{{2.0, 2.0}};
  }
  throw std::logic_error("draw_init: bad enum");
}

void require_positive(int v, const char* what) {
  if (v < 1) throw std::invalid_argument(std::string(what) + " must be >= 1");
}

}  // namespace

std::string_view task_name(Task t) {
  switch (t) {
    case Task::classification: return "classification";
    case Task::regression: return "regression";
    case Task::forecast: return "forecast";
  }
  throw std::logic_error("task_name: bad enum");
}

Task task_from_name(std::string_view name) {
  if (name == "classification") return Task::classification;
  if (name == "regression") return Task::regression;
  if (name == "forecast") return Task::forecast;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

std::string_view generation_name(Generation g) {
  switch (g) {
    case Generation::d1: return "d1";
    case Generation::d2: return "d2";
    case Generation::fixed: return "fixed";
  }
  throw std::logic_error("generation_name: bad enum");
}

Generation generation_from_name(std::string_view name) {
  if (name == "d1") return Generation::d1;
  if (name == "d2") return Generation::d2;
  if (name == "fixed") return Generation::fixed;
  throw std::invalid_argument("unknown generation mode: " + std::string(name));
}

std::string_view det_form_name(DetForm f) {
  return f == DetForm::cos ? "cos" : "exp";
}

DetForm det_form_from_name(std::string_view name) {
  if (name == "cos") return DetForm::cos;
  if (name == "exp") return DetForm::exp;
  throw std::invalid_argument("unknown deterministic form: " + std::string(name));
}

bool persisted_equal(const Dataset& a, const Dataset& b) {
  if (a.r != b.r || a.seq_len != b.seq_len || a.task != b.task ||
      a.generation != b.generation || a.master_seed != b.master_seed ||
      a.n_classes != b.n_classes || a.target_width != b.target_width ||
      a.samples.size() != b.samples.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const Sample& x = a.samples[i];
    const Sample& y = b.samples[i];
    if (x.label != y.label || x.features != y.features || x.targets != y.targets) {
      return false;
    }
  }
  return true;
}

Dataset build_classification(const ClassificationConfig& cfg) {
  require_positive(cfg.per_class, "per_class");
  require_positive(cfg.seq_len, "seq_len");
  if (!(cfg.r > 0.0)) throw std::invalid_argument("r must be > 0");
  if (cfg.generation == Generation::fixed) {
    throw std::invalid_argument("classification datasets use d1 or d2 initialization");
  }

  Dataset ds;
  ds.r = cfg.r;
  ds.seq_len = cfg.seq_len;
  ds.task = Task::classification;
  ds.generation = cfg.generation;
  ds.master_seed = cfg.seed;
  ds.n_classes = kNumClasses;
  ds.target_width = 1;
  ds.samples.reserve(static_cast<std::size_t>(cfg.per_class) * kNumClasses);

  for (int c = 0; c < kNumClasses; ++c) {
    const ChannelClass cls = class_from_index(c);
    for (int i = 0; i < cfg.per_class; ++i) {
      const std::uint64_t idx = static_cast<std::uint64_t>(c) * cfg.per_class + i;
      RandomStream rng = RandomStream::derive(cfg.seed, {kTagClassification, idx});
      const ChannelKind kind = sample_kind_params(cls, rng);
      const InitSpec init = draw_init(cfg.generation, rng);
      const auto etas = sample_eta_values(kind, init, cfg.seq_len, rng);
      Sample s;
      s.features = features_from_etas(etas, cfg.r);
      s.label = c;
      s.meta = meta_from_kind(kind);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

Dataset build_regression(const RegressionConfig& cfg) {
  require_positive(cfg.count, "count");
  if (!(cfg.r > 0.0)) throw std::invalid_argument("r must be > 0");

  Dataset ds;
  ds.r = cfg.r;
  ds.seq_len = kRegressionLen;
  ds.task = Task::regression;
  ds.generation = Generation::d2;
  ds.master_seed = cfg.seed;
  ds.target_width = kRegressionLen;
  ds.samples.reserve(cfg.count);

  for (int i = 0; i < cfg.count; ++i) {
    RandomStream rng = RandomStream::derive(cfg.seed, {kTagRegression, static_cast<std::uint64_t>(i)});
    // Channel kinds mixed uniformly over all five classes.
    const ChannelClass cls = class_from_index(static_cast<int>(rng.uniform_index(kNumClasses)));
    const ChannelKind kind = sample_kind_params(cls, rng);
    const InitSpec init = sample_init_d2(rng);
    const auto etas = sample_eta_values(kind, init, kRegressionLen, rng);
    Sample s;
    s.features = features_from_etas(etas, cfg.r);
    s.targets = etas;
    s.meta = meta_from_kind(kind);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset build_forecast_markovian(const ForecastMarkovConfig& cfg) {
  require_positive(cfg.count, "count");
  if (!(cfg.mu > 0.0 && cfg.mu <= 1.0)) {
    throw std::invalid_argument("mu must lie in (0, 1] (1 is the compound limit)");
  }
  if (!(cfg.r > 0.0)) throw std::invalid_argument("r must be > 0");

  Dataset ds;
  ds.r = cfg.r;
  ds.seq_len = kForecastMarkovInputLen;
  ds.task = Task::forecast;
  ds.generation = Generation::d2;
  ds.master_seed = cfg.seed;
  ds.target_width = kForecastMarkovTargetLen;
  ds.samples.reserve(cfg.count);

  const int total_len = kForecastMarkovInputLen + kForecastMarkovTargetLen;
  for (int i = 0; i < cfg.count; ++i) {
    RandomStream rng = RandomStream::derive(cfg.seed, {kTagForecastMarkov, static_cast<std::uint64_t>(i)});
    // mu = 1 (compound limit) is allowed for tests and generated through the
    // same update rule.
    const ChannelKind kind = cfg.mu < 1.0 ? ChannelKind{Markovian{cfg.mu}} : ChannelKind{Compound{}};
    const InitSpec init = sample_init_d2(rng);
    const auto etas = sample_eta_values(kind, init, total_len, rng);
    Sample s;
    s.features = features_from_etas({etas.begin(), etas.begin() + kForecastMarkovInputLen}, cfg.r);
    s.targets.assign(etas.begin() + kForecastMarkovInputLen, etas.end());
    s.meta.mu = cfg.mu;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset build_forecast_deterministic(const ForecastDetConfig& cfg) {
  require_positive(cfg.count, "count");
  require_positive(cfg.input_len, "input_len (K)");
  if (!(cfg.r > 0.0)) throw std::invalid_argument("r must be > 0");

  Dataset ds;
  ds.r = cfg.r;
  ds.seq_len = cfg.input_len;
  ds.task = Task::forecast;
  ds.generation = Generation::fixed;
  ds.master_seed = cfg.seed;
  ds.target_width = kForecastDetTargetLen;
  ds.samples.reserve(cfg.count);

  const int total_len = cfg.input_len + kForecastDetTargetLen;
  for (int i = 0; i < cfg.count; ++i) {
    RandomStream rng = RandomStream::derive(cfg.seed, {kTagForecastDet, static_cast<std::uint64_t>(i)});
    const double a = 0.5 * rng.uniform_open();
    const double b = 0.5 * rng.uniform_open();
    const ChannelKind kind = cfg.form == DetForm::cos
                                 ? ChannelKind{DeterministicCos{a, b, 1.0 + 9.0 * rng.uniform_open()}}
                                 : ChannelKind{DeterministicExp{a, b, 10.0 + 20.0 * rng.uniform_open()}};
    const InitSpec init = D1Init{{2.0, 2.0}};  // ignored by deterministic kinds
    const auto etas = sample_eta_values(kind, init, total_len, rng);
    Sample s;
    s.features = features_from_etas({etas.begin(), etas.begin() + cfg.input_len}, cfg.r);
    s.targets.assign(etas.begin() + cfg.input_len, etas.end());
    s.meta = meta_from_kind(kind);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset build_memory_binning(const MemoryBinningConfig& cfg) {
  require_positive(cfg.count, "count");
  if (!(cfg.threshold >= 0.3 && cfg.threshold <= 0.96)) {
    throw std::invalid_argument("binning threshold c must lie in [0.3, 0.96]");
  }
  if (!(cfg.r > 0.0)) throw std::invalid_argument("r must be > 0");

  Dataset ds;
  ds.r = cfg.r;
  ds.seq_len = kBinningSeqLen;
  ds.task = Task::classification;
  ds.generation = Generation::fixed;
  ds.master_seed = cfg.seed;
  ds.n_classes = 2;
  ds.target_width = 1;
  ds.samples.reserve(cfg.count);

  for (int i = 0; i < cfg.count; ++i) {
    RandomStream rng = RandomStream::derive(cfg.seed, {kTagBinning, static_cast<std::uint64_t>(i)});
    double mu;
    do {
      mu = rng.uniform();
    } while (mu == 0.0);  // mu uniform on (0, 1)
    const ChannelKind kind = Markovian{mu};
    const InitSpec init = D1Init{{2.0, 2.0}};
    const auto etas = sample_eta_values(kind, init, kBinningSeqLen, rng);
    Sample s;
    s.features = features_from_etas(etas, cfg.r);
    s.label = mu >= cfg.threshold ? 1 : 0;  // boundary goes to the upper bin
    s.meta.mu = mu;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

SplitPair split(const Dataset& ds, double ratio, std::uint64_t seed) {
  if (ds.samples.empty()) throw std::invalid_argument("split: empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split: ratio must lie in (0, 1)");

  auto shuffled = [&](std::vector<std::size_t> idx, std::uint64_t salt) {
    RandomStream rng = RandomStream::derive(seed, {kTagSplit, salt});
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    }
    return idx;
  };

  std::vector<std::size_t> train_idx, test_idx;
  if (ds.task == Task::classification) {
    // Stratified: permute and cut each class separately.
    for (int c = 0; c < ds.n_classes; ++c) {
      std::vector<std::size_t> cls_idx;
      for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        if (ds.samples[i].label == c) cls_idx.push_back(i);
      }
      cls_idx = shuffled(std::move(cls_idx), static_cast<std::uint64_t>(c) + 1);
      const std::size_t cut = static_cast<std::size_t>(ratio * cls_idx.size());
      train_idx.insert(train_idx.end(), cls_idx.begin(), cls_idx.begin() + cut);
      test_idx.insert(test_idx.end(), cls_idx.begin() + cut, cls_idx.end());
    }
    // Mix class blocks so batches are not class-ordered.
    train_idx = shuffled(std::move(train_idx), 0xA11);
    test_idx = shuffled(std::move(test_idx), 0xA12);
  } else {
    std::vector<std::size_t> idx(ds.samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    idx = shuffled(std::move(idx), 0);
    const std::size_t cut = static_cast<std::size_t>(ratio * idx.size());
    train_idx.assign(idx.begin(), idx.begin() + cut);
    test_idx.assign(idx.begin() + cut, idx.end());
  }

  auto take = [&](const std::vector<std::size_t>& idx) {
    Dataset out = ds;
    out.samples.clear();
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
    return out;
  };
  return {take(train_idx), take(test_idx)};
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());

  json header{
      {"chl", 1},
      {"task", task_name(ds.task)},
      {"r", ds.r},
      {"seq_len", ds.seq_len},
      {"generation", generation_name(ds.generation)},
      {"master_seed", ds.master_seed},
      {"target_width", ds.target_width},
      {"n_classes", ds.n_classes},
      {"count", ds.samples.size()},
  };
  out << header.dump() << "\n";

  for (const Sample& s : ds.samples) {
    if (static_cast<int>(s.features.size()) != ds.seq_len) {
      throw std::runtime_error("save: sample feature width disagrees with seq_len");
    }
    std::string line;
    for (double f : s.features) {
      line += format_double(f);
      line += ',';
    }
    if (ds.task == Task::classification) {
      line += std::to_string(s.label);
    } else {
      if (static_cast<int>(s.targets.size()) != ds.target_width) {
        throw std::runtime_error("save: sample target width disagrees with header");
      }
      for (std::size_t i = 0; i < s.targets.size(); ++i) {
        line += format_double(s.targets[i]);
        if (i + 1 < s.targets.size()) line += ',';
      }
    }
    out << line << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    std::size_t line, std::size_t col) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    parse_fail(path, line, "field " + std::to_string(col + 1) + ": not a number: '" + field + "'");
  }
  if (pos != field.size()) {
    parse_fail(path, line, "field " + std::to_string(col + 1) + ": trailing junk: '" + field + "'");
  }
  return v;
}

}  // namespace

Dataset load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());

  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "missing header line");

  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    parse_fail(path, 1, std::string("bad JSON header: ") + e.what());
  }

  Dataset ds;
  std::size_t count = 0;
  try {
    if (header.at("chl").get<int>() != 1) parse_fail(path, 1, "unsupported format version");
    ds.task = task_from_name(header.at("task").get<std::string>());
    ds.r = header.at("r").get<double>();
    ds.seq_len = header.at("seq_len").get<int>();
    ds.generation = generation_from_name(header.at("generation").get<std::string>());
    ds.master_seed = header.at("master_seed").get<std::uint64_t>();
    ds.target_width = header.at("target_width").get<int>();
    ds.n_classes = header.at("n_classes").get<int>();
    count = header.at("count").get<std::size_t>();
  } catch (const json::exception& e) {
    parse_fail(path, 1, std::string("bad header: ") + e.what());
  }
  if (ds.seq_len < 1) parse_fail(path, 1, "header seq_len must be >= 1");
  if (ds.target_width < 1) parse_fail(path, 1, "header target_width must be >= 1");

  const std::size_t want_fields =
      static_cast<std::size_t>(ds.seq_len) +
      (ds.task == Task::classification ? 1 : static_cast<std::size_t>(ds.target_width));

  ds.samples.reserve(count);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != want_fields) {
      parse_fail(path, line_no,
                 "expected " + std::to_string(want_fields) + " fields, got " +
                     std::to_string(fields.size()));
    }
    Sample s;
    s.features.reserve(ds.seq_len);
    for (int i = 0; i < ds.seq_len; ++i) {
      s.features.push_back(parse_double(fields[i], path, line_no, i));
    }
    if (ds.task == Task::classification) {
      const std::string& f = fields[ds.seq_len];
      try {
        std::size_t pos = 0;
        s.label = std::stoi(f, &pos);
        if (pos != f.size()) throw std::invalid_argument("junk");
      } catch (const std::exception&) {
        parse_fail(path, line_no, "bad class label: '" + f + "'");
      }
      if (s.label < 0 || s.label >= ds.n_classes) {
        parse_fail(path, line_no, "class label out of range: " + std::to_string(s.label));
      }
    } else {
      for (int i = 0; i < ds.target_width; ++i) {
        s.targets.push_back(parse_double(fields[ds.seq_len + i], path, line_no, ds.seq_len + i));
      }
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.size() != count) {
    parse_fail(path, line_no, "header count " + std::to_string(count) +
                                  " disagrees with " + std::to_string(ds.samples.size()) + " rows");
  }
  return ds;
}

}  // namespace chanlearn
