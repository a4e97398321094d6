#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "eclipsehash/core.hpp"
#include "eclipsehash/eval.hpp"
#include "eclipsehash/hashers.hpp"
#include "eclipsehash/io.hpp"
#include "eclipsehash/search.hpp"

namespace eclipsehash::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr const char* kCsvVersionLine = "# eclipsehash v1";
constexpr const char* kRecallColumns = "method,c,d,B,k,seed,mean_recall";

// ---------------------------------------------------------------------------
// Formatting and flag parsing
// ---------------------------------------------------------------------------

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(part);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& text, const std::string& flag) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError(flag + ": '" + text + "' is not a number");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw UsageError(flag + ": '" + text + "' is not a finite number");
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& flag) {
  const double v = parse_real(text, flag);
  if (v < 1 || v != std::floor(v)) throw UsageError(flag + ": '" + text + "' is not a positive integer");
  return static_cast<std::size_t>(v);
}

/// "v1,v2,..." or "lin:lo:hi:count" or "log:lo:hi:count".
std::vector<double> parse_grid(const std::string& spec, const std::string& flag) {
  const auto parts = split(spec, ':');
  if (parts.size() == 4 && (parts[0] == "lin" || parts[0] == "log")) {
    const double lo = parse_real(parts[1], flag);
    const double hi = parse_real(parts[2], flag);
    const std::size_t count = parse_count(parts[3], flag);
    if (!(hi > lo) || count < 2) throw UsageError(flag + ": ranges need lo < hi and count >= 2");
    if (parts[0] == "log") {
      if (!(lo > 0)) throw UsageError(flag + ": log ranges need lo > 0");
      return log_space(lo, hi, count);
    }
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = i + 1 == count ? hi : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    }
    return out;
  }
  if (parts.size() != 1) throw UsageError(flag + ": expected 'v1,v2,...', 'lin:lo:hi:n' or 'log:lo:hi:n'");
  std::vector<double> out;
  for (const auto& field : split(spec, ',')) out.push_back(parse_real(field, flag));
  if (out.empty()) throw UsageError(flag + ": empty grid");
  return out;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const auto& name : split(list, ',')) {
    try {
      const Method m = parse_method(name);
      if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    } catch (const Error&) {
      throw UsageError("--methods: unknown method '" + name + "' (expected lh, ah, hs, eh)");
    }
  }
  if (out.empty()) throw UsageError("--methods: no methods given");
  return out;
}

Method method_flag(const std::string& name) {
  try {
    return parse_method(name);
  } catch (const Error&) {
    throw UsageError("--method: unknown method '" + name + "' (expected lh, ah, hs, eh)");
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Datasets from flags
// ---------------------------------------------------------------------------

struct DataFlags {
  std::string records;
  std::string queries;
  bool synthetic = false;
  std::size_t dim = kSyntheticDim;
  std::size_t n_records = kSyntheticRecords;
  std::size_t n_queries = kSyntheticQueries;
  bool center = false;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--records", f.records, "Record vectors (idx, .fvecs or .csv)");
  cmd->add_option("--queries", f.queries, "Query vectors (idx, .fvecs or .csv)");
  cmd->add_flag("--synthetic", f.synthetic, "Generate standard normal data from --seed");
  cmd->add_option("--dim", f.dim, "Synthetic dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--n-records", f.n_records, "Synthetic record count")->check(CLI::PositiveNumber);
  cmd->add_option("--n-queries", f.n_queries, "Synthetic query count")->check(CLI::PositiveNumber);
  cmd->add_flag("--center", f.center, "Subtract the record mean from records and queries");
}

Dataset load_dataset(const DataFlags& f, std::optional<std::uint64_t> seed, bool need_queries) {
  Dataset ds;
  if (f.synthetic) {
    if (!f.records.empty() || !f.queries.empty()) {
      throw UsageError("--synthetic cannot be combined with --records/--queries");
    }
    if (!seed) throw UsageError("--synthetic needs --seed");
    ds = gen_synthetic(f.dim, f.n_records, f.n_queries, Seed{*seed});
  } else {
    if (f.records.empty()) throw UsageError("give --records (and --queries) or --synthetic");
    if (need_queries && f.queries.empty()) throw UsageError("--queries is required");
    ds.name = fs::path(f.records).filename().string();
    ds.records = load_vectors(f.records);
    if (!f.queries.empty()) ds.queries = load_vectors(f.queries);
    if (ds.records.rows() == 0) throw EmptyInputError("'" + f.records + "' holds no vectors");
    if (need_queries && ds.queries.rows() == 0) {
      throw EmptyInputError("'" + f.queries + "' holds no vectors");
    }
    if (ds.queries.rows() > 0 && ds.queries.cols() != ds.records.cols()) {
      throw DimensionError("records have dimension " + std::to_string(ds.records.cols()) +
                           ", queries " + std::to_string(ds.queries.cols()));
    }
  }
  if (f.center) ds = center_dataset(std::move(ds));
  return ds;
}

std::size_t resolve_k(std::optional<std::size_t> k, std::optional<double> percent,
                      std::size_t record_count) {
  if (k && percent) throw UsageError("--k and --k-percent are mutually exclusive");
  if (k) {
    if (*k == 0) throw UsageError("--k must be at least 1");
    return *k;
  }
  if (percent) {
    if (!(*percent > 0.0 && *percent <= 100.0)) throw UsageError("--k-percent must lie in (0, 100]");
    const double raw = *percent * static_cast<double>(record_count) / 100.0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw)));
  }
  return default_k(record_count);
}

/// The exact d_* does not depend on the grid; any d above every norm will do.
double exact_d_star(const Dataset& ds) {
  const auto norms = record_norms(ds);
  const double top = *std::max_element(norms.begin(), norms.end());
  const double grid[] = {2.0 * top + 1.0};
  return d_star(ds, grid).value;
}

std::string csv_row(const RecallResult& r) {
  std::ostringstream row;
  row << method_name(r.method) << ',' << (r.c ? exact(*r.c) : "") << ','
      << (r.d ? exact(*r.d) : "") << ',' << r.bits << ',' << r.k << ',' << r.seed.value << ','
      << fixed(r.mean_recall, 8);
  return row.str();
}

json json_row(const RecallResult& r) {
  return {{"method", std::string(method_name(r.method))},
          {"c", r.c ? json(*r.c) : json(nullptr)},
          {"d", r.d ? json(*r.d) : json(nullptr)},
          {"B", r.bits},
          {"k", r.k},
          {"seed", r.seed.value},
          {"mean_recall", r.mean_recall}};
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenFlags {
  std::size_t dim = kSyntheticDim;
  std::size_t records = kSyntheticRecords;
  std::size_t queries = kSyntheticQueries;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
  const Dataset ds = gen_synthetic(f.dim, f.records, f.queries, Seed{f.seed});
  const std::string records_path = f.out + ".records.fvecs";
  const std::string queries_path = f.out + ".queries.fvecs";
  save_fvecs(records_path, ds.records);
  save_fvecs(queries_path, ds.queries);
  out << "wrote " << f.records << " records to " << records_path << " and " << f.queries
      << " queries to " << queries_path << " (dim " << f.dim << ", seed " << f.seed << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// hash
// ---------------------------------------------------------------------------

struct HashFlags {
  std::string method;
  std::optional<std::size_t> bits;
  std::optional<double> c;
  std::optional<double> d;
  std::string data;
  std::string family;
  std::optional<std::uint64_t> seed;
  std::string family_out;
  std::string codes_out;
  std::string center_from;
};

int cmd_hash(const HashFlags& f, unsigned threads, std::ostream& out) {
  if (f.family.empty() == !f.seed.has_value()) {
    throw UsageError("give exactly one of --family (load) or --seed (sample)");
  }
  Matrix data = load_vectors(f.data);
  if (data.rows() == 0) throw EmptyInputError("'" + f.data + "' holds no vectors");

  Family family;
  Seed seed;
  if (!f.family.empty()) {
    if (f.bits || f.c || f.d) throw UsageError("--bits/--c/--d cannot override a loaded --family");
    FamilyFile loaded = load_family(f.family);
    if (!f.method.empty() && method_flag(f.method) != method_of(loaded.family)) {
      throw UsageError("--method " + f.method + " disagrees with the loaded family (" +
                       std::string(method_name(method_of(loaded.family))) + ")");
    }
    family = std::move(loaded.family);
    seed = loaded.seed;
  } else {
    if (f.method.empty()) throw UsageError("--method is required when sampling a family");
    const Method m = method_flag(f.method);
    if (m != Method::kEH && (f.c || f.d)) throw UsageError("--c and --d apply only to --method eh");
    const double c = f.c.value_or(0.0);
    const double d = f.d.value_or(1.0);
    if (!(c >= -1.0 && c <= 1.0)) throw UsageError("--c must lie in [-1, 1]");
    if (!(d > 0.0)) throw UsageError("--d must be positive");
    seed = Seed{*f.seed};
    family = sample_family(m, static_cast<std::size_t>(data.cols()), f.bits.value_or(1024), seed,
                           c, d);
  }
  if (!f.center_from.empty()) {
    Dataset ref;
    ref.records = load_vectors(f.center_from);
    if (ref.records.rows() == 0) throw EmptyInputError("'" + f.center_from + "' holds no vectors");
    if (ref.records.cols() != data.cols()) {
      throw DimensionError("--center-from has dimension " + std::to_string(ref.records.cols()) +
                           ", data " + std::to_string(data.cols()));
    }
    data.rowwise() -= ref.records.colwise().mean();
  }
  if (static_cast<std::size_t>(data.cols()) != input_dim(family)) {
    throw DimensionError("family expects dimension " + std::to_string(input_dim(family)) +
                         ", data has " + std::to_string(data.cols()));
  }

  const CodeSet codes = batch_hash(family, data, threads);
  CodesMeta meta;
  meta.method = method_of(family);
  meta.bits = code_bits(family);
  meta.count = codes.size();
  meta.seed = seed.value;
  if (const auto* eh = std::get_if<EclipseFamily>(&family)) {
    meta.c = eh->common_point[eh->common_point.size() - 1];
    meta.d = eh->d;
  }
  save_codes(f.codes_out, codes, meta);
  if (!f.family_out.empty()) save_family(f.family_out, family, seed);

  out << "hashed " << codes.size() << " vectors with " << method_name(meta.method)
      << " (B=" << meta.bits << ", N=" << input_dim(family) << ", seed=" << seed.value;
  if (meta.c) out << ", c=" << short_num(*meta.c) << ", d=" << short_num(*meta.d);
  out << ") -> " << f.codes_out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalFlags {
  std::string record_codes;
  std::string query_codes;
  DataFlags data;
  std::optional<std::size_t> k;
  std::optional<double> k_percent;
  std::string out;
  std::string format = "csv";
};

int cmd_eval(const EvalFlags& f, unsigned threads, std::ostream& out) {
  if (f.data.synthetic) throw UsageError("eval takes --records and --queries files");
  CodesMeta rmeta;
  CodesMeta qmeta;
  const CodeSet rcodes = load_codes(f.record_codes, &rmeta);
  const CodeSet qcodes = load_codes(f.query_codes, &qmeta);
  if (rmeta.method != qmeta.method || rmeta.bits != qmeta.bits || rmeta.seed != qmeta.seed ||
      rmeta.c != qmeta.c || rmeta.d != qmeta.d) {
    throw FormatError("record and query codes come from different families", 0);
  }
  const Dataset ds = load_dataset(f.data, std::nullopt, true);
  if (rcodes.size() != ds.record_count() || qcodes.size() != ds.query_count()) {
    throw DimensionError("codes cover " + std::to_string(rcodes.size()) + " records and " +
                         std::to_string(qcodes.size()) + " queries, data has " +
                         std::to_string(ds.record_count()) + " and " +
                         std::to_string(ds.query_count()));
  }
  const std::size_t k = resolve_k(f.k, f.k_percent, ds.record_count());
  const auto truth = knn_l2_all(ds.records, ds.queries, k, threads);

  RecallResult r;
  r.method = rmeta.method;
  r.bits = rmeta.bits;
  r.k = k;
  r.c = rmeta.c;
  r.d = rmeta.d;
  r.seed = Seed{rmeta.seed.value_or(0)};
  r.mean_recall = mean_recall(truth, rcodes, qcodes, k, threads);

  if (!f.out.empty()) {
    auto file = open_output(f.out);
    if (f.format == "json") {
      json doc = json_row(r);
      doc["format"] = "eclipsehash v1";
      file << doc.dump(2) << '\n';
    } else {
      file << kCsvVersionLine << '\n' << kRecallColumns << '\n' << csv_row(r) << '\n';
    }
    finish_output(file, f.out);
  }
  out << "mean recall " << fixed(r.mean_recall) << " (" << method_name(r.method) << ", B=" << r.bits
      << ", k=" << k << ", seed=" << r.seed.value << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepFlags {
  DataFlags data;
  std::string methods = "lh,ah,hs,eh";
  std::string c_grid;
  std::string d_grid;
  std::size_t bits = 1024;
  std::optional<std::size_t> k;
  std::optional<double> k_percent;
  std::uint64_t seed = 0;
  std::string out;
  std::string json_out;
};

int cmd_sweep(const SweepFlags& f, unsigned threads, std::ostream& out) {
  const auto methods = parse_methods(f.methods);
  const Dataset ds = load_dataset(f.data, f.seed, true);
  ds.validate();
  const std::size_t k = resolve_k(f.k, f.k_percent, ds.record_count());

  std::vector<Method> baselines;
  for (Method m : methods) {
    if (m != Method::kEH) baselines.push_back(m);
  }
  const bool with_eh = baselines.size() != methods.size();

  SweepGrid grid = SweepGrid::defaults(ds);
  if (!f.c_grid.empty()) grid.c_values = parse_grid(f.c_grid, "--c-grid");
  if (!f.d_grid.empty()) grid.d_values = parse_grid(f.d_grid, "--d-grid");
  try {
    grid.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }

  const RecallEvaluator evaluator(ds, k, threads);
  SweepResult result;
  if (with_eh) {
    result = sweep(evaluator, grid, f.bits, Seed{f.seed}, baselines);
  } else {
    for (Method m : baselines) {
      RecallResult r;
      r.method = m;
      r.bits = f.bits;
      r.k = k;
      r.seed = Seed{f.seed};
      r.mean_recall = evaluator.evaluate(sample_family(m, ds.dim(), f.bits, Seed{f.seed}));
      result.baselines.push_back(r);
    }
  }

  auto file = open_output(f.out);
  file << kCsvVersionLine << '\n'
       << "# dataset=" << ds.name << " records=" << ds.record_count()
       << " queries=" << ds.query_count() << " dim=" << ds.dim() << '\n'
       << kRecallColumns << '\n';
  for (const auto& r : result.baselines) file << csv_row(r) << '\n';
  for (const auto& r : result.eclipse) file << csv_row(r) << '\n';
  if (with_eh) {
    file << "# optimum\n"
         << "c_opt,d_opt,mean_recall\n"
         << exact(result.c_opt) << ',' << exact(result.d_opt) << ','
         << fixed(result.best_recall, 8) << '\n';
  }
  finish_output(file, f.out);

  if (!f.json_out.empty()) {
    json doc = {{"format", "eclipsehash v1"},
                {"dataset", ds.name},
                {"seed", f.seed},
                {"rows", json::array()}};
    for (const auto& r : result.baselines) doc["rows"].push_back(json_row(r));
    for (const auto& r : result.eclipse) doc["rows"].push_back(json_row(r));
    if (with_eh) {
      doc["optimum"] = {{"c_opt", result.c_opt},
                        {"d_opt", result.d_opt},
                        {"mean_recall", result.best_recall}};
    }
    auto jf = open_output(f.json_out);
    jf << doc.dump(2) << '\n';
    finish_output(jf, f.json_out);
  }

  out << "dataset " << ds.name << ": " << ds.record_count() << " records, " << ds.query_count()
      << " queries, dim " << ds.dim() << ", B=" << f.bits << ", k=" << k << ", seed=" << f.seed
      << '\n';
  for (const auto& r : result.baselines) {
    out << "  " << method_name(r.method) << "  mean recall " << fixed(r.mean_recall) << '\n';
  }
  if (with_eh) {
    const double ds_star = exact_d_star(ds);
    out << "  eh  best mean recall " << fixed(result.best_recall) << " at c_opt="
        << short_num(result.c_opt) << ", d_opt=" << short_num(result.d_opt) << '\n'
        << "  d_star " << short_num(ds_star) << "  d_opt " << short_num(result.d_opt)
        << "  d_opt/d_star " << short_num(result.d_opt / ds_star) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ratio
// ---------------------------------------------------------------------------

struct RatioFlags {
  DataFlags data;
  std::string d_grid;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_ratio(const RatioFlags& f, std::ostream& out) {
  const Dataset ds = load_dataset(f.data, f.seed, false);
  std::vector<double> grid =
      f.d_grid.empty() ? SweepGrid::defaults(ds).d_values : parse_grid(f.d_grid, "--d-grid");
  for (double d : grid) {
    if (!(d > 0.0)) throw UsageError("--d-grid values must be positive");
  }
  const double ds_star = exact_d_star(ds);

  auto file = open_output(f.out);
  file << kCsvVersionLine << '\n' << "# dataset=" << ds.name << " records=" << ds.record_count();
  if (f.seed) file << " seed=" << *f.seed;
  file << " d_star=" << exact(ds_star) << '\n' << "d,ratio\n";
  for (double d : grid) file << exact(d) << ',' << fixed(ratio(ds, d), 8) << '\n';
  finish_output(file, f.out);

  out << "dataset " << ds.name << ": d_star " << short_num(ds_star) << " (median norm "
      << short_num(median_norm(ds)) << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchFlags {
  std::string methods = "lh,ah,hs,eh";
  std::string bits_list = "64,128,256,512,1024";
  std::size_t repeats = 5;
  std::size_t dim = kSyntheticDim;
  std::size_t vectors = kSyntheticRecords;
  std::string data;
  double c = 0.0;
  double d = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_bench(const BenchFlags& f, std::ostream& out) {
  const auto methods = parse_methods(f.methods);
  std::vector<std::size_t> bits_list;
  for (const auto& field : split(f.bits_list, ',')) bits_list.push_back(parse_count(field, "--bits-list"));
  if (f.repeats < 3) throw UsageError("--repeats must be at least 3");
  if (!(f.c >= -1.0 && f.c <= 1.0)) throw UsageError("--c must lie in [-1, 1]");
  if (!(f.d > 0.0)) throw UsageError("--d must be positive");

  Matrix data;
  if (f.data.empty()) {
    data = gen_synthetic(f.dim, f.vectors, 1, Seed{f.seed}).records;
  } else {
    data = load_vectors(f.data);
    if (data.rows() == 0) throw EmptyInputError("'" + f.data + "' holds no vectors");
  }
  const auto dim = static_cast<std::size_t>(data.cols());

  auto file = open_output(f.out);
  file << kCsvVersionLine << '\n'
       << "# seed=" << f.seed << " repeats=" << f.repeats << " c=" << exact(f.c)
       << " d=" << exact(f.d) << '\n'
       << "method,B,N,vectors,elapsed_seconds,per_vector_seconds\n";
  for (std::size_t bits : bits_list) {
    for (Method m : methods) {
      const Family family = sample_family(m, dim, bits, Seed{f.seed}, f.c, f.d);
      const TimingResult t = bench_hash(family, data, f.repeats);
      file << method_name(m) << ',' << bits << ',' << dim << ',' << t.vectors << ','
           << exact(t.elapsed) << ',' << exact(t.per_vector) << '\n';
      out << method_name(m) << "  B=" << bits << "  " << short_num(t.per_vector * 1e6)
          << " us/vector\n";
    }
  }
  finish_output(file, f.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// connectivity
// ---------------------------------------------------------------------------

struct ConnectivityFlags {
  std::string method;
  std::string family;
  std::vector<std::string> spheres;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> bits;
  std::optional<std::uint64_t> seed;
  std::optional<double> c;
  std::optional<double> d;
  std::string box;
  std::size_t resolution = 512;
  bool euclidean = false;
  std::string out;
};

HypersphereFamily family_from_spheres(const std::vector<std::string>& specs) {
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;
  for (const auto& spec : specs) {
    const auto parts = split(spec, ':');
    if (parts.size() != 2) throw UsageError("--sphere expects 'cx[,cy[,cz]]:r', got '" + spec + "'");
    std::vector<double> center;
    for (const auto& v : split(parts[0], ',')) center.push_back(parse_real(v, "--sphere"));
    const double r = parse_real(parts[1], "--sphere");
    if (!(r > 0.0)) throw UsageError("--sphere radius must be positive");
    if (!centers.empty() && center.size() != centers.front().size()) {
      throw UsageError("--sphere centers must all have the same dimension");
    }
    centers.push_back(std::move(center));
    radii.push_back(r);
  }
  HypersphereFamily f{Matrix(static_cast<Eigen::Index>(centers.size()),
                             static_cast<Eigen::Index>(centers.front().size())),
                      Vector(static_cast<Eigen::Index>(radii.size()))};
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (std::size_t a = 0; a < centers[k].size(); ++a) {
      f.centers(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = centers[k][a];
    }
    f.radii[static_cast<Eigen::Index>(k)] = radii[k];
  }
  return f;
}

Box parse_box(const std::string& spec, std::size_t dim) {
  std::vector<double> v;
  for (const auto& field : split(spec, ',')) v.push_back(parse_real(field, "--box"));
  Box box;
  if (v.size() == 2) {
    box.lo.assign(dim, v[0]);
    box.hi.assign(dim, v[1]);
  } else if (v.size() == 2 * dim) {
    for (std::size_t a = 0; a < dim; ++a) {
      box.lo.push_back(v[2 * a]);
      box.hi.push_back(v[2 * a + 1]);
    }
  } else {
    throw UsageError("--box expects 'lo,hi' or one 'lo,hi' pair per axis");
  }
  for (std::size_t a = 0; a < dim; ++a) {
    if (!(box.hi[a] > box.lo[a])) throw UsageError("--box needs lo < hi on every axis");
  }
  return box;
}

int cmd_connectivity(const ConnectivityFlags& f, std::ostream& out) {
  const Method m = method_flag(f.method);
  if (m != Method::kHS && m != Method::kEH) throw UsageError("--method must be hs or eh");
  if (m != Method::kEH && (f.c || f.d)) throw UsageError("--c and --d apply only to --method eh");
  if (f.resolution < 64) throw UsageError("--resolution must be at least 64");

  const int sources = (!f.family.empty() ? 1 : 0) + (!f.spheres.empty() ? 1 : 0) + (f.seed ? 1 : 0);
  if (sources != 1) throw UsageError("give exactly one of --family, --sphere or --seed");
  if (!f.spheres.empty() && m != Method::kHS) throw UsageError("--sphere applies only to --method hs");

  Family family;
  std::optional<std::uint64_t> seed = f.seed;
  if (!f.family.empty()) {
    FamilyFile loaded = load_family(f.family);
    if (method_of(loaded.family) != m) {
      throw UsageError("--method " + f.method + " disagrees with the loaded family");
    }
    family = std::move(loaded.family);
    seed = loaded.seed.value;
  } else if (!f.spheres.empty()) {
    family = family_from_spheres(f.spheres);
  } else {
    const std::size_t dim = f.dim.value_or(2);
    if (dim < 1 || dim > 3) throw UsageError("--dim must be 1, 2 or 3");
    const double c = f.c.value_or(0.0);
    const double d = f.d.value_or(1.0);
    if (!(c >= -1.0 && c <= 1.0)) throw UsageError("--c must lie in [-1, 1]");
    if (!(d > 0.0)) throw UsageError("--d must be positive");
    family = sample_family(m, dim, f.bits.value_or(4), Seed{*f.seed}, c, d);
  }
  const std::size_t dim = input_dim(family);
  if (f.dim && *f.dim != dim) throw UsageError("--dim disagrees with the family dimension");
  if (dim > 3) {
    throw UnsupportedDimensionError("connectivity needs N in {1, 2, 3}, family has N=" +
                                    std::to_string(dim));
  }

  Box box;
  if (!f.box.empty()) {
    box = parse_box(f.box, dim);
  } else if (const auto* hs = std::get_if<HypersphereFamily>(&family)) {
    box = enclosing_box(*hs);
  } else {
    box = enclosing_box(std::get<EclipseFamily>(family));
  }

  ConnectivityOptions options;
  options.join_through_infinity = !f.euclidean;
  const ConnectivityReport report = connectivity_check(family, box, f.resolution, options);

  if (!f.out.empty()) {
    json doc = {{"format", "eclipsehash v1"},
                {"method", std::string(method_name(m))},
                {"N", dim},
                {"B", code_bits(family)},
                {"seed", seed ? json(*seed) : json(nullptr)},
                {"resolution", f.resolution},
                {"box", {{"lo", box.lo}, {"hi", box.hi}}},
                {"join_through_infinity", options.join_through_infinity},
                {"cells", report.cells},
                {"components", report.components},
                {"max_components", report.max_components()},
                {"connected", report.all_connected()}};
    if (const auto* eh = std::get_if<EclipseFamily>(&family)) {
      doc["c"] = eh->common_point[eh->common_point.size() - 1];
      doc["d"] = eh->d;
    }
    auto file = open_output(f.out);
    file << doc.dump(2) << '\n';
    finish_output(file, f.out);
  }

  out << method_name(m) << " N=" << dim << " B=" << code_bits(family) << ": "
      << report.components.size() << " codes, max " << report.max_components()
      << " component(s) per code\n";
  for (const auto& [code, count] : report.components) {
    if (count > 1) out << "  code " << code << ": " << count << " components\n";
  }
  if (m == Method::kEH && !report.all_connected()) {
    throw InvariantViolation("an EH code region is disconnected");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Binary hashing toolkit: LH, AH, HS and Eclipse hashing with recall, ratio, "
               "timing and connectivity harnesses",
               "eclipsehash"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic standard normal dataset as fvecs");
  gen_cmd->add_option("--dim", gen.dim, "Dimension")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--records", gen.records, "Record count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--queries", gen.queries, "Query count")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->required();
  gen_cmd->add_option("--out", gen.out, "Output prefix (<out>.records.fvecs, <out>.queries.fvecs)")
      ->required();

  HashFlags hash_f;
  auto* hash_cmd = app.add_subcommand("hash", "Hash vectors with a sampled or saved family");
  hash_cmd->add_option("--method", hash_f.method, "lh, ah, hs or eh");
  hash_cmd->add_option("--bits", hash_f.bits, "Code length B (default 1024)")->check(CLI::PositiveNumber);
  hash_cmd->add_option("--c", hash_f.c, "EH common point height in [-1, 1] (default 0)");
  hash_cmd->add_option("--d", hash_f.d, "EH projection scale d > 0 (default 1)");
  hash_cmd->add_option("--data", hash_f.data, "Vectors to hash")->required();
  hash_cmd->add_option("--family", hash_f.family, "Load the family from this file");
  hash_cmd->add_option("--seed", hash_f.seed, "Sample the family from this seed");
  hash_cmd->add_option("--family-out", hash_f.family_out, "Save the family here");
  hash_cmd->add_option("--codes-out", hash_f.codes_out, "Codes file (sidecar at <path>.json)")
      ->required();
  hash_cmd->add_option("--center-from", hash_f.center_from,
                       "Subtract the mean of these vectors before hashing");

  EvalFlags eval_f;
  auto* eval_cmd = app.add_subcommand("eval", "Mean recall of Hamming k-NN against exact L2 k-NN");
  eval_cmd->add_option("--record-codes", eval_f.record_codes, "Codes of the records")->required();
  eval_cmd->add_option("--query-codes", eval_f.query_codes, "Codes of the queries")->required();
  add_data_flags(eval_cmd, eval_f.data);
  eval_cmd->add_option("--k", eval_f.k, "Neighbors per query");
  eval_cmd->add_option("--k-percent", eval_f.k_percent, "k as a percentage of the record count");
  eval_cmd->add_option("--out", eval_f.out, "Result file");
  eval_cmd->add_option("--format", eval_f.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  SweepFlags sweep_f;
  auto* sweep_cmd = app.add_subcommand("sweep", "EH recall over a (c, d) grid plus baselines");
  add_data_flags(sweep_cmd, sweep_f.data);
  sweep_cmd->add_option("--methods", sweep_f.methods, "Comma-separated methods");
  sweep_cmd->add_option("--c-grid", sweep_f.c_grid, "c values: 'v1,v2,...' or 'lin:lo:hi:n'");
  sweep_cmd->add_option("--d-grid", sweep_f.d_grid,
                        "d values: 'v1,v2,...', 'lin:lo:hi:n' or 'log:lo:hi:n'");
  sweep_cmd->add_option("--bits", sweep_f.bits, "Code length B")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--k", sweep_f.k, "Neighbors per query");
  sweep_cmd->add_option("--k-percent", sweep_f.k_percent, "k as a percentage of the record count");
  sweep_cmd->add_option("--seed", sweep_f.seed, "Random seed")->required();
  sweep_cmd->add_option("--out", sweep_f.out, "CSV output")->required();
  sweep_cmd->add_option("--json-out", sweep_f.json_out, "Optional JSON output");

  RatioFlags ratio_f;
  auto* ratio_cmd = app.add_subcommand("ratio", "Ratio(d) curve and d_star");
  add_data_flags(ratio_cmd, ratio_f.data);
  ratio_cmd->add_option("--d-grid", ratio_f.d_grid,
                        "d values: 'v1,v2,...', 'lin:lo:hi:n' or 'log:lo:hi:n'");
  ratio_cmd->add_option("--seed", ratio_f.seed, "Seed for --synthetic");
  ratio_cmd->add_option("--out", ratio_f.out, "CSV output")->required();

  BenchFlags bench_f;
  auto* bench_cmd = app.add_subcommand("bench", "Single-threaded hashing time per vector");
  bench_cmd->add_option("--methods", bench_f.methods, "Comma-separated methods");
  bench_cmd->add_option("--bits-list", bench_f.bits_list, "Comma-separated code lengths");
  bench_cmd->add_option("--repeats", bench_f.repeats, "Timed passes (>= 3)");
  bench_cmd->add_option("--dim", bench_f.dim, "Synthetic dimension")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--vectors", bench_f.vectors, "Synthetic vector count")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--data", bench_f.data, "Vectors to hash instead of synthetic data");
  bench_cmd->add_option("--c", bench_f.c, "EH c");
  bench_cmd->add_option("--d", bench_f.d, "EH d");
  bench_cmd->add_option("--seed", bench_f.seed, "Random seed")->required();
  bench_cmd->add_option("--out", bench_f.out, "CSV output")->required();

  ConnectivityFlags conn_f;
  auto* conn_cmd = app.add_subcommand("connectivity", "Count connected components per code region");
  conn_cmd->add_option("--method", conn_f.method, "hs or eh")->required();
  conn_cmd->add_option("--family", conn_f.family, "Load the family from this file");
  conn_cmd->add_option("--sphere", conn_f.spheres, "HS sphere 'cx[,cy[,cz]]:r' (repeatable)");
  conn_cmd->add_option("--dim", conn_f.dim, "Dimension of a sampled family (1, 2 or 3)");
  conn_cmd->add_option("--bits", conn_f.bits, "Bits of a sampled family (default 4)")
      ->check(CLI::PositiveNumber);
  conn_cmd->add_option("--seed", conn_f.seed, "Sample the family from this seed");
  conn_cmd->add_option("--c", conn_f.c, "EH c (default 0)");
  conn_cmd->add_option("--d", conn_f.d, "EH d (default 1)");
  conn_cmd->add_option("--box", conn_f.box, "'lo,hi' for every axis or 'lo0,hi0,lo1,hi1,...'");
  conn_cmd->add_option("--resolution", conn_f.resolution, "Cells per axis (>= 64)");
  conn_cmd->add_flag("--euclidean", conn_f.euclidean,
                     "Do not join boundary cells through the point at infinity");
  conn_cmd->add_option("--out", conn_f.out, "JSON output");

  std::vector<const char*> argv{"eclipsehash"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      err << sub->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  const unsigned workers = resolve_threads(threads);
  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (hash_cmd->parsed()) return cmd_hash(hash_f, workers, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_f, workers, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_f, workers, out);
    if (ratio_cmd->parsed()) return cmd_ratio(ratio_f, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_f, out);
    if (conn_cmd->parsed()) return cmd_connectivity(conn_f, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << " (at " << e.location() << ")\n";
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace eclipsehash::cli
