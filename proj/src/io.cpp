#include "eclipsehash/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include <json.hpp>

namespace eclipsehash {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Byte helpers
// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t at) {
  return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) |
         (std::uint32_t{buf[at + 2]} << 8) | std::uint32_t{buf[at + 3]};
}

std::uint32_t read_le32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

std::uint64_t read_le64(const std::uint8_t* p) {
  return std::uint64_t{read_le32(p)} | (std::uint64_t{read_le32(p + 4)} << 32);
}

void append_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_le64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_doubles(std::string& out, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) append_le64(out, std::bit_cast<std::uint64_t>(data[i]));
}

}  // namespace

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

Dataset gen_synthetic(std::size_t dim, std::size_t n_records, std::size_t n_queries, Seed seed) {
  if (dim == 0 || n_records == 0 || n_queries == 0) {
    throw ParameterError("gen_synthetic needs dim, records and queries >= 1");
  }
  Dataset ds;
  ds.name = "synthetic-" + std::to_string(dim) + "d-seed" + std::to_string(seed.value);
  Rng records(seed, Stream::kRecords);
  ds.records = sample_standard_normal_matrix(n_records, dim, records);
  Rng queries(seed, Stream::kQueries);
  ds.queries = sample_standard_normal_matrix(n_queries, dim, queries);
  return ds;
}

Dataset center_dataset(Dataset ds) {
  if (ds.records.rows() == 0) throw EmptyInputError("center_dataset: no records");
  const Eigen::RowVectorXd mean = ds.records.colwise().mean();
  ds.records.rowwise() -= mean;
  if (ds.queries.rows() > 0) {
    if (ds.queries.cols() != ds.records.cols()) {
      throw DimensionError("center_dataset: queries and records differ in dimension");
    }
    ds.queries.rowwise() -= mean;
  }
  return ds;
}

IdxData load_idx(const fs::path& images, const std::optional<fs::path>& labels) {
  const std::vector<std::uint8_t> buf = read_bytes(images);
  const std::string where = "idx '" + images.string() + "': ";
  if (buf.size() < 4) throw FormatError(where + "truncated magic", buf.size());
  const std::uint32_t magic = read_be32(buf, 0);
  if (magic != kIdxImageMagic) {
    std::ostringstream msg;
    msg << where << "bad magic 0x" << std::hex << magic << " (expected 0x803 for u8 images)";
    throw FormatError(msg.str(), 0);
  }
  if (buf.size() < 16) throw FormatError(where + "truncated header", buf.size());
  const std::size_t n = read_be32(buf, 4);
  const std::size_t rows = read_be32(buf, 8);
  const std::size_t cols = read_be32(buf, 12);
  const std::size_t dim = rows * cols;
  if (dim == 0) throw FormatError(where + "zero image size", 8);
  const std::size_t expected = 16 + n * dim;
  if (buf.size() < expected) {
    throw FormatError(where + "truncated: header promises " + std::to_string(n) + " images of " +
                          std::to_string(dim) + " bytes",
                      buf.size());
  }

  IdxData out;
  out.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  double* dst = out.vectors.data();
  for (std::size_t i = 0; i < n * dim; ++i) dst[i] = static_cast<double>(buf[16 + i]);

  if (labels) {
    const std::vector<std::uint8_t> lb = read_bytes(*labels);
    const std::string lwhere = "idx '" + labels->string() + "': ";
    if (lb.size() < 8) throw FormatError(lwhere + "truncated header", lb.size());
    if (read_be32(lb, 0) != kIdxLabelMagic) {
      throw FormatError(lwhere + "bad magic (expected 0x801 for labels)", 0);
    }
    const std::size_t count = read_be32(lb, 4);
    if (count != n) {
      throw FormatError(lwhere + std::to_string(count) + " labels for " + std::to_string(n) +
                            " images",
                        4);
    }
    if (lb.size() < 8 + count) throw FormatError(lwhere + "truncated labels", lb.size());
    out.labels.emplace(lb.begin() + 8, lb.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  }
  return out;
}

Matrix load_fvecs(const fs::path& path) {
  const std::vector<std::uint8_t> buf = read_bytes(path);
  const std::string where = "fvecs '" + path.string() + "': ";
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t count = 0;
  std::size_t at = 0;
  while (at < buf.size()) {
    if (buf.size() - at < 4) throw FormatError(where + "truncated dimension field", at);
    const auto raw = static_cast<std::int32_t>(read_le32(buf.data() + at));
    if (raw <= 0) throw FormatError(where + "nonpositive dimension " + std::to_string(raw), at);
    const auto this_dim = static_cast<std::size_t>(raw);
    if (count > 0 && this_dim != dim) {
      throw FormatError(where + "record " + std::to_string(count) + " has dimension " +
                            std::to_string(this_dim) + ", expected " + std::to_string(dim),
                        at);
    }
    dim = this_dim;
    at += 4;
    if (buf.size() - at < 4 * dim) {
      throw FormatError(where + "record " + std::to_string(count) + " claims " +
                            std::to_string(dim) + " floats but only " +
                            std::to_string((buf.size() - at) / 4) + " remain",
                        at);
    }
    for (std::size_t i = 0; i < dim; ++i) {
      values.push_back(static_cast<double>(std::bit_cast<float>(read_le32(buf.data() + at))));
      at += 4;
    }
    ++count;
  }
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

void save_fvecs(const fs::path& path, const Matrix& vectors) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(vectors.rows() * (vectors.cols() + 1) * 4));
  for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
    append_le32(bytes, static_cast<std::uint32_t>(vectors.cols()));
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      append_le32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(vectors(i, j))));
    }
  }
  write_bytes(path, bytes);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

Matrix load_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  const std::string where = "csv '" + path.string() + "': ";
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_commas(text);
    if (line_no == 1 && !parse_real(fields.front())) continue;  // header
    if (rows > 0 && fields.size() != dim) {
      throw FormatError(where + "line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(dim),
                        line_no);
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const auto value = parse_real(fields[f]);
      if (!value || !std::isfinite(*value)) {
        throw FormatError(where + "line " + std::to_string(line_no) + " field " +
                              std::to_string(f + 1) + " is not a finite number: '" +
                              std::string(trim(fields[f])) + "'",
                          line_no);
      }
      values.push_back(*value);
    }
    dim = fields.size();
    ++rows;
  }
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

Matrix load_vectors(const fs::path& path) {
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::uint8_t head[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char*>(head), 4);
    if (in.gcount() == 4) {
      const std::uint32_t magic = (std::uint32_t{head[0]} << 24) | (std::uint32_t{head[1]} << 16) |
                                  (std::uint32_t{head[2]} << 8) | std::uint32_t{head[3]};
      if (magic == kIdxImageMagic) return load_idx(path).vectors;
    }
  }
  const std::string ext = path.extension().string();
  if (ext == ".fvecs") return load_fvecs(path);
  if (ext == ".csv" || ext == ".txt") return load_csv(path);
  throw FormatError("cannot tell the format of '" + path.string() +
                        "' (expected idx magic, .fvecs or .csv)",
                    0);
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

namespace {

std::size_t blob_doubles(Method m, std::size_t dim, std::size_t bits) {
  switch (m) {
    case Method::kLH: return bits * dim;
    case Method::kAH: return bits * dim + bits;
    case Method::kHS: return bits * dim + bits;
    case Method::kEH: return bits * (dim + 1) + (dim + 1);
  }
  return 0;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

void save_family(const fs::path& path, const Family& family, Seed seed) {
  validate(family);
  const Method m = method_of(family);
  const std::size_t dim = input_dim(family);
  const std::size_t bits = code_bits(family);

  json header = {{"format", "eclipsehash-family"},
                 {"version", kFamilyFormatVersion},
                 {"method", std::string(method_name(m))},
                 {"N", dim},
                 {"B", bits},
                 {"c", nullptr},
                 {"d", nullptr},
                 {"seed", seed.value},
                 {"doubles", blob_doubles(m, dim, bits)}};

  std::string bytes = header.dump();
  std::string blob;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearHyperplaneFamily>) {
          append_doubles(blob, f.normals.data(), static_cast<std::size_t>(f.normals.size()));
        } else if constexpr (std::is_same_v<T, AffineHyperplaneFamily>) {
          append_doubles(blob, f.normals.data(), static_cast<std::size_t>(f.normals.size()));
          append_doubles(blob, f.offsets.data(), static_cast<std::size_t>(f.offsets.size()));
        } else if constexpr (std::is_same_v<T, HypersphereFamily>) {
          append_doubles(blob, f.centers.data(), static_cast<std::size_t>(f.centers.size()));
          append_doubles(blob, f.radii.data(), static_cast<std::size_t>(f.radii.size()));
        } else {
          header["c"] = f.common_point[f.common_point.size() - 1];
          header["d"] = f.d;
          bytes = header.dump();
          append_doubles(blob, f.normals.data(), static_cast<std::size_t>(f.normals.size()));
          append_doubles(blob, f.common_point.data(),
                         static_cast<std::size_t>(f.common_point.size()));
        }
      },
      family);
  bytes.push_back('\n');
  bytes += blob;
  write_bytes(path, bytes);
}

FamilyFile load_family(const fs::path& path) {
  const std::vector<std::uint8_t> buf = read_bytes(path);
  const std::string where = "family '" + path.string() + "': ";
  const auto newline = std::find(buf.begin(), buf.end(), std::uint8_t{'\n'});
  if (newline == buf.end()) throw FormatError(where + "missing JSON header line", 0);
  const std::size_t blob_start = static_cast<std::size_t>(newline - buf.begin()) + 1;

  json header;
  try {
    header = json::parse(buf.begin(), newline);
  } catch (const json::exception& e) {
    throw FormatError(where + "bad JSON header: " + e.what(), 0);
  }

  FamilyFile out;
  Method m{};
  std::size_t dim = 0;
  std::size_t bits = 0;
  std::size_t declared = 0;
  try {
    if (header.at("format").get<std::string>() != "eclipsehash-family") {
      throw FormatError(where + "not a family file", 0);
    }
    const int version = header.at("version").get<int>();
    if (version != kFamilyFormatVersion) {
      throw FormatError(where + "unsupported version " + std::to_string(version), 0);
    }
    m = parse_method(header.at("method").get<std::string>());
    dim = header.at("N").get<std::size_t>();
    bits = header.at("B").get<std::size_t>();
    declared = header.at("doubles").get<std::size_t>();
    out.seed = Seed{header.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw FormatError(where + "bad header field: " + e.what(), 0);
  }
  if (dim == 0 || bits == 0) throw FormatError(where + "N and B must be positive", 0);

  const std::size_t expected = blob_doubles(m, dim, bits);
  const std::size_t actual_bytes = buf.size() - blob_start;
  if (declared != expected || actual_bytes != expected * 8) {
    throw FormatError(where + "method " + std::string(method_name(m)) + " with N=" +
                          std::to_string(dim) + ", B=" + std::to_string(bits) + " needs " +
                          std::to_string(expected) + " doubles, header declares " +
                          std::to_string(declared) + " and blob holds " +
                          std::to_string(actual_bytes / 8),
                      blob_start);
  }

  const std::uint8_t* p = buf.data() + blob_start;
  auto take = [&p](double* dst, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, p += 8) {
      dst[i] = std::bit_cast<double>(read_le64(p));
    }
  };
  const auto B = static_cast<Eigen::Index>(bits);
  const auto N = static_cast<Eigen::Index>(dim);
  switch (m) {
    case Method::kLH: {
      LinearHyperplaneFamily f{Matrix(B, N)};
      take(f.normals.data(), bits * dim);
      out.family = std::move(f);
      break;
    }
    case Method::kAH: {
      AffineHyperplaneFamily f{Matrix(B, N), Vector(B)};
      take(f.normals.data(), bits * dim);
      take(f.offsets.data(), bits);
      out.family = std::move(f);
      break;
    }
    case Method::kHS: {
      HypersphereFamily f{Matrix(B, N), Vector(B)};
      take(f.centers.data(), bits * dim);
      take(f.radii.data(), bits);
      out.family = std::move(f);
      break;
    }
    case Method::kEH: {
      EclipseFamily f{Matrix(B, N + 1), Vector(N + 1), 1.0};
      take(f.normals.data(), bits * (dim + 1));
      take(f.common_point.data(), dim + 1);
      try {
        f.d = header.at("d").get<double>();
        const double c = header.at("c").get<double>();
        if (c != f.common_point[N]) {
          throw FormatError(where + "header c disagrees with the stored common point", 0);
        }
      } catch (const json::exception& e) {
        throw FormatError(where + "EH header needs numeric c and d: " + e.what(), 0);
      }
      out.family = std::move(f);
      break;
    }
  }
  try {
    validate(out.family);
  } catch (const Error& e) {
    throw FormatError(where + "invalid family: " + e.what(), blob_start);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Codes
// ---------------------------------------------------------------------------

fs::path sidecar_path(const fs::path& codes) {
  fs::path p = codes;
  p += ".json";
  return p;
}

void save_codes(const fs::path& path, const CodeSet& codes, const CodesMeta& meta) {
  if (meta.bits != codes.nbits() || meta.count != codes.size()) {
    throw DimensionError("save_codes: metadata does not match the code set");
  }
  std::string bytes;
  bytes.reserve(codes.data().size() * 8);
  for (std::uint64_t w : codes.data()) append_le64(bytes, w);
  write_bytes(path, bytes);

  json side = {{"format", "eclipsehash-codes"},
               {"version", kFamilyFormatVersion},
               {"method", std::string(method_name(meta.method))},
               {"bits", meta.bits},
               {"count", meta.count},
               {"words_per_code", words_for_bits(meta.bits)},
               {"c", optional_number(meta.c)},
               {"d", optional_number(meta.d)},
               {"seed", meta.seed ? json(*meta.seed) : json(nullptr)}};
  write_bytes(sidecar_path(path), side.dump(2) + "\n");
}

CodeSet load_codes(const fs::path& path, CodesMeta* meta_out) {
  const fs::path side_path = sidecar_path(path);
  const std::vector<std::uint8_t> side_bytes = read_bytes(side_path);
  CodesMeta meta;
  try {
    const json side = json::parse(side_bytes.begin(), side_bytes.end());
    if (side.at("format").get<std::string>() != "eclipsehash-codes") {
      throw FormatError("'" + side_path.string() + "' is not a codes sidecar", 0);
    }
    meta.method = parse_method(side.at("method").get<std::string>());
    meta.bits = side.at("bits").get<std::size_t>();
    meta.count = side.at("count").get<std::size_t>();
    if (side.contains("c") && !side["c"].is_null()) meta.c = side["c"].get<double>();
    if (side.contains("d") && !side["d"].is_null()) meta.d = side["d"].get<double>();
    if (side.contains("seed") && !side["seed"].is_null()) meta.seed = side["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError("codes sidecar '" + side_path.string() + "': " + e.what(), 0);
  }

  const std::vector<std::uint8_t> buf = read_bytes(path);
  const std::size_t words = words_for_bits(meta.bits);
  if (buf.size() != meta.count * words * 8) {
    throw FormatError("codes '" + path.string() + "': expected " +
                          std::to_string(meta.count * words * 8) + " bytes, found " +
                          std::to_string(buf.size()),
                      std::min(buf.size(), meta.count * words * 8));
  }
  CodeSet codes(meta.bits, meta.count);
  for (std::size_t i = 0; i < meta.count; ++i) {
    auto dst = codes.mutable_words(i);
    for (std::size_t w = 0; w < words; ++w) dst[w] = read_le64(buf.data() + (i * words + w) * 8);
    // Reject non-canonical padding.
    BitCode::from_words({dst.begin(), dst.end()}, meta.bits);
  }
  if (meta_out) *meta_out = meta;
  return codes;
}

}  // namespace eclipsehash
