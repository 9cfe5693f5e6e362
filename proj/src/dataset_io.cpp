#include "lstmkf/dataset_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace lstmkf {

namespace {

constexpr const char* kMagic = "lstmkf-dataset 1";

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json metadata_json(const TrajectoryDataset& ds) {
  nlohmann::json j;
  j["generator"] = ds.meta.generator;
  j["params"] = ds.meta.params;
  j["seed"] = ds.meta.seed;
  j["dt"] = ds.meta.dt;
  j["dim"] = ds.dim();
  j["sequences"] = ds.sequences.size();
  j["bursts"] = {{"starts", ds.meta.bursts.starts}, {"ends", ds.meta.bursts.ends}, {"scale", ds.meta.bursts.scale}};
  j["burst_seed"] = ds.meta.burst_seed;
  return j;
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::string next(const char* expecting) {
    std::string line;
    if (!std::getline(is_, line)) throw ParseError(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }
  std::size_t line() const { return line_; }

 private:
  std::istream& is_;
  std::size_t line_ = 0;
};

double parse_real(const std::string& text, std::size_t line) {
  if (text.empty()) throw ParseError(line, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE) throw ParseError(line, "invalid number '" + text + "'");
  return v;
}

}  // namespace

void write_dataset(std::ostream& os, const TrajectoryDataset& dataset) {
  const std::size_t d = dataset.dim();
  os << kMagic << '\n' << metadata_json(dataset).dump() << '\n';
  for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
    const SequencePair& s = dataset.sequences[i];
    os << "sequence " << i << ' ' << s.length() << '\n';
    os << 't';
    for (std::size_t k = 1; k <= d; ++k) os << ",y_" << k;
    for (std::size_t k = 1; k <= d; ++k) os << ",z_" << k;
    os << '\n';
    for (std::size_t t = 0; t < s.length(); ++t) {
      os << t;
      for (std::size_t k = 0; k < d; ++k) os << ',' << format_real(s.truth(t, k));
      for (std::size_t k = 0; k < d; ++k) os << ',' << format_real(s.measurements(t, k));
      os << '\n';
    }
  }
  os << "end\n";
}

TrajectoryDataset read_dataset(std::istream& is) {
  LineReader reader(is);
  if (reader.next("header") != kMagic) throw ParseError(reader.line(), "missing 'lstmkf-dataset 1' header");

  TrajectoryDataset ds;
  std::size_t dim = 0;
  std::size_t count = 0;
  try {
    const auto j = nlohmann::json::parse(reader.next("metadata"));
    ds.meta.generator = j.at("generator").get<std::string>();
    ds.meta.params = j.at("params").get<std::map<std::string, double>>();
    ds.meta.seed = j.at("seed").get<std::uint64_t>();
    ds.meta.dt = j.at("dt").get<double>();
    dim = j.at("dim").get<std::size_t>();
    count = j.at("sequences").get<std::size_t>();
    const auto& b = j.at("bursts");
    ds.meta.bursts.starts = b.at("starts").get<std::vector<std::size_t>>();
    ds.meta.bursts.ends = b.at("ends").get<std::vector<std::size_t>>();
    ds.meta.bursts.scale = b.at("scale").get<double>();
    ds.meta.burst_seed = j.at("burst_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(reader.line(), std::string("bad metadata: ") + e.what());
  }

  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream head(reader.next("sequence header"));
    std::string word;
    std::size_t index = 0;
    std::size_t length = 0;
    if (!(head >> word >> index >> length) || word != "sequence" || index != i) {
      throw ParseError(reader.line(), "expected 'sequence " + std::to_string(i) + " <length>'");
    }
    reader.next("column header");
    SequencePair pair{Matrix(length, dim), Matrix(length, dim)};
    for (std::size_t t = 0; t < length; ++t) {
      const std::string line = reader.next("data row");
      std::vector<std::string> fields;
      std::size_t pos = 0;
      while (true) {
        const std::size_t comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (fields.size() != 1 + 2 * dim) {
        throw ParseError(reader.line(), "expected " + std::to_string(1 + 2 * dim) + " fields, found " +
                                            std::to_string(fields.size()));
      }
      if (parse_real(fields[0], reader.line()) != static_cast<double>(t)) {
        throw ParseError(reader.line(), "expected time index " + std::to_string(t));
      }
      for (std::size_t k = 0; k < dim; ++k) {
        pair.truth(t, k) = parse_real(fields[1 + k], reader.line());
        pair.measurements(t, k) = parse_real(fields[1 + dim + k], reader.line());
      }
    }
    ds.sequences.push_back(std::move(pair));
  }
  if (reader.next("'end'") != "end") throw ParseError(reader.line(), "expected 'end'");
  return ds;
}

void save_dataset(const TrajectoryDataset& dataset, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(os, dataset);
  if (!os) throw std::runtime_error("failed writing " + path);
}

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_dataset(is);
}

}  // namespace lstmkf
