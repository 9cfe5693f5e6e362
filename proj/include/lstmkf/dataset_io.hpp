#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "lstmkf/synth.hpp"

namespace lstmkf {

/// Malformed dataset file. line() is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/**
 * Plain-text dataset container:
 *
 *   lstmkf-dataset 1
 *   {"generator":...,"params":{...},"seed":...,"dt":...,"dim":d,"sequences":N,
 *    "bursts":{"starts":[...],"ends":[...],"scale":s},"burst_seed":...}
 *   sequence 0 <T>
 *   t,y_1,...,y_d,z_1,...,z_d
 *   0,<17 significant digits>,...
 *   ...
 *   sequence 1 <T>
 *   ...
 *   end
 *
 * Reals are written with %.17g, which reads back bit-identically.
 */
void write_dataset(std::ostream& os, const TrajectoryDataset& dataset);
TrajectoryDataset read_dataset(std::istream& is);

void save_dataset(const TrajectoryDataset& dataset, const std::string& path);
/// Throws ParseError on malformed or truncated input; nothing partial is returned.
TrajectoryDataset load_dataset(const std::string& path);

}  // namespace lstmkf
