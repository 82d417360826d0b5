#pragma once

// File formats and report emission.
//
//   point sets : text, `manifold: <name>` header, one point per line,
//                `#` starts a comment
//   measures   : JSON, {"type":"atomic"|"density"|"ball_average", ...};
//                densities reference a named weight function from the
//                registry (const, sin_abs, jump) or carry a value table
//   partitions : structured text (stages, merge maps, centers, stats);
//                round-trips through the loader
//   rules      : header {manifold, order, kind}; one functional per line
//   reports    : JSON with stable field order plus CSV mirrors
//   config     : flat key = value under [section] headers

#include <json.hpp>

#include <string>
#include <vector>

#include "mz/kernels.hpp"
#include "mz/measures.hpp"
#include "mz/mzanalysis.hpp"
#include "mz/pointsets.hpp"
#include "mz/polynomials.hpp"
#include "mz/quadrature.hpp"

namespace mz::io {

using json = nlohmann::ordered_json;

void save_point_set(const std::string& path, const PointSet& ps);
PointSet load_point_set(const std::string& path);

std::vector<std::string> density_registry();
json measure_to_json(const SignedMeasure& nu);
SignedMeasure measure_from_json(const json& j);
void save_measure(const std::string& path, const SignedMeasure& nu);
SignedMeasure load_measure(const std::string& path);

void save_partition(const std::string& path, const Partition& part);
Partition load_partition(const std::string& path);

void save_rule(const std::string& path, const QuadratureRule& rule);
QuadratureRule load_rule(const std::string& path);

void save_polynomial(const std::string& path, const DiffusionPolynomial& P);
DiffusionPolynomial load_polynomial(const std::string& path);

json to_json(const MZReport& rep);
json to_json(const KernelProbeReport& rep);
json to_json(const StrongMZReport& rep);
json to_json(const CharacterizationReport& rep);
json to_json(const QuadratureRule& rule);

// flat key = value configuration with one section level
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_text(const std::string& text, const std::string& origin = "<inline>");

    bool has(const std::string& key) const;
    const std::string& raw_text() const { return text_; }
    std::uint64_t hash() const;

    // typed getters; `key` is "section.name"; throw std::invalid_argument
    // naming the field on absence or parse failure
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<double> get_list(const std::string& key) const;  // comma separated

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  private:
    const std::string* find(const std::string& key) const;
    std::string text_;
    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mz::io
