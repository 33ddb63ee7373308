#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "atomtrans/model.hpp"
#include "atomtrans/phase_grid.hpp"

namespace atomtrans {

/// Deterministic shortest-exact decimal formatting shared by all CSV output.
std::string format_number(double v);

/// Write a CSV file with the exact header line given; rows are pre-formatted.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows);

std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t fnv1a_file(const std::string& path);

/// Index of every artifact a run produced, with content hashes.
class RunManifest {
  public:
    explicit RunManifest(std::string out_dir) : out_dir_(std::move(out_dir)) {}

    /// Record a file living under the output directory (relative name).
    void add_file(const std::string& relative_name);
    void set_config_echo(const nlohmann::json& config);
    void set_extra(const std::string& key, const nlohmann::json& value);

    nlohmann::json to_json() const;
    /// Writes manifest.json into the output directory (not self-listed).
    void write() const;

  private:
    struct Entry {
        std::string name;
        std::uint64_t size = 0;
        std::uint64_t hash = 0;
    };
    std::string out_dir_;
    std::vector<Entry> entries_;
    std::shared_ptr<nlohmann::json> extra_;
};

struct OptimizationReport {
    nlohmann::json config_echo;
    std::vector<double> cost_history;
    double fidelity = -1.0;  // < 0 when not applicable (deterministic tier)
    ControlSignal final_control;
    std::vector<std::pair<double, double>> temperature_trace;
    bool converged = false;
    double wall_time_s = 0.0;

    nlohmann::json to_json() const;
    void write(const std::string& path) const;
};

/// 8-bit PGM heatmap of a field (x across, p down), linearly mapped from
/// [min, max]; a cheap plot backend with no dependencies.
void write_field_pgm(const PhaseField& field, const std::string& path);

}  // namespace atomtrans
