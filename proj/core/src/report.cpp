#include "atomtrans/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace atomtrans {

using nlohmann::json;

std::string format_number(double v) {
    // Shortest representation that round-trips.
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << row[i];
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a_file: cannot open " + path);
    std::uint64_t h = 14695981039346656037ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        auto n = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (in.eof()) break;
    }
    return h;
}

namespace {
char hex_digit(unsigned v) { return v < 10 ? char('0' + v) : char('a' + v - 10); }

std::string hex64(std::uint64_t h) {
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[i] = hex_digit(unsigned(h & 0xF));
    return s;
}
}  // namespace

void RunManifest::add_file(const std::string& relative_name) {
    std::string full = out_dir_ + "/" + relative_name;
    std::ifstream in(full, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("RunManifest: missing artifact " + full);
    Entry e;
    e.name = relative_name;
    e.size = static_cast<std::uint64_t>(in.tellg());
    e.hash = fnv1a_file(full);
    entries_.push_back(std::move(e));
}

void RunManifest::set_config_echo(const json& config) { set_extra("config", config); }

void RunManifest::set_extra(const std::string& key, const json& value) {
    if (!extra_) extra_ = std::make_shared<json>(json::object());
    (*extra_)[key] = value;
}

json RunManifest::to_json() const {
    json files = json::array();
    for (const auto& e : entries_)
        files.push_back({{"name", e.name}, {"size", e.size}, {"fnv1a", hex64(e.hash)}});
    json j{{"artifacts", files}};
    if (extra_)
        for (auto it = extra_->begin(); it != extra_->end(); ++it) j[it.key()] = it.value();
    return j;
}

void RunManifest::write() const {
    std::string path = out_dir_ + "/manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("RunManifest: cannot open " + path);
    out << to_json().dump(2) << "\n";
}

json OptimizationReport::to_json() const {
    json j;
    j["config"] = config_echo;
    j["cost_history"] = cost_history;
    if (fidelity >= 0.0) j["fidelity"] = fidelity;
    j["final_control"] = {
        {"times", final_control.times}, {"u", final_control.u}, {"v", final_control.v}};
    json trace = json::array();
    for (const auto& [t, temp] : temperature_trace) trace.push_back({t, temp});
    j["temperature_trace"] = trace;
    j["converged"] = converged;
    j["wall_time"] = wall_time_s;
    return j;
}

void OptimizationReport::write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("OptimizationReport: cannot open " + path);
    out << to_json().dump(2) << "\n";
}

void write_field_pgm(const PhaseField& field, const std::string& path) {
    const PhaseGrid& g = field.grid;
    auto [mn_it, mx_it] = std::minmax_element(field.values.begin(), field.values.end());
    double mn = *mn_it, mx = *mx_it;
    double span = (mx > mn) ? mx - mn : 1.0;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_field_pgm: cannot open " + path);
    out << "P5\n" << g.n_x << " " << g.n_p << "\n255\n";
    // Rows scan p from high to low so the image reads like a phase portrait.
    for (int k = g.n_p - 1; k >= 0; --k)
        for (int i = 0; i < g.n_x; ++i) {
            double t = (field.at(i, k) - mn) / span;
            out.put(static_cast<char>(std::clamp(int(t * 255.0 + 0.5), 0, 255)));
        }
}

}  // namespace atomtrans
