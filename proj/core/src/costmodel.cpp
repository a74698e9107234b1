#include "bplc/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bplc/bitplane.hpp"
#include "bplc/errors.hpp"

namespace bplc {

namespace {
using json = nlohmann::json;

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw ArgumentError("JSON parse error in " + path.string() + ": " +
                            e.what());
    }
}
} // namespace

bool pattern_match(std::string_view pattern, std::string_view text) {
    // Iterative glob with '*' backtracking.
    size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
    while (t < text.size()) {
        if (p < pattern.size() &&
            (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*')
        ++p;
    return p == pattern.size();
}

void DramConfig::validate() const {
    if (channels <= 0 || per_channel_bandwidth <= 0 || row_buffer_bytes == 0 ||
        energy_read_per_bit <= 0 || energy_activate <= 0 || fixed_latency <= 0)
        throw ArgumentError("all DRAM config parameters must be positive");
}

DramConfig DramConfig::from_json_file(const std::filesystem::path& path) {
    json doc = load_json(path);
    DramConfig cfg;
    cfg.channels = doc.value("channels", cfg.channels);
    cfg.per_channel_bandwidth =
        doc.value("per_channel_bandwidth", cfg.per_channel_bandwidth);
    cfg.row_buffer_bytes = doc.value("row_buffer_bytes", cfg.row_buffer_bytes);
    cfg.energy_read_per_bit =
        doc.value("energy_read_per_bit", cfg.energy_read_per_bit);
    cfg.energy_activate = doc.value("energy_activate", cfg.energy_activate);
    cfg.fixed_latency = doc.value("fixed_latency", cfg.fixed_latency);
    cfg.validate();
    return cfg;
}

PrecisionSchedule PrecisionSchedule::from_json_file(
    const std::filesystem::path& path) {
    json doc = load_json(path);
    PrecisionSchedule sched;
    auto parse_rule = [](const json& j, const std::string& pattern) {
        ScheduleRule r;
        r.pattern = pattern;
        if (j.contains("planes"))
            r.planes = j.at("planes").get<int>();
        else if (j.contains("precision"))
            r.precision = j.at("precision").get<std::string>();
        else
            r.planes = 0; // full precision
        return r;
    };
    if (doc.contains("default"))
        sched.fallback = parse_rule(doc.at("default"), "*");
    for (const auto& j : doc.value("rules", json::array()))
        sched.rules.push_back(parse_rule(j, j.at("pattern").get<std::string>()));
    return sched;
}

size_t PrecisionSchedule::resolve(const std::string& tensor_name,
                                  const FloatFormat& fmt) const {
    const ScheduleRule* hit = &fallback;
    for (const auto& r : rules)
        if (pattern_match(r.pattern, tensor_name)) {
            hit = &r;
            break;
        }
    const size_t n = fmt.total_bits();
    if (!hit->precision.empty()) {
        auto k = resolve_precision(fmt, hit->precision);
        if (!k)
            throw ArgumentError("precision label '" + hit->precision +
                                "' not defined for format " + fmt.name);
        if (*k < 1 || *k > n)
            throw ArgumentError("precision label '" + hit->precision +
                                "' resolves outside [1, " + std::to_string(n) +
                                "] for format " + fmt.name);
        return *k;
    }
    if (hit->planes == 0)
        return n;
    if (hit->planes < 1 || static_cast<size_t>(hit->planes) > n)
        throw ArgumentError("plane count " + std::to_string(hit->planes) +
                            " out of range [1, " + std::to_string(n) +
                            "] for tensor " + tensor_name);
    return static_cast<size_t>(hit->planes);
}

namespace {

void finalize(AccessReport& report, const DramConfig& cfg) {
    for (auto& t : report.tensors) {
        t.energy_joules =
            static_cast<double>(t.bytes_fetched) * 8.0 * cfg.energy_read_per_bit +
            static_cast<double>(t.activations) * cfg.energy_activate;
        report.bytes_fetched += t.bytes_fetched;
        report.activations += t.activations;
    }
    report.energy_joules =
        static_cast<double>(report.bytes_fetched) * 8.0 * cfg.energy_read_per_bit +
        static_cast<double>(report.activations) * cfg.energy_activate;
    double bw = cfg.channels * cfg.per_channel_bandwidth;
    report.latency_seconds =
        static_cast<double>(report.bytes_fetched) / bw + cfg.fixed_latency;
    for (auto& t : report.tensors)
        t.latency_seconds =
            static_cast<double>(t.bytes_fetched) / bw + cfg.fixed_latency;
}

} // namespace

AccessReport estimate_access(const ContainerStats& stats,
                             const PrecisionSchedule& schedule,
                             const DramConfig& config) {
    config.validate();
    AccessReport report;
    report.layout_label = "bitplane";
    for (const auto& ts : stats.tensors) {
        TensorAccess ta;
        ta.name = ts.name;
        size_t n = ts.layout == TensorLayout::raw ? 1 : ts.format.total_bits();
        size_t k = ts.layout == TensorLayout::raw
                       ? 1
                       : schedule.resolve(ts.name, ts.format);
        if (k > n)
            throw ArgumentError("schedule requests " + std::to_string(k) +
                                " planes of " + std::to_string(n) +
                                " for tensor " + ts.name);
        ta.planes = k;
        ta.plane_bytes.assign(k, 0);
        for (const auto& sb : ts.superblocks) {
            uint64_t run = sb.header_bytes + sb.meta_bytes;
            for (size_t i = 0; i < k && i < sb.plane_sizes.size(); ++i) {
                run += sb.plane_sizes[i];
                ta.plane_bytes[i] += sb.plane_sizes[i];
            }
            ta.bytes_fetched += run;
            // Top-k planes sit contiguously after the record header: one run.
            ta.activations += ceil_div(run, config.row_buffer_bytes);
        }
        report.tensors.push_back(std::move(ta));
    }
    finalize(report, config);
    return report;
}

std::pair<AccessReport, AccessReport> compare_layouts(
    const ContainerStats& stats, const PrecisionSchedule& schedule,
    const DramConfig& config) {
    AccessReport bitplane = estimate_access(stats, schedule, config);

    AccessReport bytelevel;
    bytelevel.layout_label = "bytelevel";
    for (const auto& ts : stats.tensors) {
        TensorAccess ta;
        ta.name = ts.name;
        size_t n = ts.format.total_bits();
        size_t k = ts.layout == TensorLayout::raw
                       ? n
                       : schedule.resolve(ts.name, ts.format);
        ta.planes = k;
        uint64_t raw_bytes = ValueBlock::packed_bytes(ts.format, ts.element_count);
        uint64_t fetched = raw_bytes;
        if (k < n && n % 8 == 0 && (n - k) % 8 == 0) {
            // Byte-aligned truncation boundary: trailing bytes skippable.
            uint64_t word_bytes = n / 8;
            uint64_t kept = word_bytes - (n - k) / 8;
            fetched = ts.element_count * kept;
        }
        ta.bytes_fetched = fetched;
        // Partial-word fetches still touch every row of the raw extent.
        ta.activations = ceil_div(raw_bytes, config.row_buffer_bytes);
        bytelevel.tensors.push_back(std::move(ta));
    }
    finalize(bytelevel, config);
    return {std::move(bitplane), std::move(bytelevel)};
}

std::string AccessReport::to_json() const {
    json doc;
    doc["schema_version"] = 1;
    doc["layout"] = layout_label;
    doc["bytes_fetched"] = bytes_fetched;
    doc["activations"] = activations;
    doc["energy_joules"] = energy_joules;
    doc["latency_seconds"] = latency_seconds;
    doc["tensors"] = json::array();
    for (const auto& t : tensors) {
        doc["tensors"].push_back({{"name", t.name},
                                  {"planes", t.planes},
                                  {"bytes_fetched", t.bytes_fetched},
                                  {"activations", t.activations},
                                  {"energy_joules", t.energy_joules},
                                  {"latency_seconds", t.latency_seconds},
                                  {"plane_bytes", t.plane_bytes}});
    }
    return doc.dump(2);
}

std::string AccessReport::to_csv() const {
    std::ostringstream out;
    out << "schema_version,layout,tensor,planes,bytes_fetched,activations,"
           "energy_joules,latency_seconds\n";
    for (const auto& t : tensors)
        out << "1," << layout_label << ',' << t.name << ',' << t.planes << ','
            << t.bytes_fetched << ',' << t.activations << ',' << t.energy_joules
            << ',' << t.latency_seconds << '\n';
    out << "1," << layout_label << ",TOTAL,," << bytes_fetched << ','
        << activations << ',' << energy_joules << ',' << latency_seconds << '\n';
    return out.str();
}

} // namespace bplc
