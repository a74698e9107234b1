// bplc: synthesize tensors, pack them into bit-plane containers, and
// report compression/traffic numbers.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bplc/bitplane.hpp"
#include "bplc/container.hpp"
#include "bplc/costmodel.hpp"
#include "bplc/errors.hpp"
#include "bplc/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw bplc::IoError("cannot write " + path.string());
    out << text;
}

bplc::WriteSettings parse_settings(const std::string& algo, int zstd_level,
                                   uint32_t superblock, uint16_t group_tokens,
                                   const std::string& layout) {
    bplc::WriteSettings s;
    s.codec.algo = bplc::algo_from_name(algo);
    s.codec.zstd_level = zstd_level;
    s.superblock_values = superblock;
    s.group_tokens = group_tokens;
    if (!layout.empty() && layout != "manifest") {
        if (layout == "bitplane")
            s.layout_override = bplc::TensorLayout::weights;
        else
            s.layout_override = bplc::layout_from_name(layout);
    }
    return s;
}

int cmd_synth(const fs::path& spec_path, const fs::path& out_dir) {
    auto spec = bplc::SynthSpec::from_json_file(spec_path);
    auto manifest = bplc::generate(spec, out_dir);
    std::cout << "wrote " << manifest.tensors.size() << " tensors + manifest to "
              << out_dir.string() << "\n";
    return 0;
}

int cmd_compress(const fs::path& manifest_path, const fs::path& out_path,
                 const bplc::WriteSettings& settings) {
    auto manifest = bplc::TensorManifest::from_json_file(manifest_path);
    bplc::write_container(manifest, settings, out_path);
    bplc::ContainerReader reader(out_path);
    uint64_t raw = 0, stored = 0;
    for (const auto& ts : reader.stats().tensors) {
        raw += ts.raw_bytes;
        stored += ts.stored_bytes;
    }
    uint64_t file_size = fs::file_size(out_path);
    std::cout << "container " << out_path.string() << ": " << raw
              << " raw bytes -> " << file_size << " file bytes (ratio "
              << bplc::compression_ratio(raw, stored) << " over records)\n";
    return 0;
}

int cmd_decompress(const fs::path& container_path, const fs::path& out_dir,
                   std::optional<size_t> planes,
                   const std::string& tensor_filter) {
    bplc::ContainerReader reader(container_path);
    fs::create_directories(out_dir);
    uint64_t touched = 0;
    for (const auto& name : reader.tensor_names()) {
        if (!tensor_filter.empty() && name != tensor_filter)
            continue;
        auto result = reader.read_tensor(name, planes);
        touched += result.bytes_touched;
        std::ofstream out(out_dir / (name + ".bin"),
                          std::ios::binary | std::ios::trunc);
        if (!out)
            throw bplc::IoError("cannot write output for tensor " + name);
        out.write(reinterpret_cast<const char*>(result.data.bytes().data()),
                  static_cast<std::streamsize>(result.data.bytes().size()));
    }
    std::cout << "bytes-touched " << touched << "\n";
    return 0;
}

json tensor_report(const bplc::TensorStats& ts) {
    json jt{{"name", ts.name},
            {"format", ts.format.name},
            {"layout", std::string(bplc::layout_name(ts.layout))},
            {"elements", ts.element_count},
            {"raw_bytes", ts.raw_bytes},
            {"stored_bytes", ts.stored_bytes},
            {"ratio", ts.ratio()},
            {"footprint_reduction", 1.0 - 1.0 / ts.ratio()}};
    json planes = json::array();
    for (size_t i = 0; i < ts.plane_raw_bytes.size(); ++i) {
        planes.push_back(
            {{"plane", ts.plane_raw_bytes.size() - 1 - i}, // bit significance
             {"raw_bytes", ts.plane_raw_bytes[i]},
             {"stored_bytes", ts.plane_stored_bytes[i]},
             {"ratio", bplc::compression_ratio(ts.plane_raw_bytes[i],
                                               ts.plane_stored_bytes[i])}});
    }
    jt["planes"] = std::move(planes);
    return jt;
}

int cmd_stats(const fs::path& container_path, const fs::path& out_prefix) {
    bplc::ContainerReader reader(container_path);
    auto stats = reader.stats();

    json doc;
    doc["schema_version"] = 1;
    doc["algo"] = std::string(bplc::algo_name(stats.algo));
    doc["superblock_values"] = stats.superblock_values;
    uint64_t raw = 0, stored = 0;
    doc["tensors"] = json::array();
    for (const auto& ts : stats.tensors) {
        raw += ts.raw_bytes;
        stored += ts.stored_bytes;
        doc["tensors"].push_back(tensor_report(ts));
    }
    // Size-weighted overall ratio: sum(S_orig) / sum(S_comp).
    doc["overall_ratio"] = bplc::compression_ratio(raw, stored);
    doc["overall_footprint_reduction"] =
        1.0 - 1.0 / bplc::compression_ratio(raw, stored);

    std::ostringstream csv;
    csv << "schema_version,tensor,format,layout,plane,raw_bytes,stored_bytes,"
           "ratio\n";
    for (const auto& ts : stats.tensors) {
        csv << "1," << ts.name << ',' << ts.format.name << ','
            << bplc::layout_name(ts.layout) << ",ALL," << ts.raw_bytes << ','
            << ts.stored_bytes << ',' << ts.ratio() << '\n';
        for (size_t i = 0; i < ts.plane_raw_bytes.size(); ++i)
            csv << "1," << ts.name << ',' << ts.format.name << ','
                << bplc::layout_name(ts.layout) << ','
                << (ts.plane_raw_bytes.size() - 1 - i) << ','
                << ts.plane_raw_bytes[i] << ',' << ts.plane_stored_bytes[i]
                << ','
                << bplc::compression_ratio(ts.plane_raw_bytes[i],
                                           ts.plane_stored_bytes[i])
                << '\n';
    }
    csv << "1,TOTAL,,,ALL," << raw << ',' << stored << ','
        << bplc::compression_ratio(raw, stored) << '\n';

    write_text(fs::path(out_prefix.string() + ".json"), doc.dump(2) + "\n");
    write_text(fs::path(out_prefix.string() + ".csv"), csv.str());
    std::cout << "overall ratio " << bplc::compression_ratio(raw, stored)
              << " (footprint reduction "
              << 100.0 * (1.0 - 1.0 / bplc::compression_ratio(raw, stored))
              << "%)\n";
    return 0;
}

int cmd_simulate(const fs::path& container_path, const fs::path& schedule_path,
                 const fs::path& dram_path, const fs::path& out_prefix,
                 bool compare) {
    bplc::ContainerReader reader(container_path);
    auto stats = reader.stats();
    auto schedule = bplc::PrecisionSchedule::from_json_file(schedule_path);
    bplc::DramConfig config = dram_path.empty()
                                  ? bplc::DramConfig{}
                                  : bplc::DramConfig::from_json_file(dram_path);

    if (compare) {
        auto [p, t] = bplc::compare_layouts(stats, schedule, config);
        write_text(fs::path(out_prefix.string() + ".bitplane.json"),
                   p.to_json() + "\n");
        write_text(fs::path(out_prefix.string() + ".bitplane.csv"), p.to_csv());
        write_text(fs::path(out_prefix.string() + ".bytelevel.json"),
                   t.to_json() + "\n");
        write_text(fs::path(out_prefix.string() + ".bytelevel.csv"), t.to_csv());
        std::cout << "bitplane: " << p.bytes_fetched << " B, "
                  << p.energy_joules << " J, " << p.latency_seconds << " s\n"
                  << "bytelevel: " << t.bytes_fetched << " B, "
                  << t.energy_joules << " J, " << t.latency_seconds << " s\n";
    } else {
        auto report = bplc::estimate_access(stats, schedule, config);
        write_text(fs::path(out_prefix.string() + ".json"),
                   report.to_json() + "\n");
        write_text(fs::path(out_prefix.string() + ".csv"), report.to_csv());
        std::cout << "bytes_fetched " << report.bytes_fetched << ", energy "
                  << report.energy_joules << " J, latency "
                  << report.latency_seconds << " s\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bit-plane tensor compression toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic tensors");
    std::string synth_spec, synth_out;
    synth->add_option("--spec", synth_spec, "synth spec JSON")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    // compress
    auto* compress = app.add_subcommand("compress", "manifest -> container");
    std::string c_manifest, c_out, c_algo = "zstd", c_layout = "manifest";
    int c_zstd_level = 3;
    uint32_t c_superblock = 32768;
    uint16_t c_group = 16;
    compress->add_option("--manifest", c_manifest, "tensor manifest JSON")
        ->required();
    compress->add_option("--out", c_out, "container path")->required();
    compress->add_option("--algo", c_algo, "none|lz4|zstd")
        ->check(CLI::IsMember({"none", "lz4", "zstd"}));
    compress->add_option("--zstd-level", c_zstd_level, "zstd level");
    compress->add_option("--superblock", c_superblock, "values per superblock")
        ->check(CLI::IsMember({8192u, 16384u, 32768u, 65536u}));
    compress->add_option("--group-tokens", c_group, "kv tokens per group");
    compress->add_option("--layout", c_layout,
                         "manifest|bitplane|raw|kv layout override")
        ->check(CLI::IsMember({"manifest", "bitplane", "raw", "kv"}));

    // decompress
    auto* decompress = app.add_subcommand("decompress", "container -> raw files");
    std::string d_container, d_out, d_tensor;
    int d_planes = 0;
    decompress->add_option("--container", d_container)->required();
    decompress->add_option("--out", d_out, "output directory")->required();
    decompress->add_option("--planes", d_planes, "top plane count (0 = all)");
    decompress->add_option("--tensor", d_tensor, "only this tensor");

    // stats
    auto* stats = app.add_subcommand("stats", "per-plane compression report");
    std::string s_container, s_out;
    stats->add_option("--container", s_container)->required();
    stats->add_option("--out", s_out, "report path prefix (.json/.csv)")
        ->required();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "DRAM traffic estimate");
    std::string m_container, m_schedule, m_dram, m_out;
    bool m_compare = false;
    simulate->add_option("--container", m_container)->required();
    simulate->add_option("--schedule", m_schedule, "schedule JSON")->required();
    simulate->add_option("--dram-config", m_dram, "DRAM config JSON");
    simulate->add_option("--out", m_out, "report path prefix")->required();
    simulate->add_flag("--compare", m_compare,
                       "also emit the byte-level baseline report");

    try {
        app.parse(argc, argv);
        if (synth->parsed())
            return cmd_synth(synth_spec, synth_out);
        if (compress->parsed())
            return cmd_compress(c_manifest, c_out,
                                parse_settings(c_algo, c_zstd_level,
                                               c_superblock, c_group, c_layout));
        if (decompress->parsed())
            return cmd_decompress(d_container, d_out,
                                  d_planes > 0
                                      ? std::optional<size_t>(d_planes)
                                      : std::nullopt,
                                  d_tensor);
        if (stats->parsed())
            return cmd_stats(s_container, s_out);
        if (simulate->parsed())
            return cmd_simulate(m_container, m_schedule, m_dram, m_out,
                                m_compare);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const bplc::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const bplc::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const bplc::Error& e) { // codec/integrity/io
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
