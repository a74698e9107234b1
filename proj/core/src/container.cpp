#include "bplc/container.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "bplc/bitplane.hpp"
#include "bplc/errors.hpp"
#include "bplc/kv_transform.hpp"

namespace bplc {

namespace {

using json = nlohmann::json;

// --- little-endian serialization helpers ---

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

struct Cursor {
    const uint8_t* p;
    const uint8_t* end;

    void need(size_t n) const {
        if (static_cast<size_t>(end - p) < n)
            throw IntegrityError("container truncated");
    }
    uint8_t u8() {
        need(1);
        return *p++;
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

uint8_t dtype_id(const FloatFormat& fmt) {
    static const std::map<std::string, uint8_t> ids = {
        {"bf16", 1}, {"fp16", 2},    {"fp8e4m3", 3},
        {"fp8e5m2", 4}, {"int8", 5}, {"int4", 6}};
    auto it = ids.find(fmt.name);
    return it != ids.end() ? it->second : 255;
}

FloatFormat format_from_dtype(uint8_t id, Cursor& cur) {
    switch (id) {
        case 1: return find_format("bf16");
        case 2: return find_format("fp16");
        case 3: return find_format("fp8e4m3");
        case 4: return find_format("fp8e5m2");
        case 5: return find_format("int8");
        case 6: return find_format("int4");
        case 255: {
            FloatFormat fmt;
            fmt.sign_bits = 1;
            fmt.exp_bits = cur.u8();
            fmt.frac_bits = cur.u8();
            fmt.bias = static_cast<int16_t>(cur.u16());
            fmt.name = "custom_e" + std::to_string(fmt.exp_bits) + "m" +
                       std::to_string(fmt.frac_bits);
            return fmt;
        }
        default:
            throw IntegrityError("unknown dtype id " + std::to_string(id));
    }
}

// Copies src words into dest starting at word offset. memcpy when the
// destination bit offset is byte-aligned, per-word otherwise.
void append_words(ValueBlock& dest, size_t word_offset, const ValueBlock& src) {
    const unsigned n = dest.format().total_bits();
    size_t bit_offset = word_offset * n;
    if (bit_offset % 8 == 0 && (src.count() * n) % 8 == 0) {
        std::memcpy(dest.bytes().data() + bit_offset / 8, src.bytes().data(),
                    src.bytes().size());
    } else {
        for (size_t j = 0; j < src.count(); ++j)
            dest.set_word(word_offset + j, src.word(j));
    }
}

struct DirEntry {
    std::string name;
    FloatFormat format;
    TensorLayout layout = TensorLayout::weights;
    uint64_t element_count = 0;
    uint16_t tokens_per_group = 0;
    uint32_t channels = 0;
    uint32_t superblock_count = 0;
    uint64_t first_offset = 0;
};

size_t dir_entry_size(const DirEntry& e) {
    size_t n = 2 + e.name.size() + 1 + 1 + 8 + 4 + 8;
    if (dtype_id(e.format) == 255)
        n += 4;
    if (e.layout == TensorLayout::kv)
        n += 2 + 4;
    return n;
}

void serialize_dir_entry(std::vector<uint8_t>& out, const DirEntry& e) {
    put_u16(out, static_cast<uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    uint8_t id = dtype_id(e.format);
    out.push_back(id);
    if (id == 255) {
        out.push_back(e.format.exp_bits);
        out.push_back(e.format.frac_bits);
        put_u16(out, static_cast<uint16_t>(e.format.bias));
    }
    out.push_back(static_cast<uint8_t>(e.layout));
    put_u64(out, e.element_count);
    if (e.layout == TensorLayout::kv) {
        put_u16(out, e.tokens_per_group);
        put_u32(out, e.channels);
    }
    put_u32(out, e.superblock_count);
    put_u64(out, e.first_offset);
}

void serialize_superblock(std::vector<uint8_t>& out,
                          const CompressedSuperblock& sb) {
    put_u32(out, sb.value_count);
    out.push_back(sb.plane_count);
    put_u32(out, static_cast<uint32_t>(sb.meta.size()));
    for (const auto& p : sb.payloads)
        put_u32(out, static_cast<uint32_t>(p.size()));
    out.insert(out.end(), sb.meta.begin(), sb.meta.end());
    for (const auto& p : sb.payloads)
        out.insert(out.end(), p.begin(), p.end());
}

std::vector<uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    std::vector<uint8_t> data(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
    if (!in)
        throw IoError("failed reading " + path.string());
    return data;
}

} // namespace

std::string_view layout_name(TensorLayout layout) {
    switch (layout) {
        case TensorLayout::weights: return "weights";
        case TensorLayout::kv: return "kv";
        case TensorLayout::raw: return "raw";
    }
    throw ArgumentError("invalid layout id");
}

TensorLayout layout_from_name(std::string_view name) {
    if (name == "weights") return TensorLayout::weights;
    if (name == "kv") return TensorLayout::kv;
    if (name == "raw") return TensorLayout::raw;
    throw ArgumentError("unknown layout: " + std::string(name));
}

uint64_t ManifestTensor::element_count() const {
    uint64_t n = 1;
    for (uint64_t d : shape)
        n *= d;
    return n;
}

TensorManifest TensorManifest::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ArgumentError("manifest parse error: " + std::string(e.what()));
    }
    TensorManifest m;
    m.base_dir = path.parent_path();
    for (const auto& t : doc.at("tensors")) {
        ManifestTensor mt;
        mt.name = t.at("name").get<std::string>();
        mt.dtype = t.at("dtype").get<std::string>();
        mt.shape = t.at("shape").get<std::vector<uint64_t>>();
        mt.path = t.at("path").get<std::string>();
        mt.layout = layout_from_name(t.value("layout", "weights"));
        mt.tokens_per_group = t.value("tokens_per_group", 0);
        mt.channels = t.value("channels", 0u);
        m.tensors.push_back(std::move(mt));
    }
    return m;
}

void TensorManifest::to_json_file(const std::filesystem::path& path) const {
    json doc;
    doc["tensors"] = json::array();
    for (const auto& t : tensors) {
        json jt{{"name", t.name},
                {"dtype", t.dtype},
                {"shape", t.shape},
                {"path", t.path},
                {"layout", std::string(layout_name(t.layout))}};
        if (t.layout == TensorLayout::kv) {
            jt["tokens_per_group"] = t.tokens_per_group;
            jt["channels"] = t.channels;
        }
        doc["tensors"].push_back(std::move(jt));
    }
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write manifest " + path.string());
    out << doc.dump(2) << "\n";
}

namespace {

// Splits one tensor into compressed superblocks.
std::vector<CompressedSuperblock> build_superblocks(
    const ManifestTensor& tensor, const ValueBlock& block,
    const WriteSettings& settings, TensorLayout layout) {
    std::vector<CompressedSuperblock> out;
    const FloatFormat& fmt = block.format();
    const uint64_t total = block.count();

    auto slice = [&](uint64_t off, uint64_t cnt) {
        ValueBlock vb(fmt, cnt);
        const unsigned n = fmt.total_bits();
        if ((off * n) % 8 == 0 && (cnt * n) % 8 == 0) {
            std::memcpy(vb.bytes().data(), block.bytes().data() + off * n / 8,
                        vb.bytes().size());
        } else {
            for (uint64_t j = 0; j < cnt; ++j)
                vb.set_word(j, block.word(off + j));
        }
        return vb;
    };

    if (layout == TensorLayout::weights) {
        for (uint64_t off = 0; off < total; off += settings.superblock_values) {
            uint64_t cnt = std::min<uint64_t>(settings.superblock_values,
                                              total - off);
            out.push_back(compress_superblock(disaggregate(slice(off, cnt)),
                                              settings.codec));
        }
    } else if (layout == TensorLayout::kv) {
        uint32_t channels = tensor.channels;
        if (channels == 0 || total % channels != 0)
            throw ArgumentError("kv tensor " + tensor.name +
                                " needs a channel count dividing its size");
        uint16_t group = tensor.tokens_per_group ? tensor.tokens_per_group
                                                 : settings.group_tokens;
        if (group < 1 || group > 1024)
            throw ArgumentError("tokens_per_group must be in [1, 1024]");
        uint64_t tokens = total / channels;
        for (uint64_t t0 = 0; t0 < tokens; t0 += group) {
            uint64_t ntok = std::min<uint64_t>(group, tokens - t0);
            TokenGroup tg{static_cast<size_t>(ntok), channels,
                          slice(t0 * channels, ntok * channels)};
            auto grouped = group_by_channel(tg);
            auto [delta, meta] = delta_forward(grouped);
            out.push_back(compress_superblock(kv_bitplane_concat(delta),
                                              settings.codec, &meta));
        }
    } else { // raw: original byte layout, plane-segment-sized blocks
        const unsigned n = fmt.total_bits();
        uint64_t seg_bytes = settings.superblock_values / 8;
        uint64_t values_per_block = std::max<uint64_t>(1, seg_bytes * 8 / n);
        for (uint64_t off = 0; off < total; off += values_per_block) {
            uint64_t cnt = std::min(values_per_block, total - off);
            ValueBlock vb = slice(off, cnt);
            CompressedSuperblock sb;
            sb.format = fmt;
            sb.value_count = static_cast<uint32_t>(cnt);
            sb.plane_count = 1;
            sb.algo = settings.codec.algo;
            sb.plane_raw_bytes = static_cast<uint32_t>(vb.bytes().size());
            sb.payloads.push_back(compress_bytes(vb.bytes(), settings.codec));
            out.push_back(std::move(sb));
        }
    }
    return out;
}

} // namespace

void write_container(const TensorManifest& manifest, const WriteSettings& settings,
                     const std::filesystem::path& out_path) {
    switch (settings.superblock_values) {
        case 8192: case 16384: case 32768: case 65536: break;
        default:
            throw ArgumentError("superblock value count must be one of "
                                "{8192, 16384, 32768, 65536}");
    }

    std::vector<DirEntry> entries;
    std::vector<std::vector<uint8_t>> records; // serialized superblocks per tensor

    for (const auto& tensor : manifest.tensors) {
        const FloatFormat& fmt = find_format(tensor.dtype);
        TensorLayout layout = settings.layout_override.value_or(tensor.layout);
        uint64_t count = tensor.element_count();

        auto raw = read_file(manifest.base_dir / tensor.path);
        if (raw.size() != ValueBlock::packed_bytes(fmt, count))
            throw ArgumentError("tensor " + tensor.name + ": raw file size " +
                                std::to_string(raw.size()) + " != expected " +
                                std::to_string(ValueBlock::packed_bytes(fmt, count)));
        ValueBlock block = ValueBlock::from_bytes(fmt, count, raw);

        auto sbs = build_superblocks(tensor, block, settings, layout);
        std::vector<uint8_t> rec;
        for (const auto& sb : sbs)
            serialize_superblock(rec, sb);

        DirEntry e;
        e.name = tensor.name;
        e.format = fmt;
        e.layout = layout;
        e.element_count = count;
        if (layout == TensorLayout::kv) {
            e.tokens_per_group = tensor.tokens_per_group ? tensor.tokens_per_group
                                                         : settings.group_tokens;
            e.channels = tensor.channels;
        }
        e.superblock_count = static_cast<uint32_t>(sbs.size());
        entries.push_back(std::move(e));
        records.push_back(std::move(rec));
    }

    // Header + directory sizes are known; fill offsets.
    size_t offset = 18; // fixed header
    for (const auto& e : entries)
        offset += dir_entry_size(e);
    for (size_t i = 0; i < entries.size(); ++i) {
        entries[i].first_offset = offset;
        offset += records[i].size();
    }

    std::vector<uint8_t> file;
    file.reserve(offset);
    file.insert(file.end(), kContainerMagic, kContainerMagic + 4);
    put_u16(file, kContainerVersion);
    put_u16(file, 0); // flags
    file.push_back(static_cast<uint8_t>(settings.codec.algo));
    file.push_back(static_cast<uint8_t>(
        static_cast<int8_t>(settings.codec.zstd_level)));
    put_u32(file, settings.superblock_values);
    put_u32(file, static_cast<uint32_t>(entries.size()));
    for (const auto& e : entries)
        serialize_dir_entry(file, e);
    for (const auto& rec : records)
        file.insert(file.end(), rec.begin(), rec.end());

    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write container " + out_path.string());
    out.write(reinterpret_cast<const char*>(file.data()),
              static_cast<std::streamsize>(file.size()));
    if (!out)
        throw IoError("failed writing container " + out_path.string());
}

// --- reader ---

struct ContainerReader::Impl {
    std::vector<uint8_t> file;
    Algo algo = Algo::none;
    int zstd_level = 3;
    uint32_t superblock_values = 0;
    std::vector<DirEntry> entries;

    const DirEntry& find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name)
                return e;
        throw ArgumentError("unknown tensor: " + name);
    }

    // Parses the superblock record at `off`; fills payload data only for
    // the top `want_planes` planes and accounts touched bytes.
    struct SbView {
        CompressedSuperblock sb;
        uint64_t next_offset = 0;
        uint64_t bytes_touched = 0;
    };

    SbView load_superblock(const DirEntry& e, uint64_t off,
                           std::optional<size_t> want_planes) const {
        Cursor cur{file.data() + off, file.data() + file.size()};
        CompressedSuperblock sb;
        sb.format = e.format;
        sb.algo = algo;
        sb.value_count = cur.u32();
        sb.plane_count = cur.u8();
        uint32_t meta_len = cur.u32();
        std::vector<uint32_t> lens(sb.plane_count);
        for (auto& l : lens)
            l = cur.u32();
        cur.need(meta_len);
        sb.meta.assign(cur.p, cur.p + meta_len);
        cur.p += meta_len;

        sb.plane_raw_bytes = static_cast<uint32_t>(
            e.layout == TensorLayout::raw
                ? ValueBlock::packed_bytes(e.format, sb.value_count)
                : (sb.value_count + 7) / 8);

        size_t k = want_planes.value_or(sb.plane_count);
        if (k < 1 || k > sb.plane_count)
            throw ArgumentError("plane count " + std::to_string(k) +
                                " out of range [1, " +
                                std::to_string(sb.plane_count) + "]");
        uint64_t payload_total = 0;
        for (size_t i = 0; i < sb.plane_count; ++i) {
            if (i < k) {
                cur.need(lens[i]);
                sb.payloads.emplace_back(cur.p, cur.p + lens[i]);
            }
            cur.p += lens[i]; // excluded planes are skipped, not read
            payload_total += lens[i];
        }
        SbView view;
        view.bytes_touched = sb.header_bytes() + meta_len;
        for (size_t i = 0; i < k; ++i)
            view.bytes_touched += lens[i];
        view.next_offset = off + sb.header_bytes() + meta_len + payload_total;
        view.sb = std::move(sb);
        return view;
    }
};

ContainerReader::ContainerReader(const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
    impl_->file = read_file(path);
    Cursor cur{impl_->file.data(), impl_->file.data() + impl_->file.size()};
    if (cur.str(4) != std::string(kContainerMagic, 4))
        throw IntegrityError("bad container magic in " + path.string());
    uint16_t version = cur.u16();
    if (version != kContainerVersion)
        throw IntegrityError("unsupported container version " +
                             std::to_string(version));
    cur.u16(); // flags
    impl_->algo = static_cast<Algo>(cur.u8());
    impl_->zstd_level = static_cast<int8_t>(cur.u8());
    impl_->superblock_values = cur.u32();
    uint32_t tensor_count = cur.u32();
    for (uint32_t i = 0; i < tensor_count; ++i) {
        DirEntry e;
        e.name = cur.str(cur.u16());
        uint8_t id = cur.u8();
        e.format = format_from_dtype(id, cur);
        e.layout = static_cast<TensorLayout>(cur.u8());
        e.element_count = cur.u64();
        if (e.layout == TensorLayout::kv) {
            e.tokens_per_group = cur.u16();
            e.channels = cur.u32();
        }
        e.superblock_count = cur.u32();
        e.first_offset = cur.u64();
        if (e.first_offset > impl_->file.size())
            throw IntegrityError("directory offset out of range for tensor " +
                                 e.name);
        impl_->entries.push_back(std::move(e));
    }
}

ContainerReader::~ContainerReader() = default;
ContainerReader::ContainerReader(ContainerReader&&) noexcept = default;
ContainerReader& ContainerReader::operator=(ContainerReader&&) noexcept = default;

std::vector<std::string> ContainerReader::tensor_names() const {
    std::vector<std::string> names;
    for (const auto& e : impl_->entries)
        names.push_back(e.name);
    return names;
}

Algo ContainerReader::algo() const { return impl_->algo; }
uint32_t ContainerReader::superblock_values() const {
    return impl_->superblock_values;
}

ContainerReader::ReadResult ContainerReader::read_tensor(
    const std::string& name, std::optional<size_t> planes) {
    const DirEntry& e = impl_->find(name);
    ReadResult result{ValueBlock(e.format, e.element_count), 0};
    uint64_t off = e.first_offset;
    uint64_t word_offset = 0;
    for (uint32_t s = 0; s < e.superblock_count; ++s) {
        auto view = impl_->load_superblock(e, off, planes);
        result.bytes_touched += view.bytes_touched;
        off = view.next_offset;
        const auto& sb = view.sb;

        if (e.layout == TensorLayout::raw) {
            auto bytes = decompress_bytes(sb.payloads[0], sb.plane_raw_bytes,
                                          sb.algo);
            append_words(result.data, word_offset,
                         ValueBlock::from_bytes(e.format, sb.value_count, bytes));
        } else {
            auto matrix = decompress_superblock(sb, planes);
            ValueBlock block = aggregate(matrix);
            if (e.layout == TensorLayout::kv) {
                uint32_t channels = e.channels;
                size_t tokens = sb.value_count / channels;
                if (tokens * channels != sb.value_count)
                    throw IntegrityError("kv superblock size not divisible by "
                                         "channel count in tensor " + name);
                DeltaMeta meta{sb.meta};
                ChannelGroupedBlock grouped{tokens, channels, std::move(block)};
                block = ungroup(delta_inverse(grouped, meta)).data;
            }
            append_words(result.data, word_offset, block);
        }
        word_offset += sb.value_count;
    }
    if (word_offset != e.element_count)
        throw IntegrityError("tensor " + name + " reconstructed " +
                             std::to_string(word_offset) + " of " +
                             std::to_string(e.element_count) + " values");
    return result;
}

TensorStats ContainerReader::stat_tensor(const std::string& name) {
    const DirEntry& e = impl_->find(name);
    TensorStats st;
    st.name = e.name;
    st.format = e.format;
    st.layout = e.layout;
    st.element_count = e.element_count;
    st.raw_bytes = ValueBlock::packed_bytes(e.format, e.element_count);
    if (e.layout != TensorLayout::raw) {
        st.plane_raw_bytes.assign(e.format.total_bits(), 0);
        st.plane_stored_bytes.assign(e.format.total_bits(), 0);
    }
    uint64_t off = e.first_offset;
    for (uint32_t s = 0; s < e.superblock_count; ++s) {
        // Stats only need record headers, never the payload bytes.
        Cursor cur{impl_->file.data() + off,
                   impl_->file.data() + impl_->file.size()};
        SuperblockStat ss;
        ss.value_count = cur.u32();
        ss.plane_count = cur.u8();
        ss.meta_bytes = cur.u32();
        ss.plane_sizes.resize(ss.plane_count);
        uint64_t payload = 0;
        for (auto& l : ss.plane_sizes) {
            l = cur.u32();
            payload += l;
        }
        ss.header_bytes = 4 + 1 + 4 + 4u * ss.plane_count;
        ss.plane_raw_bytes = static_cast<uint32_t>(
            e.layout == TensorLayout::raw
                ? ValueBlock::packed_bytes(e.format, ss.value_count)
                : (ss.value_count + 7) / 8);

        if (e.layout != TensorLayout::raw)
            for (size_t i = 0; i < ss.plane_count; ++i) {
                st.plane_raw_bytes[i] += ss.plane_raw_bytes;
                st.plane_stored_bytes[i] += ss.plane_sizes[i];
            }
        uint64_t rec_size = ss.header_bytes + ss.meta_bytes + payload;
        st.stored_bytes += rec_size;
        off += rec_size;
        st.superblocks.push_back(std::move(ss));
    }
    return st;
}

ContainerStats ContainerReader::stats() {
    ContainerStats cs;
    cs.algo = impl_->algo;
    cs.superblock_values = impl_->superblock_values;
    for (const auto& e : impl_->entries)
        cs.tensors.push_back(stat_tensor(e.name));
    return cs;
}

} // namespace bplc
