#include "semgap/tensorstore.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <set>

#include "json.hpp"
#include "semgap/error.hpp"

namespace semgap {

namespace {

constexpr std::size_t kPrefixBytes = 8;  // magic + u32 header length

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& shape, const std::string& name) {
    std::uint64_t n = 1;
    for (auto d : shape) {
        if (d == 0) throw FormatError("record '" + name + "': shape dimensions must be positive");
        if (n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
            throw FormatError("record '" + name + "': shape too large");
        }
        n *= d;
    }
    return n;
}

void require_metadata(const ArchiveMetadata& metadata, bool reading) {
    for (auto key : kRequiredMetadataKeys) {
        if (!metadata.contains(std::string(key))) {
            const std::string msg = "archive metadata missing required key '" + std::string(key) + "'";
            if (reading) throw FormatError(msg);
            throw InvalidArgument(msg);
        }
    }
}

std::vector<std::uint64_t> parse_shape(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.empty()) throw FormatError("record '" + name + "': shape must be a non-empty array");
    std::vector<std::uint64_t> shape;
    for (const auto& d : j) {
        if (!d.is_number_unsigned()) throw FormatError("record '" + name + "': bad shape entry " + d.dump());
        shape.push_back(d.get<std::uint64_t>());
    }
    return shape;
}

}  // namespace

std::uint64_t TensorRecord::element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

ArchiveMetadata make_metadata(std::string model_id, std::string task, std::size_t hidden_size) {
    return {{"model_id", std::move(model_id)},
            {"task", std::move(task)},
            {"hidden_size", std::to_string(hidden_size)},
            {"format_version", std::to_string(kArchiveVersion)}};
}

void validate_records(std::span<const TensorRecord> records) {
    std::set<std::string_view> names;
    for (const auto& r : records) {
        if (r.name.empty()) throw InvalidArgument("tensor record with empty name");
        if (!names.insert(r.name).second) throw InvalidArgument("duplicate tensor name '" + r.name + "'");
        if (r.shape.empty()) throw InvalidArgument("record '" + r.name + "': empty shape");
        for (auto d : r.shape) {
            if (d == 0) throw InvalidArgument("record '" + r.name + "': zero dimension");
        }
        if (r.element_count() != r.data.size()) {
            throw InvalidArgument("record '" + r.name + "': shape product " +
                                  std::to_string(r.element_count()) + " != data length " +
                                  std::to_string(r.data.size()));
        }
        for (float v : r.data) {
            if (!std::isfinite(v)) throw DataError("record '" + r.name + "' contains a non-finite value");
        }
    }
}

std::vector<std::uint8_t> encode_archive(std::span<const TensorRecord> records,
                                         const ArchiveMetadata& metadata) {
    validate_records(records);
    require_metadata(metadata, false);

    nlohmann::json manifest = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& r : records) {
        manifest.push_back({{"name", r.name}, {"shape", r.shape}, {"offset", offset}});
        offset += r.data.size() * sizeof(float);
    }
    nlohmann::json header = {{"version", kArchiveVersion}, {"metadata", metadata}, {"manifest", manifest}};
    const std::string header_text = header.dump();  // sorted keys, no whitespace
    if (header_text.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument("archive header exceeds 4 GiB");
    }

    std::vector<std::uint8_t> out;
    out.reserve(kPrefixBytes + header_text.size() + offset);
    out.insert(out.end(), kArchiveMagic.begin(), kArchiveMagic.end());
    put_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (const auto& r : records) {
        for (float v : r.data) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::size_t write_archive(std::span<const TensorRecord> records, const ArchiveMetadata& metadata,
                          std::ostream& sink) {
    const auto bytes = encode_archive(records, metadata);
    sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!sink) throw Error("failed writing archive");
    return bytes.size();
}

std::size_t write_archive_file(std::span<const TensorRecord> records, const ArchiveMetadata& metadata,
                               const std::filesystem::path& path) {
    const auto bytes = encode_archive(records, metadata);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
    return bytes.size();
}

TensorArchive::TensorArchive(ArchiveMetadata metadata, std::vector<ManifestEntry> manifest,
                             std::vector<TensorRecord> records)
    : metadata_(std::move(metadata)), manifest_(std::move(manifest)), records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) index_.emplace(records_[i].name, i);
}

const TensorRecord* TensorArchive::find(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &records_[it->second];
}

const TensorRecord& TensorArchive::at(std::string_view name) const {
    if (const auto* r = find(name)) return *r;
    throw MissingInputError("archive has no record '" + std::string(name) + "'", std::string(name));
}

TensorArchive decode_archive(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kArchiveMagic.size() ||
        !std::equal(kArchiveMagic.begin(), kArchiveMagic.end(), bytes.begin())) {
        throw FormatError("not an HSX1 archive (bad magic)");
    }
    if (bytes.size() < kPrefixBytes) throw CorruptionError("archive truncated inside the prefix");
    const std::uint64_t header_len = get_u32_le(bytes.data() + 4);
    if (kPrefixBytes + header_len > bytes.size()) throw CorruptionError("archive truncated inside the header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + kPrefixBytes, bytes.begin() + kPrefixBytes + header_len);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("archive header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("version") || !header.contains("metadata") ||
        !header.contains("manifest")) {
        throw FormatError("archive header must contain version, metadata and manifest");
    }
    if (header["version"] != kArchiveVersion) {
        throw FormatError("unsupported archive version " + header["version"].dump());
    }

    ArchiveMetadata metadata;
    if (!header["metadata"].is_object()) throw FormatError("archive metadata must be an object");
    for (const auto& [k, v] : header["metadata"].items()) {
        if (!v.is_string()) throw FormatError("archive metadata value for '" + k + "' must be a string");
        metadata.emplace(k, v.get<std::string>());
    }
    require_metadata(metadata, true);

    const auto payload = bytes.subspan(kPrefixBytes + header_len);
    if (!header["manifest"].is_array()) throw FormatError("archive manifest must be an array");

    std::vector<ManifestEntry> manifest;
    std::vector<TensorRecord> records;
    std::set<std::string> names;
    std::uint64_t previous_end = 0;
    for (const auto& e : header["manifest"]) {
        if (!e.is_object() || !e.contains("name") || !e.contains("shape") || !e.contains("offset") ||
            !e["name"].is_string() || !e["offset"].is_number_unsigned()) {
            throw FormatError("malformed manifest entry " + e.dump());
        }
        ManifestEntry entry;
        entry.name = e["name"].get<std::string>();
        entry.shape = parse_shape(e["shape"], entry.name);
        entry.offset = e["offset"].get<std::uint64_t>();
        if (!names.insert(entry.name).second) throw FormatError("duplicate record name '" + entry.name + "'");
        if (entry.offset < previous_end) {
            throw FormatError("record '" + entry.name + "': offsets overlap or are out of order");
        }
        const std::uint64_t count = checked_product(entry.shape, entry.name);
        const std::uint64_t size = count * sizeof(float);
        if (entry.offset > payload.size() || size > payload.size() - entry.offset) {
            throw CorruptionError("record '" + entry.name + "' extends past the end of the payload");
        }
        previous_end = entry.offset + size;

        TensorRecord r;
        r.name = entry.name;
        r.shape = entry.shape;
        r.data.resize(count);
        const std::uint8_t* p = payload.data() + entry.offset;
        for (std::uint64_t i = 0; i < count; ++i, p += 4) {
            const float v = std::bit_cast<float>(get_u32_le(p));
            if (!std::isfinite(v)) throw DataError("record '" + r.name + "' contains a non-finite value");
            r.data[i] = v;
        }
        manifest.push_back(std::move(entry));
        records.push_back(std::move(r));
    }
    return TensorArchive(std::move(metadata), std::move(manifest), std::move(records));
}

TensorArchive read_archive(std::istream& source) {
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(source), std::istreambuf_iterator<char>()};
    return decode_archive(bytes);
}

TensorArchive read_archive_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw MissingInputError("archive not found: " + path.string(), path.string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open archive: " + path.string(), path.string());
    return read_archive(in);
}

}  // namespace semgap
