#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semgap {

// A named row-major float32 tensor.
struct TensorRecord {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> data;

    std::uint64_t element_count() const;
    bool operator==(const TensorRecord&) const = default;
};

using ArchiveMetadata = std::map<std::string, std::string>;

struct ManifestEntry {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::uint64_t offset = 0;  // bytes from the start of the payload
};

// Metadata keys every archive must carry.
inline constexpr std::string_view kRequiredMetadataKeys[] = {"model_id", "task", "hidden_size",
                                                             "format_version"};
inline constexpr std::string_view kArchiveMagic = "HSX1";
inline constexpr int kArchiveVersion = 1;

// Convenience for the common case; fills format_version.
ArchiveMetadata make_metadata(std::string model_id, std::string task, std::size_t hidden_size);

// Checks shape/data agreement, finiteness and name uniqueness.
void validate_records(std::span<const TensorRecord> records);

// Layout: "HSX1" | u32 LE header length | compact JSON header with sorted keys
// {manifest:[{name,offset,shape}], metadata, version} | LE float32 payload.
// Everything is validated before the first byte is written.
std::size_t write_archive(std::span<const TensorRecord> records, const ArchiveMetadata& metadata,
                          std::ostream& sink);
std::vector<std::uint8_t> encode_archive(std::span<const TensorRecord> records,
                                         const ArchiveMetadata& metadata);
// Writes to a temporary sibling and renames into place.
std::size_t write_archive_file(std::span<const TensorRecord> records, const ArchiveMetadata& metadata,
                               const std::filesystem::path& path);

// Immutable, eagerly loaded archive.
class TensorArchive {
public:
    TensorArchive(ArchiveMetadata metadata, std::vector<ManifestEntry> manifest,
                  std::vector<TensorRecord> records);

    const ArchiveMetadata& metadata() const noexcept { return metadata_; }
    const std::vector<ManifestEntry>& manifest() const noexcept { return manifest_; }
    const std::vector<TensorRecord>& records() const noexcept { return records_; }

    const TensorRecord* find(std::string_view name) const;
    // Throws MissingInputError naming the record.
    const TensorRecord& at(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name) != nullptr; }
    std::size_t size() const noexcept { return records_.size(); }

private:
    ArchiveMetadata metadata_;
    std::vector<ManifestEntry> manifest_;
    std::vector<TensorRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
};

// FormatError on bad magic/header, CorruptionError when the payload is shorter
// than the manifest claims, DataError (naming the record) on NaN/Inf.
TensorArchive read_archive(std::istream& source);
TensorArchive decode_archive(std::span<const std::uint8_t> bytes);
// MissingInputError when the file does not exist.
TensorArchive read_archive_file(const std::filesystem::path& path);

}  // namespace semgap
