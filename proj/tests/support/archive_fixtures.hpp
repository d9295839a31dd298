#pragma once

#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

namespace semgap::testing {

enum class ExpectedError { Format, Corruption, Data };

struct BrokenArchive {
    std::string name;
    std::vector<std::uint8_t> bytes;
    ExpectedError expected;
};

inline std::vector<std::uint8_t> raw_archive(const std::string& header, const std::vector<float>& payload,
                                             const char* magic = "HSX1") {
    std::vector<std::uint8_t> out(magic, magic + 4);
    const auto len = static_cast<std::uint32_t>(header.size());
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    out.insert(out.end(), header.begin(), header.end());
    for (float f : payload) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
    }
    return out;
}

inline const std::string kFixtureMetadata =
    R"("metadata":{"format_version":"1","hidden_size":"2","model_id":"m","task":"wic"})";

inline std::string header_with(const std::string& manifest, const std::string& metadata = kFixtureMetadata,
                               int version = 1) {
    return "{\"manifest\":" + manifest + "," + metadata + ",\"version\":" + std::to_string(version) + "}";
}

// Hand-built archives that each break one rule of the layout.
inline std::vector<BrokenArchive> broken_archives() {
    const std::string one = R"([{"name":"t","offset":0,"shape":[2]}])";
    std::vector<BrokenArchive> v;
    v.push_back({"bad magic", raw_archive(header_with(one), {1.0f, 2.0f}, "XXXX"), ExpectedError::Format});
    v.push_back({"offset past EOF", raw_archive(header_with(R"([{"name":"t","offset":64,"shape":[2]}])"), {1.0f, 2.0f}),
                 ExpectedError::Corruption});
    v.push_back({"truncated payload", raw_archive(header_with(one), {1.0f}), ExpectedError::Corruption});
    {
        auto b = raw_archive(header_with(one), {1.0f, 2.0f});
        b[4] = 0xff;
        b[5] = 0xff;
        v.push_back({"header length past EOF", b, ExpectedError::Corruption});
    }
    v.push_back({"header not JSON", raw_archive("{not json", {}), ExpectedError::Format});
    v.push_back({"missing metadata key",
                 raw_archive(header_with(one, R"("metadata":{"format_version":"1","model_id":"m","task":"wic"})"),
                             {1.0f, 2.0f}),
                 ExpectedError::Format});
    v.push_back({"unsupported version", raw_archive(header_with(one, kFixtureMetadata, 2), {1.0f, 2.0f}),
                 ExpectedError::Format});
    v.push_back({"duplicate names",
                 raw_archive(header_with(R"([{"name":"t","offset":0,"shape":[1]},{"name":"t","offset":4,"shape":[1]}])"),
                             {1.0f, 2.0f}),
                 ExpectedError::Format});
    v.push_back({"overlapping offsets",
                 raw_archive(header_with(R"([{"name":"a","offset":0,"shape":[2]},{"name":"b","offset":4,"shape":[1]}])"),
                             {1.0f, 2.0f}),
                 ExpectedError::Format});
    v.push_back({"zero dimension", raw_archive(header_with(R"([{"name":"t","offset":0,"shape":[0]}])"), {}),
                 ExpectedError::Format});
    v.push_back({"NaN payload", raw_archive(header_with(one), {1.0f, std::numeric_limits<float>::quiet_NaN()}),
                 ExpectedError::Data});
    v.push_back({"Inf payload", raw_archive(header_with(one), {std::numeric_limits<float>::infinity(), 0.0f}),
                 ExpectedError::Data});
    return v;
}

}  // namespace semgap::testing
