#include "cds/fsutil.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cds/error.hpp"

namespace cds::fsutil {

namespace {

void write_all_or_throw(const std::filesystem::path& tmp, const void* data, std::size_t len) {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::store_failed, "cannot open for write: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    out.flush();
    if (!out) {
        out.close();
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::store_failed, "short write: " + tmp.string());
    }
}

}  // namespace

void atomic_write(const std::filesystem::path& path, ByteView contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    write_all_or_throw(tmp, contents.data(), contents.size());
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignore;
        std::filesystem::remove(tmp, ignore);
        fail(ErrorCode::store_failed, "rename failed: " + path.string() + ": " + ec.message());
    }
}

void atomic_write(const std::filesystem::path& path, std::string_view contents) {
    atomic_write(path, ByteView(reinterpret_cast<const std::uint8_t*>(contents.data()),
                                contents.size()));
}

std::optional<Bytes> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    Bytes data;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        data.insert(data.end(), buf, buf + in.gcount());
    return data;
}

std::optional<std::string> read_text_file(const std::filesystem::path& path) {
    auto bytes = read_file(path);
    if (!bytes) return std::nullopt;
    return std::string(bytes->begin(), bytes->end());
}

bool is_hex_id(std::string_view s, std::size_t digits) {
    if (s.size() != digits) return false;
    for (char c : s)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

}  // namespace cds::fsutil
