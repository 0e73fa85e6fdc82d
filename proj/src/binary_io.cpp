#include "risnoma/binary_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace risnoma::io {

std::vector<char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path + " for reading");
    }
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("error while reading " + path);
    }
    return data;
}

namespace {

void write_bytes_atomic(const std::string& path, const char* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp + " for writing");
        }
        out.write(data, static_cast<std::streamsize>(size));
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("error while writing " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp + " to " + path);
    }
}

} // namespace

void write_file_atomic(const std::string& path, const std::vector<char>& data) {
    write_bytes_atomic(path, data.data(), data.size());
}

void write_file_atomic(const std::string& path, std::string_view text) {
    write_bytes_atomic(path, text.data(), text.size());
}

} // namespace risnoma::io
