#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "kgda/errors.hpp"

namespace kgda::util {

// Little-endian binary writer with atomic replace on close: data goes to a
// sibling temp file first so readers never observe a half-written file.
class BinWriter {
  public:
    explicit BinWriter(const std::string& path) : path_(path), tmp_(path + ".tmp") {
        f_ = std::fopen(tmp_.c_str(), "wb");
        if (!f_) throw IoError("cannot open for write: " + tmp_);
    }

    ~BinWriter() {
        if (f_) {
            std::fclose(f_);
            std::remove(tmp_.c_str());
        }
    }

    BinWriter(const BinWriter&) = delete;
    BinWriter& operator=(const BinWriter&) = delete;

    void raw(const void* data, std::size_t n) {
        if (std::fwrite(data, 1, n, f_) != n) throw IoError("short write: " + tmp_);
    }

    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void i64(std::int64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }

    void f64_array(const double* p, std::size_t n) { raw(p, n * 8); }

    void commit() {
        if (std::fclose(f_) != 0) {
            f_ = nullptr;
            throw IoError("close failed: " + tmp_);
        }
        f_ = nullptr;
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) throw IoError("rename failed: " + tmp_ + " -> " + path_);
    }

  private:
    std::string path_;
    std::string tmp_;
    std::FILE* f_ = nullptr;
};

class BinReader {
  public:
    explicit BinReader(const std::string& path) : path_(path) {
        f_ = std::fopen(path.c_str(), "rb");
        if (!f_) throw IoError("cannot open for read: " + path);
    }

    ~BinReader() {
        if (f_) std::fclose(f_);
    }

    BinReader(const BinReader&) = delete;
    BinReader& operator=(const BinReader&) = delete;

    void raw(void* out, std::size_t n) {
        if (std::fread(out, 1, n, f_) != n) throw ParseError("truncated file: " + path_);
    }

    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }

    std::int64_t i64() {
        std::int64_t v;
        raw(&v, 8);
        return v;
    }

    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }

    std::string str(std::uint32_t max_len = 1u << 24) {
        std::uint32_t n = u32();
        if (n > max_len) throw ParseError("string length out of range in " + path_);
        std::string s(n, '\0');
        if (n) raw(s.data(), n);
        return s;
    }

    void f64_array(double* out, std::size_t n) { raw(out, n * 8); }

    bool at_eof() {
        int c = std::fgetc(f_);
        if (c == EOF) return true;
        std::ungetc(c, f_);
        return false;
    }

  private:
    std::string path_;
    std::FILE* f_ = nullptr;
};

}  // namespace kgda::util
