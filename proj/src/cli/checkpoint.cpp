#include "astralora/cli/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "astralora/errors.hpp"

namespace astralora::cli {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    Reader(std::string buf, std::string path) : buf_(std::move(buf)), path_(std::move(path)) {}

    std::uint64_t take_uint(std::size_t bytes) {
        if (pos_ + bytes > buf_.size())
            throw IoError(path_ + ": truncated at byte " + std::to_string(pos_));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < bytes; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i]))
                 << (8 * i);
        pos_ += bytes;
        return v;
    }

    std::string take_bytes(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw IoError(path_ + ": truncated at byte " + std::to_string(pos_));
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    double take_f64() { return std::bit_cast<double>(take_uint(8)); }

    std::size_t remaining() const { return buf_.size() - pos_; }
    bool exhausted() const { return pos_ == buf_.size(); }
    const std::string& path() const { return path_; }

private:
    std::string buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

void checkpoint_write(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string out;
    out += "ASTR";
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        require(t.name.size() <= 0xFFFF, "checkpoint: tensor name too long");
        require(!t.dims.empty() && t.dims.size() <= 0xFF,
                "checkpoint: tensor rank out of range");
        std::uint64_t count = 1;
        for (std::uint64_t d : t.dims) count *= d;
        require(count == t.data.size(), "checkpoint: dims do not match payload for " + t.name);
        put_u16(out, static_cast<std::uint16_t>(t.name.size()));
        out += t.name;
        out.push_back(static_cast<char>(t.dims.size()));
        for (std::uint64_t d : t.dims) put_u64(out, d);
        for (double v : t.data) put_f64(out, v);
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> checkpoint_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    Reader r(std::move(buf), path);

    if (r.take_bytes(4) != "ASTR") throw IoError(path + ": bad magic, not a checkpoint");
    const std::uint64_t version = r.take_uint(4);
    if (version != kCheckpointVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t count = r.take_uint(4);

    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        NamedTensor t;
        const std::uint64_t name_len = r.take_uint(2);
        t.name = r.take_bytes(name_len);
        const std::uint64_t rank = r.take_uint(1);
        if (rank == 0) throw IoError(path + ": tensor '" + t.name + "' has rank 0");
        std::uint64_t n = 1;
        for (std::uint64_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.take_uint(8));
            // overflow guard: reject dims no payload could satisfy
            if (t.dims.back() != 0 && n > (std::uint64_t{1} << 40) / t.dims.back())
                throw IoError(path + ": tensor '" + t.name + "' dims overflow");
            n *= t.dims.back();
        }
        if (n > r.remaining() / 8)
            throw IoError(path + ": tensor '" + t.name + "' payload exceeds the file");
        t.data.resize(n);
        for (std::uint64_t k = 0; k < n; ++k) t.data[k] = r.take_f64();
        tensors.push_back(std::move(t));
    }
    if (!r.exhausted()) throw IoError(path + ": trailing bytes after last tensor");
    return tensors;
}

} // namespace astralora::cli
