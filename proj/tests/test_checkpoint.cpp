#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "astralora/cli/checkpoint.hpp"
#include "astralora/errors.hpp"
#include "astralora/numlin/rng.hpp"

using namespace astralora;
using namespace astralora::cli;
using hybridnet::NamedTensor;
using numlin::RngStream;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/astralora-ckpt-" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<NamedTensor> random_tensors(RngStream& rng, std::size_t count) {
    std::vector<NamedTensor> out;
    for (std::size_t t = 0; t < count; ++t) {
        NamedTensor nt;
        nt.name = "layer" + std::to_string(t) + ".tensor" +
                  std::string(rng.index(3), 'x');
        const std::size_t rank = 1 + rng.index(3);
        std::size_t total = 1;
        for (std::size_t d = 0; d < rank; ++d) {
            const std::size_t dim = 1 + rng.index(5);
            nt.dims.push_back(dim);
            total *= dim;
        }
        nt.data.resize(total);
        rng.fill_normal(nt.data);
        out.push_back(std::move(nt));
    }
    return out;
}

} // namespace

TEST_CASE("many randomized round trips are bit exact") {
    RngStream rng(1, "ckpt");
    TempFile tmp("rt.bin");
    for (int trial = 0; trial < 1000; ++trial) {
        const auto tensors = random_tensors(rng, 1 + rng.index(4));
        checkpoint_write(tmp.path, tensors);
        const auto back = checkpoint_read(tmp.path);
        REQUIRE(back.size() == tensors.size());
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            CHECK(back[i].name == tensors[i].name);
            CHECK(back[i].dims == tensors[i].dims);
            REQUIRE(back[i].data.size() == tensors[i].data.size());
            for (std::size_t k = 0; k < tensors[i].data.size(); ++k)
                CHECK(back[i].data[k] == tensors[i].data[k]); // bitwise, incl. -0.0
        }
    }
}

TEST_CASE("special values survive the trip") {
    TempFile tmp("special.bin");
    NamedTensor nt;
    nt.name = "edge";
    nt.dims = {6};
    nt.data = {0.0, -0.0, 1e-308, 1.7976931348623157e308, -3.5, 1.0 / 3.0};
    checkpoint_write(tmp.path, {nt});
    const auto back = checkpoint_read(tmp.path);
    for (std::size_t i = 0; i < nt.data.size(); ++i) {
        CHECK(back[0].data[i] == nt.data[i]);
        CHECK(std::signbit(back[0].data[i]) == std::signbit(nt.data[i]));
    }
}

TEST_CASE("writing is deterministic") {
    RngStream rng(2, "ckpt-det");
    const auto tensors = random_tensors(rng, 3);
    TempFile a("det-a.bin"), b("det-b.bin");
    checkpoint_write(a.path, tensors);
    checkpoint_write(b.path, tensors);
    CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("the header is the documented magic and version") {
    TempFile tmp("hdr.bin");
    checkpoint_write(tmp.path, {});
    const auto bytes = slurp(tmp.path);
    REQUIRE(bytes.size() == 12);
    CHECK(bytes.substr(0, 4) == "ASTR");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1); // version 1 little-endian
    CHECK(bytes[5] == 0);
    CHECK(bytes[8] == 0); // zero tensors
}

TEST_CASE("every truncation prefix is rejected cleanly") {
    RngStream rng(3, "ckpt-fuzz");
    const auto tensors = random_tensors(rng, 2);
    TempFile full("fuzz-full.bin"), cut("fuzz-cut.bin");
    checkpoint_write(full.path, tensors);
    const auto bytes = slurp(full.path);
    REQUIRE(bytes.size() > 12);
    for (std::size_t len = 0; len < bytes.size(); ++len) {
        spit(cut.path, bytes.substr(0, len));
        CHECK_THROWS_AS(checkpoint_read(cut.path), IoError);
    }
}

TEST_CASE("corrupted headers are rejected") {
    RngStream rng(4, "ckpt-bad");
    const auto tensors = random_tensors(rng, 1);
    TempFile tmp("bad.bin");
    checkpoint_write(tmp.path, tensors);
    const auto bytes = slurp(tmp.path);

    SUBCASE("bad magic") {
        auto mod = bytes;
        mod[0] = 'B';
        spit(tmp.path, mod);
        CHECK_THROWS_WITH_AS(checkpoint_read(tmp.path), doctest::Contains("magic"),
                             IoError);
    }
    SUBCASE("unsupported version") {
        auto mod = bytes;
        mod[4] = 9;
        spit(tmp.path, mod);
        CHECK_THROWS_WITH_AS(checkpoint_read(tmp.path), doctest::Contains("version"),
                             IoError);
    }
    SUBCASE("trailing garbage") {
        spit(tmp.path, bytes + "extra");
        CHECK_THROWS_WITH_AS(checkpoint_read(tmp.path), doctest::Contains("trailing"),
                             IoError);
    }
    SUBCASE("zero tensor rank") {
        // find the rank byte: 12 header + 2 name length + name
        const std::size_t name_len = tensors[0].name.size();
        auto mod = bytes;
        mod[12 + 2 + name_len] = 0;
        spit(tmp.path, mod);
        CHECK_THROWS_AS(checkpoint_read(tmp.path), IoError);
    }
    SUBCASE("absurd dimension") {
        const std::size_t name_len = tensors[0].name.size();
        auto mod = bytes;
        const std::size_t dim_at = 12 + 2 + name_len + 1;
        for (int i = 0; i < 8; ++i) mod[dim_at + i] = static_cast<char>(0xff);
        spit(tmp.path, mod);
        CHECK_THROWS_AS(checkpoint_read(tmp.path), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(checkpoint_read("/nonexistent/never.bin"), IoError);
    }
}
